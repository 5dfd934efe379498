#pragma once

#include <array>
#include <memory>
#include <span>
#include <vector>

#include "perfstokes/fields.hpp"

namespace perfstokes::spectral {

/// How one grid axis is diagonalised.
enum class AxisKind {
    Periodic,       // real DFT, eigenvalues 4 n^2 sin^2(pi k / n)
    DirichletFace,  // unknowns on faces 1..n-1, face 0 is a wall (DST-I)
    DirichletCell,  // cell centres, wall half a cell away (DST-II)
    NeumannCell     // cell centres, zero flux through the walls (DCT-II)
};

/// Exact inverse of (-Lap_h + shift) on a hole-free grid, applied with
/// FFTW real-to-real transforms. The zero mode (present only when every axis
/// is Periodic or NeumannCell and shift == 0) is mapped to zero_mode_value
/// times its coefficient, or dropped when zero_mode_value == 0.
class LaplaceInverse {
public:
    LaplaceInverse(int dim, int n, std::array<AxisKind, 3> axes, double shift = 0.0, double zero_mode_value = 0.0);
    ~LaplaceInverse();
    LaplaceInverse(const LaplaceInverse&) = delete;
    LaplaceInverse& operator=(const LaplaceInverse&) = delete;

    /// out = (-Lap_h + shift)^{-1} in, on arrays of n^d entries laid out as in
    /// Grid. Entries on DirichletFace walls are left at zero.
    void apply(std::span<const double> in, std::span<double> out) const;

    bool has_zero_mode() const { return has_zero_mode_; }

private:
    struct Plans;
    int dim_;
    int n_;
    std::array<AxisKind, 3> axes_;
    std::array<int, 3> len_{1, 1, 1};
    std::vector<double> inverse_symbol_;
    mutable std::vector<double> work_;
    bool has_zero_mode_ = false;
    std::unique_ptr<Plans> plans_;
};

/// Axis kinds for velocity component `component` on a grid.
std::array<AxisKind, 3> velocity_axes(const Grid& grid, int component);
/// Axis kinds for the cell-centred pressure (Neumann in the box).
std::array<AxisKind, 3> pressure_axes(const Grid& grid);
/// Axis kinds for the cell-centred Dirichlet scalar (Poincare problem).
std::array<AxisKind, 3> scalar_axes(const Grid& grid);

struct InverseDivergence {
    VelocityField u;
    /// ||u||_{H^1} / ||f||_{L^2}, the constant of the estimate.
    double h1_constant = 0.0;
};

/// u = grad Lap_h^{-1} f on the hole-free periodic grid, so that div u = f to
/// round-off. Requires |mean f| <= 1e-10 ||f||.
InverseDivergence inverse_divergence(const PressureField& f);

}  // namespace perfstokes::spectral
