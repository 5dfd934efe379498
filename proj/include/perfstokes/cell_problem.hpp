#pragma once

#include <array>
#include <optional>
#include <vector>

#include "perfstokes/fields.hpp"
#include "perfstokes/geometry.hpp"
#include "perfstokes/solver.hpp"

namespace perfstokes::cell {

using Matrix3 = solver::Matrix3;

struct NormTriple {
    double l2_w = 0.0;
    double h1_w = 0.0;
    double l2_q = 0.0;
};

/// (w^i, q^i) for i = 1..d of -Lap w + grad q = c_eta^2 e^i on the periodic
/// cell with zero velocity on the hole and zero-mean pressure.
struct CellSolution {
    int dim = 2;
    int n = 0;
    double eta = 0.0;
    double c_eta = 0.0;
    /// Forcing e^i instead of c_eta^2 e^i (the fixed-eta classical problem).
    bool tartar = false;
    MasksPtr masks;
    std::vector<VelocityField> w;
    std::vector<PressureField> q;
    std::vector<NormTriple> norms;
    std::vector<SolveReport> reports;

    int iterations() const;
    double seconds() const;
};

struct CellOptions {
    double tol = 1e-8;
    int max_iter = 500;
    bool tartar = false;
};

CellSolution solve_cell(const geometry::CellGeometry& geom, int n, const CellOptions& options = {});

/// Single solve with forcing scale * direction (scale = c_eta^2, or 1 with
/// tartar). Used for linearity checks.
solver::SaddleResult solve_cell_direction(const geometry::CellGeometry& geom, int n, std::array<double, 3> direction,
                                          const CellOptions& options = {});

/// A_energy = c_eta^{-2} <grad w^i, grad w^j>, A_average = integral of (w^j)_i.
/// With tartar forcing the c_eta factors are dropped.
struct Permeability {
    int dim = 2;
    Matrix3 energy{};
    Matrix3 average{};
};

Permeability permeability(const CellSolution& sol);

/// Largest |A - A^T| entry.
double asymmetry(const Matrix3& a, int dim);
/// Smallest eigenvalue of the symmetric part.
double min_eigenvalue(const Matrix3& a, int dim);
double trace(const Matrix3& a, int dim);
double max_abs_difference(const Matrix3& a, const Matrix3& b, int dim);

/// Smallest power of two N >= 8 such that the hole spans `cells_across` grid
/// cells: N >= cells_across / (2 delta2 eta).
int n_rule(const geometry::HoleShape& hole, int dim, double eta, double cells_across = 16.0);

struct PoincareResult {
    double lambda = 0.0;
    double constant = 0.0;  // lambda^{-1/2}
    int iterations = 0;
};

PoincareResult poincare_constant(const geometry::CellGeometry& geom, int n, double tol = 1e-6);

struct SweepRow {
    double eta = 0.0;
    double c_eta = 0.0;
    int n = 0;
    Permeability a;
    NormTriple norms;  // direction 1
    std::optional<PoincareResult> poincare;
    int iterations = 0;
    double residual = 0.0;  // largest over the directions
    double seconds = 0.0;
};

struct BandRatios {
    double grad_w = 0.0;      // max/min of ||grad w|| / c_eta
    double q = 0.0;           // max/min of ||q|| / c_eta
    double w = 0.0;           // max/min of ||w||
    double poincare = 0.0;    // max/min of C_P c_eta, 0 when not computed
};

struct PermeabilityReport {
    int dim = 2;
    std::vector<SweepRow> rows;
    /// Intercept of the least-squares line of each A_energy entry against
    /// c_eta^2 (d = 2) or eta^{d-2} (d >= 3).
    Matrix3 limit{};
    double slope11 = 0.0;
    /// 1/pi when d = 2 (A = M^{-1} with M = pi I), absent otherwise.
    std::optional<double> reference;
    BandRatios bands;
};

struct SweepOptions {
    int dim = 2;
    geometry::HoleShape hole = geometry::HoleShape::ball(1.0);
    std::vector<double> etas;
    double cells_across = 16.0;
    int n_cap = 2048;
    double tol = 1e-8;
    bool poincare = true;
    double poincare_tol = 1e-6;
};

PermeabilityReport sweep_eta(const SweepOptions& options);

/// Extrapolation variable for the A(eta) limit.
double extrapolation_variable(int dim, double eta);

/// delta3 halfway between delta2 eta and 1/2.
double default_delta3(const geometry::HoleShape& hole, int dim, double eta);

/// Cell solution repeated over an m^d lattice, m = 1/epsilon, on a periodic
/// grid of m n cells: w_{eta,eps}(x) = w_eta(x / eps), same for q.
struct TiledSolution {
    double epsilon = 1.0;
    MasksPtr masks;
    std::vector<VelocityField> w;
    std::vector<PressureField> q;
};

TiledSolution tile_to_domain(const CellSolution& sol, double epsilon, int n_domain);

}  // namespace perfstokes::cell
