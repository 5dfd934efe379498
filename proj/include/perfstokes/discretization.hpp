#pragma once

#include <array>
#include <span>

#include "perfstokes/fields.hpp"

namespace perfstokes {

/// Raw MAC kernels on flat arrays laid out as in Grid. Inputs must hold zeros
/// on solid entries; outputs are written on every entry (zero where solid).
namespace kernels {

/// out = -Lap(u) for one velocity component. Solid neighbours count as 0 at
/// their own position; a no-slip wall half a cell away uses the ghost -u.
void neg_laplacian(const GridMasks& m, int component, std::span<const double> u, std::span<double> out);

/// out = -Lap(s) for the cell-centred scalar on scalar_fluid.
void neg_laplacian_scalar(const GridMasks& m, std::span<const double> s, std::span<double> out);

/// Cellwise divergence of all components (dim * n^d input) on active cells.
void divergence(const GridMasks& m, std::span<const double> u, std::span<double> out);

/// Face gradient of a cell-centred field on fluid faces.
void gradient(const GridMasks& m, std::span<const double> p, std::span<double> out);

/// Bilinear Dirichlet form <-Lap u, v> written edge by edge, so that
/// dirichlet_form(u, v) == dirichlet_form(v, u) bitwise.
double dirichlet_form(const GridMasks& m, std::span<const double> u, std::span<const double> v);

/// Four-point average of component `from` onto the faces of component `to`.
/// interpolate_faces(from, to) is the transpose of interpolate_faces(to, from).
void interpolate_faces(const GridMasks& m, int from, int to, std::span<const double> u, std::span<double> out);

double dot(std::span<const double> a, std::span<const double> b);

}  // namespace kernels

struct Norms {
    double l2 = 0.0;
    double h1semi = 0.0;
    double linf = 0.0;
};

PressureField divergence(const VelocityField& u);
VelocityField gradient(const PressureField& p);
/// Discrete vector Laplacian (negative semi-definite on fluid faces).
VelocityField laplacian(const VelocityField& u);

/// L2 inner product with cell-volume weight over fluid faces.
double inner(const VelocityField& u, const VelocityField& v);
double inner(const PressureField& p, const PressureField& q);
/// Weighted Dirichlet form: approximates the integral of grad u : grad v.
double energy_inner(const VelocityField& u, const VelocityField& v);

/// Midpoint quadrature over fluid entries; h1semi uses the same differences
/// as the Laplacian.
Norms norms(const VelocityField& u);
/// For pressure, h1semi is the L2 norm of the face gradient.
Norms norms(const PressureField& p);

/// Integral of each velocity component over the cell (midpoint rule).
std::array<double, 3> integral(const VelocityField& u);

}  // namespace perfstokes
