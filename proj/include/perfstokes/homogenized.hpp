#pragma once

#include <array>
#include <optional>
#include <string>

#include "perfstokes/fields.hpp"
#include "perfstokes/solver.hpp"

namespace perfstokes::homogenized {

using Matrix3 = solver::Matrix3;

enum class System { Stokes, Darcy, Brinkman };

System parse_system(const std::string& text);
std::string system_name(System s);

/// Closed-form body force, sampled at face centres.
///
///   constant:a,b[,c]  uniform vector
///   sinshear          (sin 2 pi x2, 0, 0)
///   gradient          discrete gradient of g = sin 2 pi x1 sin 2 pi x2,
///                     with g sampled at cell centres
///   field             a stored velocity field (same grid)
struct Forcing {
    enum class Kind { Constant, SinShear, Gradient, Field };
    Kind kind = Kind::SinShear;
    std::array<double, 3> value{0.0, 0.0, 0.0};
    std::optional<VelocityField> field;

    static Forcing constant(std::array<double, 3> v);
    static Forcing sinshear();
    static Forcing gradient();
    static Forcing from_field(VelocityField f);
    static Forcing parse(const std::string& text);
    std::string describe() const;
    bool is_gradient() const { return kind == Kind::Gradient; }
};

/// Potential of the gradient forcing at a point.
double gradient_potential(std::span<const double> x, int dim);

/// Forcing sampled on the fluid faces of `masks`.
VelocityField sample(const Forcing& f, const MasksPtr& masks);

/// Potential g sampled at active cell centres, mean removed.
PressureField sample_potential(const MasksPtr& masks);

struct LimitSolution {
    VelocityField u;
    PressureField p;
    SolveReport report;
    /// <grad u, grad u> + <K u, u> and <f, u>; equal for the exact discrete
    /// solution of Stokes and Brinkman.
    double energy = 0.0;
    double work = 0.0;
    /// Relative discrete divergence of u (Darcy).
    double divergence = 0.0;
};

/// Unit-cube masks with no-slip walls and no holes.
MasksPtr box_masks(int dim, int n);

/// Inverse of a symmetric positive definite d x d matrix; NotSPD otherwise.
Matrix3 inverse_spd(const Matrix3& a, int dim);
Matrix3 scalar_matrix(double s, int dim);

LimitSolution solve_stokes(const Forcing& f, int dim, int n, double tol);

/// Eliminates u = A (f - grad p) and solves div(A (f - grad p)) = 0 with zero
/// normal flux on the walls for zero-mean p.
LimitSolution solve_darcy(const Forcing& f, const Matrix3& a, int dim, int n, double tol);

/// -Lap u + grad p + sigma_star^{-2} A^{-1} u = f, div u = 0, u = 0 on walls.
LimitSolution solve_brinkman(const Forcing& f, const Matrix3& a, double sigma_star, int dim, int n, double tol);

/// Applies the constant matrix K to a face field: (K v)_c = K_cc v_c plus
/// K_cj times v_j interpolated onto the faces of c.
void apply_matrix(const GridMasks& m, const Matrix3& k, std::span<const double> v, std::span<double> out);

}  // namespace perfstokes::homogenized
