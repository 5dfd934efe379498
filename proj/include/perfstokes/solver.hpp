#pragma once

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "perfstokes/errors.hpp"
#include "perfstokes/fields.hpp"

namespace perfstokes::solver {

using LinearMap = std::function<void(std::span<const double>, std::span<double>)>;
using Matrix3 = std::array<std::array<double, 3>, 3>;

struct PcgResult {
    int iterations = 0;
    double residual = 0.0;  // ||b - A x|| / ||b||
    bool converged = false;
    /// alpha_k * <r_k, z_k>, the drop of the squared energy error per step.
    std::vector<double> energy_drops;
};

/// Preconditioned conjugate gradients from x = 0. `project`, when set, is
/// applied to the residual and the preconditioned residual (null-space
/// removal). Reductions are serial, so results are bitwise reproducible.
PcgResult pcg(const LinearMap& a, const LinearMap& precond, std::span<const double> b, std::span<double> x,
              double tol, int max_iter, const std::function<void(std::span<double>)>& project = {},
              bool record_energy = false);

struct MinresResult {
    int iterations = 0;
    double residual = 0.0;  // preconditioned residual estimate, relative
    bool converged = false;
    /// Preconditioned residual norm after every iteration (non-increasing).
    std::vector<double> history;
};

/// Preconditioned MINRES for a symmetric (possibly indefinite) operator and
/// an SPD preconditioner, starting from the given x. `accept`, when set, is
/// asked every 10 iterations whether the current x is good enough.
MinresResult minres(const LinearMap& a, const LinearMap& precond, std::span<const double> b, std::span<double> x,
                    double tol, int max_iter, const std::function<void(std::span<double>)>& project = {},
                    const std::function<bool(std::span<const double>)>& accept = {});

/// Momentum block -Lap u + K u on fluid faces. K couples components through
/// interpolate_faces, which keeps the block symmetric.
class MomentumOperator {
public:
    MomentumOperator(MasksPtr masks, std::optional<Matrix3> friction = std::nullopt);

    void apply(std::span<const double> u, std::span<double> out) const;
    const GridMasks& masks() const { return *masks_; }
    const std::optional<Matrix3>& friction() const { return friction_; }
    /// True when constants lie in the kernel (hole-free torus, no friction).
    bool singular() const;

private:
    MasksPtr masks_;
    std::optional<Matrix3> friction_;
    mutable std::vector<double> scratch_;
};

enum class SaddleMethod { Uzawa, Minres };

struct SaddleSpec {
    MasksPtr masks;
    SaddleMethod method = SaddleMethod::Uzawa;
    /// Zeroth-order coefficient matrix K in -Lap u + K u + grad p = f.
    std::optional<Matrix3> friction;
    VelocityField rhs;
    double tol = 1e-8;
    int max_iter = 500;
    int max_inner_iter = 5000;
    /// Inner momentum tolerance relative to the outer one.
    double inner_factor = 1e-2;
    /// Weight of the Neumann-Laplacian part of the Schur preconditioner
    /// I + gamma (-Lap_N)^{-1}; 0 selects the identity.
    double schur_gamma = 0.0;
    /// Estimate of the smallest momentum eigenvalue, used for the zero mode of
    /// the spectral preconditioner on the periodic cell. 0 picks a default.
    double zero_mode_shift = 0.0;
    /// Extra shift of the spectral momentum preconditioner, (-Lap + shift)^{-1};
    /// approximates the drag of many holes.
    double precond_shift = 0.0;
};

struct SaddleResult {
    VelocityField u;
    PressureField p;
    SolveReport report;
    double momentum_residual = 0.0;
    double continuity_residual = 0.0;
    int inner_iterations = 0;
    std::vector<double> energy_drops;
    std::vector<double> residual_history;  // MINRES only
};

/// Uzawa: conjugate gradients on the pressure Schur complement with a
/// preconditioned CG momentum solve inside; the velocity is recomputed from
/// the final pressure at the end.
/// Minres: MINRES on the whole saddle system with the block-diagonal
/// preconditioner diag(spectral momentum inverse, Schur preconditioner),
/// started from (A^{-1} f, 0).
/// Either way pressure is kept at zero mean over active cells.
SaddleResult solve_saddle(const SaddleSpec& spec, bool record_energy = false);

struct EigenResult {
    double value = 0.0;
    int iterations = 0;
    std::vector<double> history;
};

/// Smallest eigenvalue of the scalar -Lap on scalar_fluid entries by inverse
/// power iteration from the all-ones vector, stopped when successive Rayleigh
/// quotients agree to `tol` relatively.
EigenResult smallest_eigenvalue(const MasksPtr& masks, double tol, int max_iter = 500);

}  // namespace perfstokes::solver
