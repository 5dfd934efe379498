#include "perfstokes/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <numbers>
#include <string>

#include "perfstokes/discretization.hpp"
#include "perfstokes/spectral.hpp"

namespace perfstokes::solver {

namespace {

using kernels::dot;

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

void axpy(double a, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

void mask_values(std::span<double> v, const std::vector<std::uint8_t>& mask) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!mask[i]) v[i] = 0.0;
    }
}

void remove_masked_mean(std::span<double> v, const std::vector<std::uint8_t>& mask) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (mask[i]) {
            sum += v[i];
            ++count;
        }
    }
    const double mean = count ? sum / static_cast<double>(count) : 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = mask[i] ? v[i] - mean : 0.0;
}

// Capacity estimate of the smallest eigenvalue of -Lap on the perforated
// periodic cell. It only steers the preconditioner.
double capacity_estimate(const GridMasks& m) {
    if (!m.has_hole() || m.hole_cells_across <= 0.0) return 1.0;
    const double r = 0.5 * m.hole_cells_across / m.grid.n;
    const double holes = static_cast<double>(m.hole_count);
    if (m.grid.dim == 2) return holes * 2.0 * std::numbers::pi / std::max(std::log(1.0 / r), 1.0);
    return holes * 4.0 * std::numbers::pi * r;
}

double elapsed(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

PcgResult pcg(const LinearMap& a, const LinearMap& precond, std::span<const double> b, std::span<double> x,
              double tol, int max_iter, const std::function<void(std::span<double>)>& project,
              bool record_energy) {
    const std::size_t n = b.size();
    std::vector<double> r(b.begin(), b.end());
    std::vector<double> z(n), p(n), q(n);
    std::fill(x.begin(), x.end(), 0.0);
    if (project) project(r);

    PcgResult res;
    const double bnorm = norm2(r);
    if (bnorm == 0.0) {
        res.converged = true;
        return res;
    }
    precond(r, z);
    if (project) project(z);
    p = z;
    double rz = dot(r, z);
    for (int k = 1; k <= max_iter; ++k) {
        a(p, q);
        const double pq = dot(p, q);
        if (!(pq > 0.0)) break;
        const double alpha = rz / pq;
        axpy(alpha, p, x);
        axpy(-alpha, q, r);
        if (project) project(r);
        if (record_energy) res.energy_drops.push_back(alpha * rz);
        res.iterations = k;
        res.residual = norm2(r) / bnorm;
        if (res.residual <= tol) {
            res.converged = true;
            break;
        }
        precond(r, z);
        if (project) project(z);
        const double rz_next = dot(r, z);
        const double beta = rz_next / rz;
        rz = rz_next;
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    return res;
}

MinresResult minres(const LinearMap& a, const LinearMap& precond, std::span<const double> b, std::span<double> x,
                    double tol, int max_iter, const std::function<void(std::span<double>)>& project,
                    const std::function<bool(std::span<const double>)>& accept) {
    const std::size_t n = b.size();
    std::vector<double> v_prev(n), v(n), z(n), az(n), w_prev(n), w(n), w_next(n);
    a(x, az);
    for (std::size_t i = 0; i < n; ++i) v[i] = b[i] - az[i];
    if (project) project(v);
    precond(v, z);
    if (project) project(z);

    MinresResult res;
    double gamma = std::sqrt(std::max(dot(z, v), 0.0));
    const double gamma0 = gamma;
    if (gamma0 == 0.0) {
        res.converged = true;
        return res;
    }
    double gamma_prev = 1.0, eta = gamma;
    double s_prev = 0.0, s = 0.0, c_prev = 1.0, c = 1.0;
    for (int k = 1; k <= max_iter; ++k) {
        for (auto& e : z) e /= gamma;
        a(z, az);
        const double delta = dot(az, z);
        // Lanczos step; v_prev takes the next vector.
        for (std::size_t i = 0; i < n; ++i) v_prev[i] = az[i] - (delta / gamma) * v[i] - (gamma / gamma_prev) * v_prev[i];
        if (project) project(v_prev);
        std::swap(v_prev, v);
        // z is still needed for the update of w, so precondition into az.
        precond(v, az);
        if (project) project(az);
        const double gamma_next = std::sqrt(std::max(dot(az, v), 0.0));

        const double a0 = c * delta - c_prev * s * gamma;
        const double a1 = std::sqrt(a0 * a0 + gamma_next * gamma_next);
        const double a2 = s * delta + c_prev * c * gamma;
        const double a3 = s_prev * gamma;
        const double c_next = a0 / a1;
        const double s_next = gamma_next / a1;
        for (std::size_t i = 0; i < n; ++i) w_next[i] = (z[i] - a3 * w_prev[i] - a2 * w[i]) / a1;
        axpy(c_next * eta, w_next, x);
        eta = -s_next * eta;

        std::swap(w_prev, w);
        std::swap(w, w_next);
        std::swap(z, az);
        gamma_prev = gamma;
        gamma = gamma_next;
        c_prev = c;
        c = c_next;
        s_prev = s;
        s = s_next;

        res.iterations = k;
        res.residual = std::abs(eta) / gamma0;
        res.history.push_back(std::abs(eta));
        if (res.residual <= tol || gamma == 0.0 || (accept && k % 10 == 0 && accept(x))) {
            res.converged = true;
            break;
        }
    }
    return res;
}

MomentumOperator::MomentumOperator(MasksPtr masks, std::optional<Matrix3> friction)
    : masks_(std::move(masks)), friction_(friction) {
    scratch_.resize(masks_->grid.size());
}

bool MomentumOperator::singular() const {
    if (masks_->has_dirichlet_faces()) return false;
    if (!friction_) return true;
    for (int c = 0; c < masks_->grid.dim; ++c) {
        if ((*friction_)[c][c] != 0.0) return false;
    }
    return true;
}

void MomentumOperator::apply(std::span<const double> u, std::span<double> out) const {
    const GridMasks& m = *masks_;
    const int dim = m.grid.dim;
    const std::size_t block = m.grid.size();
    for (int c = 0; c < dim; ++c) {
        auto uc = u.subspan(c * block, block);
        auto oc = out.subspan(c * block, block);
        kernels::neg_laplacian(m, c, uc, oc);
        if (!friction_) continue;
        const auto& k = *friction_;
        const auto& fluid = m.face_fluid[c];
        for (std::size_t i = 0; i < block; ++i) {
            if (fluid[i]) oc[i] += k[c][c] * uc[i];
        }
        for (int j = 0; j < dim; ++j) {
            if (j == c || k[c][j] == 0.0) continue;
            kernels::interpolate_faces(m, j, c, u.subspan(j * block, block), scratch_);
            axpy(k[c][j], scratch_, oc);
        }
    }
}

SaddleResult solve_saddle(const SaddleSpec& spec, bool record_energy) {
    const auto start = std::chrono::steady_clock::now();
    require(spec.masks != nullptr, ErrorCode::InvalidArgument, "saddle problem without masks");
    require(spec.tol > 0.0 && spec.tol <= 1e-2, ErrorCode::InvalidArgument, "tolerance must lie in (0, 1e-2]");
    const GridMasks& m = *spec.masks;
    const Grid& g = m.grid;
    const int dim = g.dim;
    const std::size_t block = g.size();
    const std::size_t nu = block * dim;
    require(spec.rhs.data.size() == nu, ErrorCode::InvalidArgument, "right-hand side has the wrong size");
    require(m.active_cell_count() > 0, ErrorCode::SingularSystem, "no active pressure cells");
    const int comps = pressure_components(m);
    require(comps == 1, ErrorCode::SingularSystem,
            "fluid region splits into " + std::to_string(comps) + " disconnected pressure components");

    MomentumOperator op(spec.masks, spec.friction);
    const bool singular = op.singular();

    std::vector<double> f(spec.rhs.data);
    for (int c = 0; c < dim; ++c) mask_values(std::span<double>(f).subspan(c * block, block), m.face_fluid[c]);
    const double fnorm = norm2(f);
    if (singular) {
        for (int c = 0; c < dim; ++c) {
            double s = 0.0;
            for (std::size_t i = 0; i < block; ++i) s += f[c * block + i];
            require(std::abs(s) <= 1e-10 * fnorm * std::sqrt(static_cast<double>(block)) || fnorm == 0.0,
                    ErrorCode::SingularSystem, "forcing has a mean the periodic hole-free problem cannot balance");
        }
    }

    // Component-wise spectral preconditioner of the hole-free operator.
    std::vector<std::unique_ptr<spectral::LaplaceInverse>> inv(dim);
    const double tau0 = spec.zero_mode_shift > 0.0 ? spec.zero_mode_shift : capacity_estimate(m);
    for (int c = 0; c < dim; ++c) {
        const double shift = (spec.friction ? (*spec.friction)[c][c] : 0.0) + spec.precond_shift;
        inv[c] = std::make_unique<spectral::LaplaceInverse>(dim, g.n, spectral::velocity_axes(g, c), shift,
                                                            singular ? 0.0 : 1.0 / tau0);
    }
    auto precond = [&](std::span<const double> r, std::span<double> z) {
        for (int c = 0; c < dim; ++c) {
            inv[c]->apply(r.subspan(c * block, block), z.subspan(c * block, block));
            mask_values(z.subspan(c * block, block), m.face_fluid[c]);
        }
    };
    auto apply_a = [&](std::span<const double> x, std::span<double> y) { op.apply(x, y); };
    std::function<void(std::span<double>)> project_u;
    if (singular) {
        project_u = [&](std::span<double> v) {
            for (int c = 0; c < dim; ++c) remove_masked_mean(v.subspan(c * block, block), m.face_fluid[c]);
        };
    }

    SaddleResult out;
    out.u = VelocityField::zeros(spec.masks);
    out.p = PressureField::zeros(spec.masks);
    int outer = 0;
    auto momentum_solve = [&](std::span<const double> rhs, std::span<double> x, double tol) {
        auto r = pcg(apply_a, precond, rhs, x, tol, spec.max_inner_iter, project_u);
        out.inner_iterations += r.iterations;
        if (!r.converged) {
            throw NoConvergenceError("momentum solve stalled at relative residual " + std::to_string(r.residual),
                                     SolveReport{outer, r.residual, elapsed(start)});
        }
    };

    const double inner_tol = spec.tol * spec.inner_factor;
    std::vector<double>& u = out.u.data;
    std::vector<double>& p = out.p.data;
    momentum_solve(f, u, inner_tol);

    std::unique_ptr<spectral::LaplaceInverse> schur_inv;
    if (spec.schur_gamma > 0.0) {
        schur_inv = std::make_unique<spectral::LaplaceInverse>(dim, g.n, spectral::pressure_axes(g));
    }
    auto project_p = [&](std::span<double> v) { remove_masked_mean(v, m.cell_active); };
    auto schur_precond = [&](std::span<const double> r, std::span<double> z) {
        if (!schur_inv) {
            std::copy(r.begin(), r.end(), z.begin());
            return;
        }
        schur_inv->apply(r, z);
        for (std::size_t i = 0; i < block; ++i) z[i] = r[i] + spec.schur_gamma * z[i];
        project_p(z);
    };

    std::vector<double> r(block), z(block), d(block), sd(block), gd(nu), w(nu);
    if (spec.method == SaddleMethod::Minres) {
        kernels::divergence(m, u, r);
        const double r0 = norm2(r);
        const double floor = 1e-13 * g.n * norm2(u);
        const std::size_t total = nu + block;
        std::vector<double> x(total), b(total), y(total);
        std::copy(u.begin(), u.end(), x.begin());
        std::copy(f.begin(), f.end(), b.begin());
        auto apply_k = [&](std::span<const double> in, std::span<double> res) {
            op.apply(in.first(nu), res.first(nu));
            kernels::gradient(m, in.subspan(nu), gd);
            axpy(1.0, gd, res.first(nu));
            kernels::divergence(m, in.first(nu), res.subspan(nu));
            for (auto& v : res.subspan(nu)) v = -v;
        };
        auto precond_k = [&](std::span<const double> in, std::span<double> res) {
            precond(in.first(nu), res.first(nu));
            if (project_u) project_u(res.first(nu));
            schur_precond(in.subspan(nu), res.subspan(nu));
        };
        auto project_k = [&](std::span<double> v) {
            if (project_u) project_u(v.first(nu));
            project_p(v.subspan(nu));
        };
        auto true_residual = [&](std::span<const double> xs) {
            apply_k(xs, y);
            std::span<double> ru(y.data(), nu);
            for (std::size_t i = 0; i < nu; ++i) ru[i] = f[i] - ru[i];
            if (project_u) project_u(ru);
            out.momentum_residual = fnorm > 0.0 ? norm2(ru) / fnorm : norm2(ru);
            const double dn = norm2(std::span<const double>(y).subspan(nu));
            out.continuity_residual = r0 > floor ? dn / r0 : 0.0;
            return std::max(out.momentum_residual, out.continuity_residual);
        };
        auto accept = [&](std::span<const double> xs) { return true_residual(xs) <= spec.tol; };
        for (int attempt = 0;; ++attempt) {
            auto res = minres(apply_k, precond_k, b, x, spec.tol * spec.inner_factor, spec.max_iter - outer, project_k,
                              accept);
            outer += res.iterations;
            out.residual_history.insert(out.residual_history.end(), res.history.begin(), res.history.end());
            const double worst = true_residual(x);
            if (worst <= spec.tol) break;
            if (!res.converged || attempt == 3) {
                throw NoConvergenceError("saddle MINRES stopped at relative residual " + std::to_string(worst),
                                         SolveReport{outer, worst, elapsed(start)});
            }
        }
        std::copy(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(nu), u.begin());
        std::copy(x.begin() + static_cast<std::ptrdiff_t>(nu), x.end(), p.begin());
        project_p(p);
        out.report.iterations = outer;
        out.report.residual = std::max(out.momentum_residual, out.continuity_residual);
        out.report.seconds = elapsed(start);
        return out;
    }
    kernels::divergence(m, u, r);
    for (auto& v : r) v = -v;
    project_p(r);
    const double r0 = norm2(r);
    const double floor = 1e-13 * g.n * norm2(u);
    double rel = 0.0;
    if (r0 > floor) {
        schur_precond(r, z);
        d = z;
        double rz = dot(r, z);
        bool converged = false;
        for (outer = 1; outer <= spec.max_iter; ++outer) {
            kernels::gradient(m, d, gd);
            momentum_solve(gd, w, inner_tol);
            kernels::divergence(m, w, sd);
            for (auto& v : sd) v = -v;
            const double dsd = dot(d, sd);
            if (!(dsd > 0.0)) break;
            const double alpha = rz / dsd;
            axpy(alpha, d, p);
            axpy(-alpha, w, u);
            axpy(-alpha, sd, r);
            project_p(p);
            project_p(r);
            if (record_energy) out.energy_drops.push_back(alpha * rz);
            const double rn = norm2(r);
            rel = rn / r0;
            if (rel <= spec.tol || rn <= floor) {
                converged = true;
                break;
            }
            schur_precond(r, z);
            const double rz_next = dot(r, z);
            const double beta = rz_next / rz;
            rz = rz_next;
            for (std::size_t i = 0; i < block; ++i) d[i] = z[i] + beta * d[i];
        }
        if (!converged) {
            throw NoConvergenceError("pressure iteration stopped at relative residual " + std::to_string(rel),
                                     SolveReport{std::min(outer, spec.max_iter), rel, elapsed(start)});
        }
    }

    // Velocity from the final pressure.
    std::vector<double> rhs(f);
    kernels::gradient(m, p, gd);
    axpy(-1.0, gd, rhs);
    momentum_solve(rhs, u, inner_tol * 0.1);

    op.apply(u, w);
    for (std::size_t i = 0; i < nu; ++i) w[i] = rhs[i] - w[i];
    if (project_u) project_u(w);
    out.momentum_residual = fnorm > 0.0 ? norm2(w) / fnorm : norm2(w);
    kernels::divergence(m, u, r);
    out.continuity_residual = r0 > floor ? norm2(r) / r0 : 0.0;
    out.report.iterations = outer;
    out.report.residual = std::max(out.momentum_residual, out.continuity_residual);
    out.report.seconds = elapsed(start);
    return out;
}

EigenResult smallest_eigenvalue(const MasksPtr& masks, double tol, int max_iter) {
    const GridMasks& m = *masks;
    require(m.has_scalar_dirichlet(), ErrorCode::NoDirichletData,
            "scalar problem has no Dirichlet entries, so the smallest eigenvalue is 0");
    const std::size_t size = m.grid.size();
    std::size_t fluid = 0;
    for (auto f : m.scalar_fluid) fluid += f;
    require(fluid > 0, ErrorCode::InvalidArgument, "scalar problem has no fluid entries");

    spectral::LaplaceInverse inv(m.grid.dim, m.grid.n, spectral::scalar_axes(m.grid), 0.0,
                                 1.0 / capacity_estimate(m));
    auto apply_a = [&](std::span<const double> x, std::span<double> y) { kernels::neg_laplacian_scalar(m, x, y); };
    auto precond = [&](std::span<const double> r, std::span<double> z) {
        inv.apply(r, z);
        mask_values(z, m.scalar_fluid);
    };

    std::vector<double> x(size), y(size), ly(size);
    for (std::size_t i = 0; i < size; ++i) x[i] = m.scalar_fluid[i] ? 1.0 : 0.0;
    const double inner_tol = std::min(1e-8, tol * 1e-2);
    EigenResult res;
    double previous = 0.0;
    for (int k = 1; k <= max_iter; ++k) {
        const double xn = norm2(x);
        for (auto& v : x) v /= xn;
        auto r = pcg(apply_a, precond, x, y, inner_tol, 20000);
        if (!r.converged) {
            throw NoConvergenceError("inner eigen solve stalled", SolveReport{k, r.residual, 0.0});
        }
        apply_a(y, ly);
        const double lambda = dot(y, ly) / dot(y, y);
        res.history.push_back(lambda);
        res.value = lambda;
        res.iterations = k;
        if (k > 1 && std::abs(lambda - previous) <= tol * lambda) return res;
        previous = lambda;
        x = y;
    }
    throw NoConvergenceError("inverse power iteration did not settle",
                             SolveReport{max_iter, std::abs(res.value - previous) / res.value, 0.0});
}

}  // namespace perfstokes::solver
