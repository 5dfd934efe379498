#include "perfstokes/dns.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <ostream>

#include "perfstokes/format.hpp"

namespace perfstokes::dns {

int default_cap(int dim) { return dim == 2 ? 1024 : 128; }

int grid_for(const geometry::PerforatedGeometry& geom, int n_cap, double cells_across) {
    int n = 16;
    if (!geom.k_set.empty()) {
        const double need = cells_across / (2.0 * geom.hole.delta2(geom.dim) * geom.a_eps);
        while (n < need) n *= 2;
    }
    require(n <= n_cap, ErrorCode::BudgetExceeded,
            "holes need N=" + std::to_string(n) + " but the cap is " + std::to_string(n_cap));
    return n;
}

double friction_estimate(const geometry::PerforatedGeometry& geom) {
    if (geom.k_set.empty()) return 0.0;
    const double r = geom.hole.delta2(geom.dim) * geom.a_eps / geom.epsilon;
    double k = 0.0;
    if (geom.dim == 2) {
        k = (std::log(1.0 / r) - 1.31) / (4.0 * std::numbers::pi);
    } else {
        k = (1.0 - 1.76 * r) / (6.0 * std::numbers::pi * r);
    }
    k = std::max(k, 2e-3);
    return 1.0 / (geom.epsilon * geom.epsilon * k);
}

DnsResult solve_dns(const geometry::PerforatedGeometry& geom, const homogenized::Forcing& f, int n,
                    const DnsOptions& options) {
    DnsResult res;
    res.geometry = geom;
    res.n = n;
    res.masks = std::make_shared<const GridMasks>(geom.k_set.empty() ? geometry::rasterize_unchecked(geom, n)
                                                                      : geometry::rasterize(geom, n));
    res.box = homogenized::box_masks(geom.dim, n);
    if (!geom.k_set.empty()) res.params = regimes::derive_params(geom.dim, geom.epsilon, geom.a_eps);

    solver::SaddleSpec spec;
    spec.masks = res.masks;
    spec.rhs = homogenized::sample(f, res.masks);
    spec.tol = options.tol;
    spec.max_iter = options.max_iter;
    spec.method = solver::SaddleMethod::Minres;
    spec.inner_factor = 1e-2;
    spec.schur_gamma = options.schur_gamma >= 0.0 ? options.schur_gamma : 0.3 * friction_estimate(geom);
    spec.precond_shift = options.precond_shift;
    auto r = solver::solve_saddle(spec);
    res.report = r.report;
    res.inner_iterations = r.inner_iterations;
    res.u = std::move(r.u);
    res.p = std::move(r.p);
    res.p.remove_mean();

    res.u_ext = VelocityField::zeros(res.box);
    res.u_ext.data = res.u.data;
    res.u_norms = norms(res.u);
    res.ext_norms = norms(res.u_ext);
    res.energy = energy_inner(res.u, res.u);
    res.work = inner(spec.rhs, res.u);
    return res;
}

double CoarseField::mean(int component) const {
    double s = 0.0;
    const std::size_t nb = weights.size();
    for (std::size_t b = 0; b < nb; ++b) s += weights[b] * values[component * nb + b];
    return s;
}

std::vector<double> velocity_at_centres(const VelocityField& u) {
    const Grid& g = u.masks->grid;
    const std::size_t block = g.size();
    std::vector<double> out(block * g.dim);
    for (int c = 0; c < g.dim; ++c) {
        const auto uc = u.component(c);
        const std::size_t stride = g.stride(c);
        for (std::size_t idx = 0; idx < block; ++idx) {
            const int ic = g.coords(idx)[c];
            const std::size_t up = ic == g.n - 1 ? idx - (g.n - 1) * stride : idx + stride;
            out[c * block + idx] = 0.5 * (uc[idx] + uc[up]);
        }
    }
    return out;
}

CoarseField coarse_grain_cells(const Grid& grid, std::span<const double> values, int components, double window,
                               double epsilon) {
    require(window >= 2.0 * epsilon * (1.0 - 1e-12), ErrorCode::WindowTooSmall,
            "window " + format_shortest(window) + " is below 2 epsilon = " + format_shortest(2.0 * epsilon));
    require(window > 0.0, ErrorCode::WindowTooSmall, "window must be positive");
    CoarseField cg;
    cg.dim = grid.dim;
    cg.components = components;
    cg.blocks = std::max(1, static_cast<int>(std::ceil(1.0 / window - 1e-9)));
    std::size_t nb = 1;
    for (int a = 0; a < grid.dim; ++a) nb *= static_cast<std::size_t>(cg.blocks);
    const std::size_t size = grid.size();
    cg.cell_block.resize(size);
    std::vector<double> counts(nb, 0.0);
    for (std::size_t idx = 0; idx < size; ++idx) {
        const auto c = grid.coords(idx);
        std::size_t b = 0;
        std::size_t mult = 1;
        for (int a = 0; a < grid.dim; ++a) {
            const double x = (c[a] + 0.5) * grid.h();
            const int k = std::min(cg.blocks - 1, static_cast<int>(std::floor(x / window)));
            b += mult * static_cast<std::size_t>(k);
            mult *= static_cast<std::size_t>(cg.blocks);
        }
        cg.cell_block[idx] = b;
        counts[b] += 1.0;
    }
    cg.values.assign(nb * components, 0.0);
    for (int comp = 0; comp < components; ++comp) {
        for (std::size_t idx = 0; idx < size; ++idx) cg.values[comp * nb + cg.cell_block[idx]] += values[comp * size + idx];
        for (std::size_t b = 0; b < nb; ++b) {
            if (counts[b] > 0.0) cg.values[comp * nb + b] /= counts[b];
        }
    }
    cg.weights.resize(nb);
    for (std::size_t b = 0; b < nb; ++b) cg.weights[b] = counts[b] / static_cast<double>(size);
    return cg;
}

CoarseField coarse_grain(const VelocityField& u, double window, double epsilon) {
    const auto centres = velocity_at_centres(u);
    return coarse_grain_cells(u.masks->grid, centres, u.dim(), window, epsilon);
}

namespace {

bool constant_eta(const regimes::ScalingFamily& family) {
    const auto* pl = std::get_if<regimes::PowerLaw>(&family.kind);
    return pl && pl->exponent == 1.0;
}

// Relative (or absolute) L2 distance over active cells after mean removal.
double pressure_error(const PressureField& p, const PressureField& ref, const GridMasks& m, bool& absolute) {
    double sp = 0.0, sr = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < m.cell_active.size(); ++i) {
        if (!m.cell_active[i]) continue;
        sp += p.data[i];
        sr += ref.data[i];
        ++count;
    }
    sp /= static_cast<double>(count);
    sr /= static_cast<double>(count);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < m.cell_active.size(); ++i) {
        if (!m.cell_active[i]) continue;
        const double a = p.data[i] - sp;
        const double b = ref.data[i] - sr;
        num += (a - b) * (a - b);
        den += b * b;
    }
    const double vol = m.grid.cell_volume();
    num = std::sqrt(num * vol);
    den = std::sqrt(den * vol);
    if (den <= 1e-12) {
        absolute = true;
        return num;
    }
    return num / den;
}

}  // namespace

Comparison compare_regime(const CompareOptions& options) {
    const int dim = options.family.dim;
    require(!options.eps_list.empty(), ErrorCode::InvalidArgument, "empty epsilon list");
    Comparison cmp;
    cmp.regime = regimes::classify(options.family);
    const int cap = options.n_cap > 0 ? options.n_cap : default_cap(dim);

    // Resolve every geometry and grid first so budget failures surface before
    // any expensive solve.
    std::vector<geometry::PerforatedGeometry> geoms;
    std::vector<int> grids;
    for (double eps : options.eps_list) {
        geoms.push_back(geometry::build_perforated(dim, eps, options.family.hole_size(eps), options.hole));
        grids.push_back(grid_for(geoms.back(), cap, options.cells_across));
    }

    const bool needs_a = !std::holds_alternative<regimes::SmallHoles>(cmp.regime);
    if (options.permeability) {
        cmp.permeability = *options.permeability;
        cmp.permeability_source = "given";
    } else if (needs_a && constant_eta(options.family)) {
        const double eta = std::get<regimes::PowerLaw>(options.family.kind).coefficient;
        const int n = cell::n_rule(options.hole, dim, eta);
        const auto geom = geometry::build_cell(dim, eta, options.hole, cell::default_delta3(options.hole, dim, eta));
        cell::CellOptions co;
        co.tol = options.sweep_tol;
        cmp.permeability = cell::permeability(cell::solve_cell(geom, n, co)).energy;
        cmp.permeability_source = "cell eta=" + format_shortest(eta) + " N=" + std::to_string(n);
    } else if (needs_a) {
        require(!options.sweep_etas.empty(), ErrorCode::ConfigError, "extrapolated permeability needs sweep etas");
        cell::SweepOptions so;
        so.dim = dim;
        so.hole = options.hole;
        so.etas = options.sweep_etas;
        so.tol = options.sweep_tol;
        so.poincare = false;
        so.n_cap = dim == 2 ? 2048 : 128;
        cmp.permeability = cell::sweep_eta(so).limit;
        cmp.permeability_source = "sweep limit";
    }
    if (needs_a) {
        // Symmetrize: the limit solvers require an exactly symmetric matrix.
        for (int i = 0; i < dim; ++i) {
            for (int j = i + 1; j < dim; ++j) {
                const double s = 0.5 * (cmp.permeability[i][j] + cmp.permeability[j][i]);
                cmp.permeability[i][j] = cmp.permeability[j][i] = s;
            }
        }
    }

    for (std::size_t k = 0; k < geoms.size(); ++k) {
        const auto& geom = geoms[k];
        const int n = grids[k];
        DnsOptions dopt;
        dopt.tol = options.tol;
        const auto d = solve_dns(geom, options.forcing, n, dopt);

        ComparisonRow row;
        row.epsilon = geom.epsilon;
        row.a_eps = geom.a_eps;
        row.sigma = regimes::sigma(dim, geom.epsilon, geom.a_eps);
        row.n = n;
        row.holes = geom.k_set.size();
        row.l2_ext = d.ext_norms.l2;
        row.h1_ext = d.ext_norms.h1semi;
        row.energy_gap = d.work != 0.0 ? std::abs(d.energy - d.work) / std::abs(d.work) : std::abs(d.energy - d.work);
        row.extension_gap = std::max(std::abs(d.ext_norms.l2 - d.u_norms.l2), std::abs(d.ext_norms.h1semi - d.u_norms.h1semi));
        row.iterations = d.report.iterations;
        row.residual = d.report.residual;
        row.seconds = d.report.seconds;

        if (std::holds_alternative<regimes::LargeHoles>(cmp.regime)) {
            const auto lim = homogenized::solve_darcy(options.forcing, cmp.permeability, dim, n, options.tol);
            const double window = options.window_factor * geom.epsilon;
            const auto cg = coarse_grain(d.u_ext, window, geom.epsilon);
            const auto ref = velocity_at_centres(lim.u);
            const double s2 = row.sigma * row.sigma;
            const std::size_t size = d.box->grid.size();
            double num = 0.0, den = 0.0;
            for (int c = 0; c < dim; ++c) {
                for (std::size_t i = 0; i < size; ++i) {
                    const double diff = cg.at_cell(c, i) / s2 - ref[c * size + i];
                    num += diff * diff;
                    den += ref[c * size + i] * ref[c * size + i];
                }
            }
            const double vol = d.box->grid.cell_volume();
            num = std::sqrt(num * vol);
            den = std::sqrt(den * vol);
            row.absolute = den <= 1e-12;
            row.rel_l2_velocity = row.absolute ? num : num / den;
            row.rel_l2_pressure = pressure_error(d.p, lim.p, *d.masks, row.absolute);
        } else {
            homogenized::LimitSolution lim;
            if (std::holds_alternative<regimes::SmallHoles>(cmp.regime)) {
                lim = homogenized::solve_stokes(options.forcing, dim, n, options.tol);
            } else {
                const double s = std::get<regimes::Critical>(cmp.regime).sigma_star;
                lim = homogenized::solve_brinkman(options.forcing, cmp.permeability, s, dim, n, options.tol);
            }
            auto diff = d.u_ext;
            diff -= lim.u;
            const auto dn = norms(diff);
            const auto ln = norms(lim.u);
            row.absolute = ln.l2 <= 1e-12;
            row.rel_l2_velocity = row.absolute ? dn.l2 : dn.l2 / ln.l2;
            if (std::holds_alternative<regimes::SmallHoles>(cmp.regime)) {
                row.rel_h1_velocity = row.absolute ? dn.h1semi : dn.h1semi / ln.h1semi;
            }
            row.rel_l2_pressure = pressure_error(d.p, lim.p, *d.masks, row.absolute);
        }
        cmp.rows.push_back(row);
    }
    return cmp;
}

PerforatedBands perforated_bands(const std::vector<ComparisonRow>& rows) {
    PerforatedBands b;
    if (rows.size() < 2) return b;
    auto ratio = [&](auto f) {
        double lo = f(rows.front()), hi = lo;
        for (const auto& r : rows) {
            lo = std::min(lo, f(r));
            hi = std::max(hi, f(r));
        }
        return hi / lo;
    };
    b.poincare = ratio([](const ComparisonRow& r) { return r.l2_ext / (r.h1_ext * r.sigma); });
    b.gradient = ratio([](const ComparisonRow& r) { return r.h1_ext / r.sigma; });
    b.l2 = ratio([](const ComparisonRow& r) { return r.l2_ext / (r.sigma * r.sigma); });
    return b;
}

void write_comparison_csv(std::ostream& out, const Comparison& cmp, bool with_timing) {
    out << "epsilon,a_eps,sigma,N,holes,rel_l2_velocity,rel_l2_pressure,rel_h1_velocity,absolute,l2_ext,h1_ext,"
           "energy_gap,extension_gap,iterations,residual,seconds\n";
    for (const auto& r : cmp.rows) {
        out << format_real(r.epsilon) << ',' << format_real(r.a_eps) << ',' << format_real(r.sigma) << ',' << r.n << ','
            << r.holes << ',' << format_real(r.rel_l2_velocity) << ',' << format_real(r.rel_l2_pressure) << ','
            << format_real(r.rel_h1_velocity) << ',' << (r.absolute ? 1 : 0) << ',' << format_real(r.l2_ext) << ','
            << format_real(r.h1_ext) << ',' << format_real(r.energy_gap) << ',' << format_real(r.extension_gap) << ','
            << r.iterations << ',' << format_real(r.residual) << ',' << format_real(with_timing ? r.seconds : 0.0) << '\n';
    }
}

}  // namespace perfstokes::dns
