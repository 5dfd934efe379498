#include "perfstokes/cell_problem.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "perfstokes/discretization.hpp"
#include "perfstokes/parallel.hpp"
#include "perfstokes/regimes.hpp"

namespace perfstokes::cell {

int CellSolution::iterations() const {
    int total = 0;
    for (const auto& r : reports) total += r.iterations;
    return total;
}

double CellSolution::seconds() const {
    double total = 0.0;
    for (const auto& r : reports) total += r.seconds;
    return total;
}

namespace {

MasksPtr cell_masks(const geometry::CellGeometry& geom, int n) {
    require(geom.has_hole(), ErrorCode::MissingHole,
            "the hole-free periodic cell problem with constant forcing has no solution");
    return std::make_shared<const GridMasks>(geometry::rasterize(geom, n));
}

solver::SaddleResult solve_with_masks(const MasksPtr& masks, double scale, std::array<double, 3> direction,
                                      const CellOptions& options) {
    solver::SaddleSpec spec;
    spec.masks = masks;
    spec.rhs = VelocityField::zeros(masks);
    spec.tol = options.tol;
    spec.max_iter = options.max_iter;
    for (int c = 0; c < masks->grid.dim; ++c) {
        auto comp = spec.rhs.component(c);
        std::fill(comp.begin(), comp.end(), scale * direction[c]);
    }
    auto r = solver::solve_saddle(spec);
    r.p.remove_mean();
    return r;
}

double forcing_scale(const geometry::CellGeometry& geom, const CellOptions& options) {
    const double c = regimes::c_eta(geom.dim, *geom.eta);
    return options.tartar ? 1.0 : c * c;
}

}  // namespace

CellSolution solve_cell(const geometry::CellGeometry& geom, int n, const CellOptions& options) {
    const auto masks = cell_masks(geom, n);
    CellSolution sol;
    sol.dim = geom.dim;
    sol.n = n;
    sol.eta = *geom.eta;
    sol.c_eta = regimes::c_eta(geom.dim, sol.eta);
    sol.tartar = options.tartar;
    sol.masks = masks;
    const double scale = forcing_scale(geom, options);

    std::vector<solver::SaddleResult> results(geom.dim);
    run_indexed(geom.dim, [&](std::size_t i) {
        std::array<double, 3> e{0.0, 0.0, 0.0};
        e[i] = 1.0;
        results[i] = solve_with_masks(masks, scale, e, options);
    });
    for (auto& r : results) {
        NormTriple nt;
        const auto nw = norms(r.u);
        nt.l2_w = nw.l2;
        nt.h1_w = nw.h1semi;
        nt.l2_q = norms(r.p).l2;
        sol.norms.push_back(nt);
        sol.reports.push_back(r.report);
        sol.w.push_back(std::move(r.u));
        sol.q.push_back(std::move(r.p));
    }
    return sol;
}

solver::SaddleResult solve_cell_direction(const geometry::CellGeometry& geom, int n, std::array<double, 3> direction,
                                          const CellOptions& options) {
    return solve_with_masks(cell_masks(geom, n), forcing_scale(geom, options), direction, options);
}

Permeability permeability(const CellSolution& sol) {
    Permeability a;
    a.dim = sol.dim;
    const double scale = sol.tartar ? 1.0 : 1.0 / (sol.c_eta * sol.c_eta);
    for (int j = 0; j < sol.dim; ++j) {
        const auto avg = integral(sol.w[j]);
        for (int i = 0; i < sol.dim; ++i) {
            a.average[i][j] = avg[i];
            a.energy[i][j] = scale * energy_inner(sol.w[i], sol.w[j]);
        }
    }
    return a;
}

double asymmetry(const Matrix3& a, int dim) {
    double m = 0.0;
    for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) m = std::max(m, std::abs(a[i][j] - a[j][i]));
    }
    return m;
}

double min_eigenvalue(const Matrix3& a, int dim) {
    Eigen::MatrixXd m(dim, dim);
    for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) m(i, j) = 0.5 * (a[i][j] + a[j][i]);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

double trace(const Matrix3& a, int dim) {
    double t = 0.0;
    for (int i = 0; i < dim; ++i) t += a[i][i];
    return t;
}

double max_abs_difference(const Matrix3& a, const Matrix3& b, int dim) {
    double m = 0.0;
    for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) m = std::max(m, std::abs(a[i][j] - b[i][j]));
    }
    return m;
}

int n_rule(const geometry::HoleShape& hole, int dim, double eta, double cells_across) {
    const double need = cells_across / (2.0 * hole.delta2(dim) * eta);
    int n = 8;
    while (n < need) n *= 2;
    return n;
}

PoincareResult poincare_constant(const geometry::CellGeometry& geom, int n, double tol) {
    require(geom.has_hole(), ErrorCode::NoDirichletData, "hole-free cell has no Poincare constant");
    auto masks = std::make_shared<const GridMasks>(geometry::rasterize(geom, n));
    const auto eig = solver::smallest_eigenvalue(masks, tol);
    return {eig.value, 1.0 / std::sqrt(eig.value), eig.iterations};
}

double extrapolation_variable(int dim, double eta) {
    if (dim == 2) {
        const double c = regimes::c_eta(2, eta);
        return c * c;
    }
    return std::pow(eta, dim - 2);
}

double default_delta3(const geometry::HoleShape& hole, int dim, double eta) {
    return 0.5 * (hole.delta2(dim) * eta + 0.5);
}

namespace {

double band(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *hi / *lo;
}

}  // namespace

PermeabilityReport sweep_eta(const SweepOptions& options) {
    require(!options.etas.empty(), ErrorCode::InvalidArgument, "empty eta list");
    for (std::size_t i = 1; i < options.etas.size(); ++i) {
        require(options.etas[i] < options.etas[i - 1], ErrorCode::InvalidArgument, "eta list must be strictly decreasing");
    }
    PermeabilityReport rep;
    rep.dim = options.dim;
    if (options.dim == 2) rep.reference = 1.0 / std::numbers::pi;

    for (double eta : options.etas) {
        const int n = n_rule(options.hole, options.dim, eta, options.cells_across);
        require(n <= options.n_cap, ErrorCode::BudgetExceeded,
                "eta=" + std::to_string(eta) + " needs N=" + std::to_string(n) + " above the cap");
        const auto geom = geometry::build_cell(options.dim, eta, options.hole, default_delta3(options.hole, options.dim, eta));
        CellOptions co;
        co.tol = options.tol;
        const auto sol = solve_cell(geom, n, co);
        SweepRow row;
        row.eta = eta;
        row.c_eta = sol.c_eta;
        row.n = n;
        row.a = permeability(sol);
        row.norms = sol.norms[0];
        row.iterations = sol.iterations();
        for (const auto& r : sol.reports) row.residual = std::max(row.residual, r.residual);
        row.seconds = sol.seconds();
        if (options.poincare) row.poincare = poincare_constant(geom, n, options.poincare_tol);
        rep.rows.push_back(row);
    }

    // Least squares of each entry against the extrapolation variable.
    const std::size_t m = rep.rows.size();
    double sx = 0.0, sxx = 0.0;
    for (const auto& r : rep.rows) {
        const double x = extrapolation_variable(options.dim, r.eta);
        sx += x;
        sxx += x * x;
    }
    const double det = static_cast<double>(m) * sxx - sx * sx;
    for (int i = 0; i < options.dim; ++i) {
        for (int j = 0; j < options.dim; ++j) {
            double sy = 0.0, sxy = 0.0;
            for (const auto& r : rep.rows) {
                const double x = extrapolation_variable(options.dim, r.eta);
                sy += r.a.energy[i][j];
                sxy += x * r.a.energy[i][j];
            }
            if (m < 2 || det == 0.0) {
                rep.limit[i][j] = sy / static_cast<double>(m);
                continue;
            }
            const double slope = (static_cast<double>(m) * sxy - sx * sy) / det;
            rep.limit[i][j] = (sy - slope * sx) / static_cast<double>(m);
            if (i == 0 && j == 0) rep.slope11 = slope;
        }
    }

    std::vector<double> gw, q, w, cp;
    for (const auto& r : rep.rows) {
        gw.push_back(r.norms.h1_w / r.c_eta);
        q.push_back(r.norms.l2_q / r.c_eta);
        w.push_back(r.norms.l2_w);
        if (r.poincare) cp.push_back(r.poincare->constant * r.c_eta);
    }
    rep.bands = {band(gw), band(q), band(w), band(cp)};
    return rep;
}

TiledSolution tile_to_domain(const CellSolution& sol, double epsilon, int n_domain) {
    require(epsilon > 0.0 && epsilon <= 1.0, ErrorCode::AlignmentError, "epsilon must lie in (0, 1]");
    const double inv = 1.0 / epsilon;
    const int m = static_cast<int>(std::lround(inv));
    require(std::abs(inv - m) <= 1e-9 * inv, ErrorCode::AlignmentError, "1/epsilon must be an integer");
    require(n_domain == m * sol.n, ErrorCode::AlignmentError,
            "domain grid must have (1/epsilon) * " + std::to_string(sol.n) + " cells per side");

    const GridMasks& cm = *sol.masks;
    auto dm = std::make_shared<GridMasks>();
    dm->grid = Grid{sol.dim, n_domain, Boundary::Periodic};
    dm->hole_cells_across = cm.hole_cells_across;
    dm->hole_count = cm.hole_count * static_cast<std::size_t>(std::pow(m, sol.dim));
    const std::size_t size = dm->grid.size();
    std::vector<std::size_t> source(size);
    for (std::size_t idx = 0; idx < size; ++idx) {
        const auto c = dm->grid.coords(idx);
        source[idx] = cm.grid.index(c[0] % sol.n, c[1] % sol.n, c[2] % sol.n);
    }
    auto tile = [&](const std::vector<std::uint8_t>& from) {
        std::vector<std::uint8_t> to(size);
        for (std::size_t i = 0; i < size; ++i) to[i] = from[source[i]];
        return to;
    };
    for (int c = 0; c < sol.dim; ++c) dm->face_fluid[c] = tile(cm.face_fluid[c]);
    dm->cell_active = tile(cm.cell_active);
    dm->scalar_fluid = tile(cm.scalar_fluid);

    TiledSolution t;
    t.epsilon = epsilon;
    t.masks = dm;
    for (int i = 0; i < sol.dim; ++i) {
        auto w = VelocityField::zeros(dm);
        for (int c = 0; c < sol.dim; ++c) {
            const auto from = sol.w[i].component(c);
            auto to = w.component(c);
            for (std::size_t k = 0; k < size; ++k) to[k] = from[source[k]];
        }
        auto q = PressureField::zeros(dm);
        for (std::size_t k = 0; k < size; ++k) q.data[k] = sol.q[i].data[source[k]];
        t.w.push_back(std::move(w));
        t.q.push_back(std::move(q));
    }
    return t;
}

}  // namespace perfstokes::cell
