#include "perfstokes/acceptance.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>

#include "perfstokes/cell_problem.hpp"
#include "perfstokes/discretization.hpp"
#include "perfstokes/dns.hpp"
#include "perfstokes/format.hpp"
#include "perfstokes/geometry.hpp"
#include "perfstokes/homogenized.hpp"
#include "perfstokes/regimes.hpp"
#include "perfstokes/spectral.hpp"

namespace perfstokes::acceptance {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

const geometry::HoleShape kDisk = geometry::HoleShape::ball(1.0);
const std::vector<double> kSweepEtas{0.2, 0.1, 0.05, 0.025};
constexpr double kCellTol = 1e-8;
constexpr double kDnsTol = 1e-6;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::ofstream open_csv(const fs::path& dir, const std::string& name) {
    fs::create_directories(dir);
    std::ofstream f(dir / name, std::ios::binary);
    require(static_cast<bool>(f), ErrorCode::IoError, "cannot write " + (dir / name).string());
    return f;
}

// Results shared between criteria of one process.
struct CellEntry {
    cell::Permeability a;
    double c_eta = 0.0;
};

std::map<std::pair<double, int>, CellEntry>& cell_cache() {
    static std::map<std::pair<double, int>, CellEntry> cache;
    return cache;
}

const CellEntry& cell_entry(double eta, int n, cli::RunLog& log) {
    auto& cache = cell_cache();
    const auto key = std::make_pair(eta, n);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
    const auto geom = geometry::build_cell(2, eta, kDisk, cell::default_delta3(kDisk, 2, eta));
    cell::CellOptions co;
    co.tol = kCellTol;
    const auto sol = cell::solve_cell(geom, n, co);
    for (int i = 0; i < 2; ++i) {
        log.add("cell eta=" + format_shortest(eta) + " direction=" + std::to_string(i + 1), n, sol.reports[i]);
    }
    return cache[key] = CellEntry{cell::permeability(sol), sol.c_eta};
}

const cell::PermeabilityReport& sweep_report(cli::RunLog& log) {
    static std::optional<cell::PermeabilityReport> report;
    if (!report) {
        cell::SweepOptions so;
        so.dim = 2;
        so.hole = kDisk;
        so.etas = kSweepEtas;
        so.tol = kCellTol;
        report = cell::sweep_eta(so);
        for (const auto& r : report->rows) {
            log.add("sweep eta=" + format_shortest(r.eta), r.n, SolveReport{r.iterations, r.residual, r.seconds});
        }
    }
    return *report;
}

const dns::Comparison& darcy_comparison(cli::RunLog& log) {
    static std::optional<dns::Comparison> cmp;
    if (!cmp) {
        const auto& sweep = sweep_report(log);
        dns::CompareOptions co;
        co.family = regimes::parse_family("powerlaw:0.2,1", 2);
        co.hole = kDisk;
        co.forcing = homogenized::Forcing::sinshear();
        co.eps_list = {1.0 / 8, 1.0 / 16, 1.0 / 32};
        co.tol = kDnsTol;
        co.n_cap = 1024;
        co.permeability = sweep.rows.front().a.energy;  // eta = 0.2 row
        cmp = dns::compare_regime(co);
        cmp->permeability_source = "sweep row eta=0.2";
        for (const auto& r : cmp->rows) {
            log.add("dns eps=" + format_shortest(r.epsilon), r.n, SolveReport{r.iterations, r.residual, r.seconds});
        }
    }
    return *cmp;
}

struct Check {
    CriterionResult r;
    std::vector<std::string> failed;

    void expect(bool ok, const std::string& what) {
        if (!ok) failed.push_back(what);
    }
};

// 1. sigma * c_eta = eps to 4 ulp on random triples.
void scaling_identity(Check& c, const fs::path& dir) {
    std::mt19937_64 rng(20240601);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst = 0.0;
    const int samples = 1000;
    for (int k = 0; k < samples; ++k) {
        const int dim = 2 + static_cast<int>(rng() % 3);
        const double eps = std::pow(10.0, -4.0 * unit(rng));
        const double eta = std::pow(10.0, -6.0 * unit(rng)) * 0.999;
        const double a = eps * eta;
        if (!(a > 0.0 && a < eps)) continue;
        const auto p = regimes::derive_params(dim, eps, a);
        const double ulp = std::nextafter(eps, 2.0) - eps;
        worst = std::max(worst, std::abs(p.sigma * p.c_eta - eps) / ulp);
    }
    auto f = open_csv(dir, "c01_scaling.csv");
    f << "samples,max_ulps\n" << samples << ',' << format_real(worst) << '\n';
    c.r.expected = "max |sigma c_eta - eps| <= 4 ulp";
    c.r.observed = "max " + num(worst) + " ulp over " + std::to_string(samples) + " triples";
    c.expect(worst <= 4.0, "ulp bound");
}

// 2. Nine regime cases.
void regime_cases(Check& c, const fs::path& dir) {
    struct Case {
        std::string name, expected, observed;
        bool ok = false;
    };
    std::vector<Case> cases;
    auto params = [&](std::string name, int d, double e, double a, double eta, double ce, double s) {
        const auto p = regimes::derive_params(d, e, a);
        const bool ok = std::abs(p.eta - eta) <= 1e-12 && std::abs(p.c_eta - ce) <= 5e-5 && std::abs(p.sigma - s) <= 5e-6;
        cases.push_back({std::move(name), "eta=" + num(eta) + " c_eta~" + num(ce) + " sigma~" + num(s),
                         "eta=" + num(p.eta) + " c_eta=" + num(p.c_eta) + " sigma=" + num(p.sigma), ok});
    };
    auto named = [&](std::string name, std::string expected, std::string observed) {
        const bool ok = expected == observed;
        cases.push_back({std::move(name), std::move(expected), std::move(observed), ok});
    };
    auto regime = [&](std::string name, const std::string& family, int d, const std::string& expected) {
        std::string observed;
        try {
            observed = regimes::describe(regimes::classify(regimes::parse_family(family, d)));
        } catch (const Error& e) {
            observed = std::string(to_string(e.code()));
        }
        named(std::move(name), expected, observed);
    };
    params("params d=3 eps=0.5 a=0.125", 3, 0.5, 0.125, 0.25, 0.5, 1.0);
    params("params d=2 eps=0.1 a=0.01", 2, 0.1, 0.01, 0.1, 0.65901, 0.151743);
    {
        std::string observed = "no error";
        try {
            regimes::derive_params(2, 0.5, 0.5);
        } catch (const Error& e) {
            observed = std::string(to_string(e.code()));
        }
        named("params d=2 eps=0.5 a=0.5", "DegenerateEta", observed);
    }
    regime("d=3 powerlaw:1,3", "powerlaw:1,3", 3, "critical sigma_star=1");
    regime("d=3 powerlaw:1,1", "powerlaw:1,1", 3, "large");
    regime("d=2 logcritical:2", "logcritical:2", 2, "critical sigma_star=2");
    regime("d=2 powerlaw:0.2,1 (Tartar)", "powerlaw:0.2,1", 2, "large");
    regime("d=3 powerlaw:1,4", "powerlaw:1,4", 3, "small");
    regime("d=3 logcritical:1", "logcritical:1", 3, "UnsupportedFamily");

    auto f = open_csv(dir, "c02_regimes.csv");
    f << "case,expected,observed,pass\n";
    int passed = 0;
    for (const auto& k : cases) {
        passed += k.ok;
        f << cli::csv_field(k.name) << ',' << cli::csv_field(k.expected) << ',' << cli::csv_field(k.observed) << ','
          << (k.ok ? 1 : 0) << '\n';
        c.expect(k.ok, k.name);
    }
    c.r.expected = "9 of 9 cases";
    c.r.observed = std::to_string(passed) + " of " + std::to_string(cases.size()) + " cases";
}

// 3. Adjointness, symmetry and the spectral inverse divergence at N = 32.
void discrete_calculus(Check& c, const fs::path& dir) {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    auto f = open_csv(dir, "c03_calculus.csv");
    f << "grid,check,value,bound,pass\n";
    double worst = 0.0;
    auto row = [&](const std::string& grid, const std::string& check, double value, double bound) {
        const bool ok = value <= bound;
        f << grid << ',' << check << ',' << format_real(value) << ',' << format_real(bound) << ',' << (ok ? 1 : 0) << '\n';
        c.expect(ok, grid + " " + check);
        worst = std::max(worst, bound > 0.0 ? value / bound : 0.0);
    };

    std::vector<std::pair<std::string, MasksPtr>> grids;
    grids.emplace_back("cell2d", std::make_shared<const GridMasks>(geometry::rasterize(
                                      geometry::build_cell(2, 0.25, kDisk, cell::default_delta3(kDisk, 2, 0.25)), 32)));
    grids.emplace_back("box2d", homogenized::box_masks(2, 32));
    grids.emplace_back("cell3d", std::make_shared<const GridMasks>(geometry::rasterize(
                                      geometry::build_cell(3, 0.25, kDisk, cell::default_delta3(kDisk, 3, 0.25)), 32)));
    grids.emplace_back("box3d", homogenized::box_masks(3, 32));
    for (const auto& [name, masks] : grids) {
        auto u = VelocityField::zeros(masks);
        auto v = VelocityField::zeros(masks);
        auto p = PressureField::zeros(masks);
        for (auto& x : u.data) x = dist(rng);
        for (auto& x : v.data) x = dist(rng);
        for (auto& x : p.data) x = dist(rng);
        u.apply_mask();
        v.apply_mask();
        p.apply_mask();
        const auto du = divergence(u);
        const auto gp = gradient(p);
        const double adj = std::abs(inner(du, p) + inner(u, gp));
        const double adj_scale = std::max(std::sqrt(inner(du, du) * inner(p, p)), std::sqrt(inner(u, u) * inner(gp, gp)));
        row(name, "div_grad_adjoint", adj, 1e-12 * adj_scale);
        const auto lu = laplacian(u);
        const auto lv = laplacian(v);
        const double sym = std::abs(inner(lu, v) - inner(u, lv));
        const double sym_scale = std::max(std::sqrt(inner(lu, lu) * inner(v, v)), std::sqrt(inner(u, u) * inner(lv, lv)));
        row(name, "laplacian_symmetry", sym, 1e-12 * sym_scale);
    }
    for (int dim : {2, 3}) {
        auto masks = std::make_shared<const GridMasks>(full_masks(Grid{dim, 32, Boundary::Periodic}));
        auto rhs = PressureField::zeros(masks);
        for (auto& x : rhs.data) x = dist(rng);
        rhs.remove_mean();
        const auto inv = spectral::inverse_divergence(rhs);
        const auto div = divergence(inv.u);
        double err = 0.0, fmax = 0.0;
        for (std::size_t i = 0; i < rhs.data.size(); ++i) {
            err = std::max(err, std::abs(div.data[i] - rhs.data[i]));
            fmax = std::max(fmax, std::abs(rhs.data[i]));
        }
        row("torus" + std::to_string(dim) + "d", "inverse_divergence", err, 1e-10 * fmax);
    }
    c.r.expected = "every value <= bound (1e-12 norm products, 1e-10 |f|_inf)";
    c.r.observed = "largest value/bound " + num(worst);
}

// 4. Krylov vs dense LU at N = 16.
void dense_oracle(Check& c, const fs::path& dir) {
    const double eta = 0.25;
    const int n = 16;
    const auto geom = geometry::build_cell(2, eta, kDisk, cell::default_delta3(kDisk, 2, eta));
    auto masks = std::make_shared<const GridMasks>(geometry::rasterize(geom, n));
    const GridMasks& m = *masks;
    const std::size_t block = m.grid.size();
    const std::size_t nu = 2 * block;

    std::vector<std::size_t> faces, cells;
    for (int comp = 0; comp < 2; ++comp) {
        for (std::size_t i = 0; i < block; ++i) {
            if (m.face_fluid[comp][i]) faces.push_back(comp * block + i);
        }
    }
    for (std::size_t i = 0; i < block; ++i) {
        if (m.cell_active[i]) cells.push_back(i);
    }
    const std::size_t nf = faces.size(), nc = cells.size(), total = nf + nc + 1;
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(total, total);
    solver::MomentumOperator op(masks);
    std::vector<double> e(nu), au(nu), du(block), ep(block), gp(nu);
    for (std::size_t j = 0; j < nf; ++j) {
        std::fill(e.begin(), e.end(), 0.0);
        e[faces[j]] = 1.0;
        op.apply(e, au);
        kernels::divergence(m, e, du);
        for (std::size_t i = 0; i < nf; ++i) k(i, j) = au[faces[i]];
        for (std::size_t i = 0; i < nc; ++i) k(nf + i, j) = -du[cells[i]];
    }
    for (std::size_t j = 0; j < nc; ++j) {
        std::fill(ep.begin(), ep.end(), 0.0);
        ep[cells[j]] = 1.0;
        kernels::gradient(m, ep, gp);
        for (std::size_t i = 0; i < nf; ++i) k(i, nf + j) = gp[faces[i]];
        k(nf + nc, nf + j) = 1.0;
        k(nf + j, nf + nc) = 1.0;
    }
    const double c2 = std::pow(regimes::c_eta(2, eta), 2);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(total);
    for (std::size_t i = 0; i < nf; ++i) {
        if (faces[i] < block) b(i) = c2;
    }
    const Eigen::VectorXd x = k.partialPivLu().solve(b);

    cell::CellOptions co;
    co.tol = 1e-11;
    const auto kr = cell::solve_cell_direction(geom, n, {1.0, 0.0, 0.0}, co);
    double num_u = 0.0, den_u = 0.0;
    for (std::size_t i = 0; i < nf; ++i) {
        const double d = kr.u.data[faces[i]] - x(i);
        num_u += d * d;
        den_u += x(i) * x(i);
    }
    double pm = 0.0;
    for (std::size_t i = 0; i < nc; ++i) pm += kr.p.data[cells[i]] / static_cast<double>(nc);
    double num_p = 0.0, den_p = 0.0;
    for (std::size_t i = 0; i < nc; ++i) {
        const double d = (kr.p.data[cells[i]] - pm) - x(nf + i);
        num_p += d * d;
        den_p += x(nf + i) * x(nf + i);
    }
    const double ru = std::sqrt(num_u / den_u);
    const double rp = std::sqrt(num_p / den_p);
    const double lu_res = (k * x - b).norm() / b.norm();
    auto f = open_csv(dir, "c04_oracle.csv");
    f << "quantity,value\n"
      << "unknowns," << total << "\n"
      << "dense_relative_residual," << format_real(lu_res) << "\n"
      << "velocity_relative_l2," << format_real(ru) << "\n"
      << "pressure_relative_l2," << format_real(rp) << "\n";
    c.r.expected = "velocity relative L2 <= 1e-8";
    c.r.observed = "velocity " + num(ru) + ", pressure " + num(rp) + " (" + std::to_string(total) + " unknowns)";
    c.expect(ru <= 1e-8, "velocity match");
}

// 5. A_energy vs A_average under refinement.
void two_formula(Check& c, const fs::path& dir, cli::RunLog& log) {
    auto f = open_csv(dir, "c05_two_formula.csv");
    f << "N,A11_energy,A11_avg,gap_inf\n";
    std::vector<double> gaps;
    double a11 = 0.0;
    for (int n : {64, 128, 256}) {
        const auto& e = cell_entry(0.25, n, log);
        const double gap = cell::max_abs_difference(e.a.energy, e.a.average, 2);
        gaps.push_back(gap);
        a11 = e.a.energy[0][0];
        f << n << ',' << format_real(e.a.energy[0][0]) << ',' << format_real(e.a.average[0][0]) << ','
          << format_real(gap) << '\n';
    }
    const bool monotone = gaps[1] < gaps[0] && gaps[2] < gaps[1];
    c.expect(monotone, "monotone decrease");
    c.expect(gaps[2] <= 0.02 * a11, "2% bound");
    c.r.expected = "gap decreasing over N=64,128,256 and <= 2% A11 at 256";
    c.r.observed = "gaps " + num(gaps[0]) + ", " + num(gaps[1]) + ", " + num(gaps[2]) + " (2% A11 = " + num(0.02 * a11) + ")";
}

// 6. Symmetry, PSD and disk isotropy of every computed A(eta).
void symmetry_psd(Check& c, const fs::path& dir, cli::RunLog& log) {
    struct Item {
        std::string source;
        double eta;
        int n;
        cell::Permeability a;
    };
    std::vector<Item> items;
    for (int n : {64, 128, 256}) items.push_back({"refinement", 0.25, n, cell_entry(0.25, n, log).a});
    for (const auto& r : sweep_report(log).rows) items.push_back({"sweep", r.eta, r.n, r.a});

    auto f = open_csv(dir, "c06_symmetry.csv");
    f << "source,eta,N,matrix,asymmetry,min_eigenvalue,trace,abs_A12,abs_A11_minus_A22,pass\n";
    double worst_offdiag = 0.0, worst_aniso = 0.0, worst_asym = 0.0;
    for (const auto& it : items) {
        for (int which = 0; which < 2; ++which) {
            const auto& a = which == 0 ? it.a.energy : it.a.average;
            const double a11 = a[0][0];
            const double asym = cell::asymmetry(a, 2);
            const double mine = cell::min_eigenvalue(a, 2);
            const double tr = cell::trace(a, 2);
            const double off = std::max(std::abs(a[0][1]), std::abs(a[1][0]));
            const double aniso = std::abs(a[0][0] - a[1][1]);
            const bool ok = asym <= 1e-8 * a11 && mine >= -1e-10 * tr && off <= 1e-3 * a11 && aniso <= 5e-3 * a11;
            worst_asym = std::max(worst_asym, asym / a11);
            worst_offdiag = std::max(worst_offdiag, off / a11);
            worst_aniso = std::max(worst_aniso, aniso / a11);
            f << it.source << ',' << format_real(it.eta) << ',' << it.n << ',' << (which == 0 ? "energy" : "average")
              << ',' << format_real(asym) << ',' << format_real(mine) << ',' << format_real(tr) << ','
              << format_real(off) << ',' << format_real(aniso) << ',' << (ok ? 1 : 0) << '\n';
            c.expect(ok, it.source + " eta=" + num(it.eta) + " N=" + std::to_string(it.n));
        }
    }
    c.r.expected = "|A-A^T| <= 1e-8 A11, min eig >= -1e-10 tr, |A12| <= 1e-3 A11, |A11-A22| <= 0.5% A11";
    c.r.observed = std::to_string(2 * items.size()) + " matrices; worst asym/A11 " + num(worst_asym) + ", |A12|/A11 " +
                   num(worst_offdiag) + ", |A11-A22|/A11 " + num(worst_aniso);
}

// 7. Extrapolated A11 vs 1/pi.
void permeability_limit(Check& c, const fs::path& dir, cli::RunLog& log) {
    const auto& rep = sweep_report(log);
    auto f = open_csv(dir, "c07_sweep.csv");
    cli::write_sweep_csv(f, rep, false);
    const double ref = 1.0 / std::numbers::pi;
    const double lim = rep.limit[0][0];
    const double rel = std::abs(lim - ref) / ref;
    c.expect(rel <= 0.10, "within 10% of 1/pi");
    c.r.expected = "extrapolated A11 within 10% of 1/pi = " + num(ref);
    c.r.observed = "A11 = " + num(lim) + " (" + num(100.0 * rel) + "% off; 1/(4 pi) = " + num(0.25 / std::numbers::pi) + ")";
}

// 8. Scaling bands over the sweep.
void scaling_bands(Check& c, const fs::path& dir, cli::RunLog& log) {
    const auto& b = sweep_report(log).bands;
    auto f = open_csv(dir, "c08_bands.csv");
    f << "quantity,max_over_min,bound\n"
      << "grad_w_over_c_eta," << format_real(b.grad_w) << ",3\n"
      << "q_over_c_eta," << format_real(b.q) << ",3\n"
      << "w," << format_real(b.w) << ",3\n"
      << "poincare_times_c_eta," << format_real(b.poincare) << ",4\n";
    c.expect(b.grad_w <= 3.0, "grad w band");
    c.expect(b.q <= 3.0, "q band");
    c.expect(b.w <= 3.0, "w band");
    c.expect(b.poincare > 0.0 && b.poincare <= 4.0, "poincare band");
    c.r.expected = "max/min <= 3 (grad w, q, w) and <= 4 (Poincare)";
    c.r.observed = "grad w " + num(b.grad_w) + ", q " + num(b.q) + ", w " + num(b.w) + ", Poincare " + num(b.poincare);
}

// 9. Darcy with constant forcing, Stokes and Brinkman with gradient forcing.
void trivial_limits(Check& c, const fs::path& dir, cli::RunLog& log) {
    const double tol = 1e-8;
    auto f = open_csv(dir, "c09_trivial.csv");
    f << "case,N,l2_u,bound,p_error,p_bound,pass\n";
    std::string obs;
    for (int n : {32, 64}) {
        const auto d = homogenized::solve_darcy(homogenized::Forcing::constant({1.0, 0.0, 0.0}),
                                                homogenized::scalar_matrix(1.0, 2), 2, n, tol);
        log.add("darcy constant", n, d.report);
        double perr = 0.0;
        const Grid& g = d.p.masks->grid;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double x1 = (g.coords(i)[0] + 0.5) * g.h();
            perr = std::max(perr, std::abs(d.p.data[i] - (x1 - 0.5)));
        }
        const double ul2 = norms(d.u).l2;
        const double pb = 1.0 / (static_cast<double>(n) * n);
        const bool ok = ul2 <= 10 * tol && perr <= pb;
        f << "darcy_constant," << n << ',' << format_real(ul2) << ',' << format_real(10 * tol) << ',' << format_real(perr)
          << ',' << format_real(pb) << ',' << (ok ? 1 : 0) << '\n';
        c.expect(ok, "darcy N=" + std::to_string(n));
        if (n == 64) obs += "darcy |u| " + num(ul2) + " |p-(x1-1/2)| " + num(perr);
    }
    const int n = 64;
    const auto grad = homogenized::Forcing::gradient();
    const auto s = homogenized::solve_stokes(grad, 2, n, tol);
    log.add("stokes gradient", n, s.report);
    const auto b = homogenized::solve_brinkman(grad, homogenized::scalar_matrix(1.0 / std::numbers::pi, 2), 1.0, 2, n, tol);
    log.add("brinkman gradient", n, b.report);
    for (const auto& [name, sol] : {std::pair{"stokes_gradient", &s}, std::pair{"brinkman_gradient", &b}}) {
        const double ul2 = norms(sol->u).l2;
        const bool ok = ul2 <= 10 * tol;
        f << name << ',' << n << ',' << format_real(ul2) << ',' << format_real(10 * tol) << ",,," << (ok ? 1 : 0) << '\n';
        c.expect(ok, name);
        obs += std::string(", ") + name + " |u| " + num(ul2);
    }
    c.r.expected = "|u| <= 10 tol = 1e-7; Darcy p = x1 - 1/2 within N^-2";
    c.r.observed = obs;
}

// 10. Brinkman endpoints.
void brinkman_endpoints(Check& c, const fs::path& dir, cli::RunLog& log) {
    const int n = 64;
    const double tol = 1e-8;
    const auto f = homogenized::Forcing::sinshear();
    const auto a = homogenized::scalar_matrix(1.0 / std::numbers::pi, 2);
    const auto st = homogenized::solve_stokes(f, 2, n, tol);
    log.add("stokes sinshear", n, st.report);
    const double sl2 = norms(st.u).l2;
    auto out = open_csv(dir, "c10_brinkman.csv");
    out << "sigma_star,l2_u,rel_l2_to_stokes\n";
    std::map<double, std::pair<double, double>> rows;
    for (double s : {0.1, 1.0, 10.0, 100.0, 1000.0}) {
        const auto b = homogenized::solve_brinkman(f, a, s, 2, n, tol);
        log.add("brinkman sigma_star=" + format_shortest(s), n, b.report);
        auto diff = b.u;
        diff -= st.u;
        rows[s] = {norms(b.u).l2, norms(diff).l2 / sl2};
        out << format_real(s) << ',' << format_real(rows[s].first) << ',' << format_real(rows[s].second) << '\n';
    }
    const bool dist_dec = rows[100.0].second < rows[10.0].second && rows[1000.0].second < rows[100.0].second;
    const bool close = rows[100.0].second <= 0.02;
    const bool norm_inc = rows[1.0].first > rows[0.1].first && rows[10.0].first > rows[1.0].first;
    c.expect(dist_dec, "distance decreasing");
    c.expect(close, "2% at 100");
    c.expect(norm_inc, "norm increasing");
    c.r.expected = "distance to Stokes decreasing over 10,100,1000 and <= 2% at 100; |u| increasing over 0.1,1,10";
    c.r.observed = "distances " + num(rows[10.0].second) + ", " + num(rows[100.0].second) + ", " +
                   num(rows[1000.0].second) + "; |u| " + num(rows[0.1].first) + ", " + num(rows[1.0].first) + ", " +
                   num(rows[10.0].first);
}

// 11. Energy and extension identities of every DNS solve.
void dns_identities(Check& c, const fs::path& dir, cli::RunLog& log) {
    struct Row {
        std::string name;
        double energy_gap, extension_gap;
    };
    std::vector<Row> rows;
    {
        const auto geom = geometry::build_perforated(2, 1.0, 0.2, kDisk);
        dns::DnsOptions opt;
        opt.tol = kDnsTol;
        const auto d = dns::solve_dns(geom, homogenized::Forcing::sinshear(), 64, opt);
        log.add("dns eps=1 (no holes)", 64, d.report);
        const double ext = std::max(std::abs(d.ext_norms.l2 - d.u_norms.l2), std::abs(d.ext_norms.h1semi - d.u_norms.h1semi));
        rows.push_back({"eps=1 no holes", std::abs(d.energy - d.work) / std::abs(d.work), ext});
    }
    for (const auto& r : darcy_comparison(log).rows) {
        rows.push_back({"tartar eps=" + format_shortest(r.epsilon), r.energy_gap, r.extension_gap});
    }
    auto f = open_csv(dir, "c11_identities.csv");
    f << "solve,energy_gap,energy_bound,extension_gap,pass\n";
    double worst = 0.0, worst_ext = 0.0;
    for (const auto& r : rows) {
        const bool ok = r.energy_gap <= kDnsTol && r.extension_gap == 0.0;
        worst = std::max(worst, r.energy_gap);
        worst_ext = std::max(worst_ext, r.extension_gap);
        f << r.name << ',' << format_real(r.energy_gap) << ',' << format_real(kDnsTol) << ','
          << format_real(r.extension_gap) << ',' << (ok ? 1 : 0) << '\n';
        c.expect(ok, r.name);
    }
    c.r.expected = "relative energy gap <= solver tol 1e-6, extension norm gaps exactly 0";
    c.r.observed = std::to_string(rows.size()) + " solves; worst energy gap " + num(worst) + ", extension gap " + num(worst_ext);
}

// 12. Tartar scaling against Darcy.
void darcy_trend(Check& c, const fs::path& dir, cli::RunLog& log) {
    const auto& cmp = darcy_comparison(log);
    const auto bands = dns::perforated_bands(cmp.rows);
    auto f = open_csv(dir, "c12_comparison.csv");
    f << "# regime=" << regimes::describe(cmp.regime) << " permeability source=" << cmp.permeability_source
      << " A11=" << format_real(cmp.permeability[0][0]) << " A22=" << format_real(cmp.permeability[1][1]) << '\n';
    f << "# bands poincare=" << format_real(bands.poincare) << " gradient=" << format_real(bands.gradient)
      << " l2=" << format_real(bands.l2) << '\n';
    dns::write_comparison_csv(f, cmp, false);
    const auto& r = cmp.rows;
    bool vel = true, pres = true, grid = true;
    for (std::size_t k = 1; k < r.size(); ++k) {
        vel = vel && r[k].rel_l2_velocity < r[k - 1].rel_l2_velocity;
        pres = pres && r[k].rel_l2_pressure < r[k - 1].rel_l2_pressure;
    }
    for (const auto& row : r) grid = grid && row.n <= 1024;
    c.expect(std::holds_alternative<regimes::LargeHoles>(cmp.regime), "regime");
    c.expect(vel, "velocity error decreasing");
    c.expect(r.back().rel_l2_velocity <= 0.35, "35% at 1/32");
    c.expect(pres, "pressure error decreasing");
    c.expect(bands.poincare <= 3.0 && bands.gradient <= 3.0 && bands.l2 <= 3.0, "Poincare bands");
    c.expect(grid, "N <= 1024");
    c.r.expected = "velocity error decreasing and <= 35% at 1/32, pressure error decreasing, bands <= 3";
    std::string obs = "velocity";
    for (const auto& row : r) obs += " " + num(row.rel_l2_velocity);
    obs += "; pressure";
    for (const auto& row : r) obs += " " + num(row.rel_l2_pressure);
    obs += "; bands " + num(bands.poincare) + " " + num(bands.gradient) + " " + num(bands.l2);
    c.r.observed = obs;
}

// 13. Coarse-grained tiled cell solution tends to its average.
void tiled_limit(Check& c, const fs::path& dir, cli::RunLog& log) {
    const double eta = 0.25;
    const int n = 64;
    // Never commensurate with a dyadic lattice: every block holds whole periods
    // plus a 1/3 or 2/3 remainder at every eps = 2^-k.
    const double window = 2.0 / 3.0;
    const auto geom = geometry::build_cell(2, eta, kDisk, cell::default_delta3(kDisk, 2, eta));
    cell::CellOptions co;
    co.tol = kCellTol;
    const auto sol = cell::solve_cell(geom, n, co);
    for (int i = 0; i < 2; ++i) log.add("cell eta=0.25 direction=" + std::to_string(i + 1), n, sol.reports[i]);
    const auto mean = integral(sol.w[0]);
    const double mean_norm = std::hypot(mean[0], mean[1]);

    auto f = open_csv(dir, "c13_tiled.csv");
    f << "epsilon,N,window,blocks,error\n";
    std::vector<double> errors;
    for (int m : {4, 8, 16}) {
        const double eps = 1.0 / m;
        const auto tiled = cell::tile_to_domain(sol, eps, m * n);
        const auto cg = dns::coarse_grain(tiled.w[0], window, eps);
        double err = 0.0;
        const std::size_t nb = cg.weights.size();
        for (int comp = 0; comp < 2; ++comp) {
            for (std::size_t b = 0; b < nb; ++b) {
                const double d = cg.values[comp * nb + b] - mean[comp];
                err += cg.weights[b] * d * d;
            }
        }
        err = std::sqrt(err) / mean_norm;
        errors.push_back(err);
        f << format_real(eps) << ',' << m * n << ',' << format_real(window) << ',' << cg.blocks << ','
          << format_real(err) << '\n';
    }
    c.expect(errors[1] < errors[0] && errors[2] < errors[1], "error decreasing");
    c.r.expected = "relative L2 distance of CG(w) to the cell mean decreasing over eps = 1/4, 1/8, 1/16";
    c.r.observed = "errors " + num(errors[0]) + ", " + num(errors[1]) + ", " + num(errors[2]);
}

const std::map<int, std::pair<std::string, double>>& titles() {
    static const std::map<int, std::pair<std::string, double>> t{
        {1, {"scaling identity", 1.0}},
        {2, {"regime classifier", 1.0}},
        {3, {"discrete calculus", 10.0}},
        {4, {"cell solver vs dense LU", 30.0}},
        {5, {"two-formula permeability", 300.0}},
        {6, {"symmetry and PSD of A(eta)", 0.0}},
        {7, {"2D permeability limit", 1800.0}},
        {8, {"scaling bands", 0.0}},
        {9, {"trivial homogenized cases", 60.0}},
        {10, {"Brinkman endpoints", 300.0}},
        {11, {"DNS energy and extension identities", 0.0}},
        {12, {"Darcy regime trend", 1800.0}},
        {13, {"tiled-cell weak limit", 300.0}},
        {14, {"determinism", 0.0}},
    };
    return t;
}

}  // namespace

std::vector<int> in_process_ids() { return {1, 2, 3, 4, 5, 7, 8, 6, 9, 10, 12, 11, 13}; }

CriterionResult run_criterion(int id, const fs::path& out_dir, cli::RunLog& log) {
    const auto& t = titles();
    require(t.count(id) && id != 14, ErrorCode::InvalidArgument, "no in-process criterion " + std::to_string(id));
    Check c;
    c.r.id = id;
    c.r.title = t.at(id).first;
    c.r.budget = t.at(id).second;
    const auto start = Clock::now();
    try {
        switch (id) {
            case 1: scaling_identity(c, out_dir); break;
            case 2: regime_cases(c, out_dir); break;
            case 3: discrete_calculus(c, out_dir); break;
            case 4: dense_oracle(c, out_dir); break;
            case 5: two_formula(c, out_dir, log); break;
            case 6: symmetry_psd(c, out_dir, log); break;
            case 7: permeability_limit(c, out_dir, log); break;
            case 8: scaling_bands(c, out_dir, log); break;
            case 9: trivial_limits(c, out_dir, log); break;
            case 10: brinkman_endpoints(c, out_dir, log); break;
            case 11: dns_identities(c, out_dir, log); break;
            case 12: darcy_trend(c, out_dir, log); break;
            case 13: tiled_limit(c, out_dir, log); break;
        }
    } catch (const Error& e) {
        c.failed.push_back(e.what());
        c.r.observed = e.what();
    }
    c.r.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    c.r.value_passed = c.failed.empty();
    if (!c.failed.empty()) {
        std::string list;
        for (const auto& s : c.failed) list += (list.empty() ? "" : "; ") + s;
        c.r.observed += " [failed: " + list + "]";
    }
    return c.r;
}

CriterionResult compare_runs(const fs::path& a, const fs::path& b) {
    CriterionResult r;
    r.id = 14;
    r.title = titles().at(14).first;
    const auto start = Clock::now();
    auto csvs = [](const fs::path& dir) {
        std::vector<std::string> names;
        if (fs::is_directory(dir)) {
            for (const auto& e : fs::directory_iterator(dir)) {
                if (e.is_regular_file() && e.path().extension() == ".csv") names.push_back(e.path().filename().string());
            }
        }
        std::sort(names.begin(), names.end());
        return names;
    };
    auto slurp = [](const fs::path& p) {
        std::ifstream f(p, std::ios::binary);
        std::stringstream ss;
        ss << f.rdbuf();
        return ss.str();
    };
    const auto na = csvs(a);
    const auto nb = csvs(b);
    std::vector<std::string> differing;
    if (na != nb) differing.push_back("file sets differ");
    for (const auto& name : na) {
        if (std::find(nb.begin(), nb.end(), name) == nb.end()) continue;
        if (slurp(a / name) != slurp(b / name)) differing.push_back(name);
    }
    r.value_passed = !na.empty() && differing.empty();
    r.expected = "every CSV byte-identical across two check runs";
    r.observed = std::to_string(na.size()) + " CSV files compared";
    if (!differing.empty()) {
        r.observed += ", differing:";
        for (const auto& d : differing) r.observed += " " + d;
    }
    r.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    return r;
}

std::string summary_line(const CriterionResult& r) {
    std::string s = r.passed() ? "[PASS] " : "[FAIL] ";
    s += "criterion " + std::to_string(r.id) + " (" + r.title + "): " + r.observed + " | expected " + r.expected;
    char buf[96];
    if (r.budget > 0.0) {
        std::snprintf(buf, sizeof(buf), " | %.1f s of %.0f s budget", r.seconds, r.budget);
    } else {
        std::snprintf(buf, sizeof(buf), " | %.1f s", r.seconds);
    }
    s += buf;
    if (r.value_passed && !r.within_budget()) s += " (over budget)";
    return s;
}

void write_summary_csv(std::ostream& out, const std::vector<CriterionResult>& results) {
    auto sorted = results;
    std::sort(sorted.begin(), sorted.end(), [](const auto& x, const auto& y) { return x.id < y.id; });
    out << "criterion,title,passed,expected,observed\n";
    for (const auto& r : sorted) {
        out << r.id << ',' << cli::csv_field(r.title) << ',' << (r.value_passed ? 1 : 0) << ','
            << cli::csv_field(r.expected) << ',' << cli::csv_field(r.observed) << '\n';
    }
}

}  // namespace perfstokes::acceptance
