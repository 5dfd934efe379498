#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>

#include "perfstokes/discretization.hpp"
#include "perfstokes/errors.hpp"
#include "perfstokes/geometry.hpp"
#include "perfstokes/homogenized.hpp"
#include "perfstokes/solver.hpp"

using namespace perfstokes;
using namespace perfstokes::solver;
using std::numbers::pi;

namespace {

MasksPtr torus(int dim, int n) { return std::make_shared<const GridMasks>(full_masks(Grid{dim, n, Boundary::Periodic})); }

MasksPtr punctured(int n, double eta = 0.25) {
    const auto c = geometry::build_cell(2, eta, geometry::HoleShape::ball(1.0), 0.4);
    return std::make_shared<const GridMasks>(geometry::rasterize(c, n));
}

VelocityField uniform(const MasksPtr& m, int comp) {
    auto f = VelocityField::zeros(m);
    for (auto& v : f.component(comp)) v = 1.0;
    f.apply_mask();
    return f;
}

LinearMap dense(const Eigen::MatrixXd& a) {
    return [a](std::span<const double> x, std::span<double> y) {
        Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
        Eigen::Map<Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(y.size()));
        yv = a * xv;
    };
}

}  // namespace

TEST_CASE("pcg solves a dense SPD system and records energy drops") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    const int n = 40;
    Eigen::MatrixXd b(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) b(i, j) = g(rng);
    const Eigen::MatrixXd a = b * b.transpose() + n * Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd rhs(n);
    for (int i = 0; i < n; ++i) rhs(i) = g(rng);
    const Eigen::MatrixXd dinv = a.diagonal().cwiseInverse().asDiagonal();
    std::vector<double> x(n, 0.0);
    const auto r = pcg(dense(a), dense(dinv), std::span<const double>(rhs.data(), n), x, 1e-12, 200, {}, true);
    CHECK(r.converged);
    const Eigen::VectorXd exact = a.ldlt().solve(rhs);
    for (int i = 0; i < n; ++i) CHECK(x[i] == doctest::Approx(exact(i)).epsilon(1e-9));
    REQUIRE(!r.energy_drops.empty());
    for (double d : r.energy_drops) CHECK(d >= 0.0);
}

TEST_CASE("minres solves a symmetric indefinite system with monotone residual") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g;
    const int n = 30, m = 10;
    Eigen::MatrixXd b(n, n), c(m, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) b(i, j) = g(rng);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) c(i, j) = g(rng);
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n + m, n + m);
    k.topLeftCorner(n, n) = b * b.transpose() + Eigen::MatrixXd::Identity(n, n);
    k.topRightCorner(n, m) = c.transpose();
    k.bottomLeftCorner(m, n) = c;
    Eigen::VectorXd rhs(n + m);
    for (int i = 0; i < n + m; ++i) rhs(i) = g(rng);
    std::vector<double> x(n + m, 0.0);
    const auto r = minres(dense(k), dense(Eigen::MatrixXd::Identity(n + m, n + m)),
                          std::span<const double>(rhs.data(), n + m), x, 1e-12, 500);
    CHECK(r.converged);
    const Eigen::VectorXd exact = k.partialPivLu().solve(rhs);
    for (int i = 0; i < n + m; ++i) CHECK(x[i] == doctest::Approx(exact(i)).epsilon(1e-8).scale(1.0));
    for (std::size_t i = 1; i < r.history.size(); ++i) CHECK(r.history[i] <= r.history[i - 1] * (1 + 1e-12));
}

TEST_CASE("zero forcing on the torus gives zero in at most one iteration") {
    SaddleSpec spec;
    spec.masks = torus(2, 32);
    spec.rhs = VelocityField::zeros(spec.masks);
    const auto r = solve_saddle(spec);
    CHECK(r.report.iterations <= 1);
    for (double v : r.u.data) CHECK(v == 0.0);
    for (double v : r.p.data) CHECK(v == 0.0);
}

TEST_CASE("gradient forcing in the box is absorbed by the pressure") {
    const int n = 64;
    const double tol = 1e-8;
    const auto m = homogenized::box_masks(2, n);
    SaddleSpec spec;
    spec.masks = m;
    spec.rhs = homogenized::sample(homogenized::Forcing::gradient(), m);
    spec.tol = tol;
    for (auto method : {SaddleMethod::Uzawa, SaddleMethod::Minres}) {
        spec.method = method;
        const auto r = solve_saddle(spec);
        CHECK(norms(r.u).l2 <= 10 * tol);
        CHECK(std::abs(r.p.mean()) < 1e-12);
        const auto g = homogenized::sample_potential(m);
        double err = 0.0;
        for (std::size_t i = 0; i < g.data.size(); ++i) err = std::max(err, std::abs(r.p.data[i] - g.data[i]));
        CHECK(err < 1e-6);
    }
}

TEST_CASE("solutions vanish on solid faces and satisfy both equations") {
    const auto m = punctured(64);
    SaddleSpec spec;
    spec.masks = m;
    spec.rhs = uniform(m, 0);
    spec.tol = 1e-8;
    const auto r = solve_saddle(spec);
    for (int c = 0; c < 2; ++c)
        for (std::size_t i = 0; i < m->grid.size(); ++i)
            if (!m->face_fluid[c][i]) CHECK(r.u.component(c)[i] == 0.0);
    CHECK(r.momentum_residual <= spec.tol);
    CHECK(r.continuity_residual <= spec.tol);
    CHECK(r.report.residual <= spec.tol);
    CHECK(std::abs(r.p.mean()) < 1e-13);
}

TEST_CASE("Uzawa and MINRES agree") {
    const auto m = punctured(64);
    SaddleSpec spec;
    spec.masks = m;
    spec.rhs = uniform(m, 1);
    spec.tol = 1e-10;
    const auto a = solve_saddle(spec);
    spec.method = SaddleMethod::Minres;
    spec.schur_gamma = 0.0;
    const auto b = solve_saddle(spec);
    auto du = a.u;
    du -= b.u;
    CHECK(norms(du).l2 <= 1e-7 * norms(a.u).l2);
    REQUIRE(!b.residual_history.empty());
    for (std::size_t i = 1; i < b.residual_history.size(); ++i) {
        CHECK(b.residual_history[i] <= b.residual_history[i - 1] * (1 + 1e-12));
    }
}

TEST_CASE("saddle solves are bitwise deterministic") {
    const auto m = punctured(32);
    SaddleSpec spec;
    spec.masks = m;
    spec.rhs = uniform(m, 0);
    for (auto method : {SaddleMethod::Uzawa, SaddleMethod::Minres}) {
        spec.method = method;
        const auto a = solve_saddle(spec);
        const auto b = solve_saddle(spec);
        CHECK(a.u.data == b.u.data);
        CHECK(a.p.data == b.p.data);
        CHECK(a.report.iterations == b.report.iterations);
    }
}

TEST_CASE("energy decreases along conjugate gradients") {
    const auto m = punctured(32);
    SaddleSpec spec;
    spec.masks = m;
    spec.rhs = uniform(m, 0);
    const auto r = solve_saddle(spec, true);
    REQUIRE(!r.energy_drops.empty());
    for (double d : r.energy_drops) CHECK(d >= 0.0);
}

TEST_CASE("iteration limit raises NoConvergence with a report") {
    const auto m = punctured(64);
    SaddleSpec spec;
    spec.masks = m;
    spec.rhs = uniform(m, 0);
    spec.tol = 1e-12;
    spec.max_iter = 1;
    try {
        solve_saddle(spec);
        FAIL("expected NoConvergence");
    } catch (const NoConvergenceError& e) {
        CHECK(e.code() == ErrorCode::NoConvergence);
        CHECK(e.report().iterations >= 1);
        CHECK(e.report().residual > spec.tol);
    }
}

TEST_CASE("disconnected fluid is singular") {
    const int n = 16;
    auto masks = full_masks(Grid{2, n, Boundary::Periodic});
    // Two solid columns split the torus into two strips.
    for (std::size_t idx = 0; idx < masks.grid.size(); ++idx) {
        const auto c = masks.grid.coords(idx);
        if (c[0] == 0 || c[0] == n / 2) {
            masks.cell_active[idx] = 0;
            masks.scalar_fluid[idx] = 0;
            masks.face_fluid[0][idx] = 0;
            masks.face_fluid[1][idx] = 0;
            masks.face_fluid[0][masks.grid.index((c[0] + 1) % n, c[1], 0)] = 0;
        }
    }
    masks.hole_count = 1;
    const auto m = std::make_shared<const GridMasks>(masks);
    CHECK(pressure_components(*m) == 2);
    SaddleSpec spec;
    spec.masks = m;
    spec.rhs = uniform(m, 1);
    try {
        solve_saddle(spec);
        FAIL("expected SingularSystem");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SingularSystem);
    }
}

TEST_CASE("smallest Dirichlet eigenvalue of the unit square") {
    const auto m = homogenized::box_masks(2, 128);
    const auto r = smallest_eigenvalue(m, 1e-8);
    CHECK(r.value == doctest::Approx(2 * pi * pi).epsilon(0.01));
}

TEST_CASE("hole-free torus has no Dirichlet data") {
    try {
        smallest_eigenvalue(torus(2, 16), 1e-6);
        FAIL("expected NoDirichletData");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NoDirichletData);
    }
}

TEST_CASE("punctured cell eigenvalue converges under refinement") {
    double lam[3];
    int k = 0;
    for (int n : {64, 128, 256}) {
        const auto r = smallest_eigenvalue(punctured(n), 1e-10);
        lam[k++] = r.value;
        // Rayleigh quotients decrease along the inverse iteration.
        for (std::size_t i = 1; i < r.history.size(); ++i) CHECK(r.history[i] <= r.history[i - 1] * (1 + 1e-12));
    }
    // Richardson extrapolation with the observed order.
    const double ratio = (lam[0] - lam[1]) / (lam[1] - lam[2]);
    CHECK(ratio > 1.0);
    const double p = std::log2(ratio);
    const double extrapolated = lam[2] + (lam[2] - lam[1]) / (std::pow(2.0, p) - 1.0);
    CHECK(std::abs(lam[2] - extrapolated) < 0.05 * extrapolated);
    CHECK(extrapolated > 0.0);
}
