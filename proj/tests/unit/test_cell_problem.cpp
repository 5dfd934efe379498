#include <doctest.h>

#include <cmath>
#include <map>
#include <numbers>

#include "perfstokes/cell_problem.hpp"
#include "perfstokes/discretization.hpp"
#include "perfstokes/errors.hpp"
#include "perfstokes/homogenized.hpp"
#include "perfstokes/regimes.hpp"

using namespace perfstokes;
using namespace perfstokes::cell;
using geometry::HoleShape;
using std::numbers::pi;

namespace {

geometry::CellGeometry disk_cell(double eta, int dim = 2) {
    return geometry::build_cell(dim, eta, HoleShape::ball(1.0), default_delta3(HoleShape::ball(1.0), dim, eta));
}

const CellSolution& solution(int n) {
    static std::map<int, CellSolution> cache;
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, solve_cell(disk_cell(0.25), n)).first;
    return it->second;
}

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

TEST_CASE("hole-free cell is rejected") {
    try {
        solve_cell(geometry::hole_free_cell(2), 32);
        FAIL("expected MissingHole");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MissingHole);
    }
}

TEST_CASE("cell solution is divergence free and vanishes on the hole") {
    const auto& s = solution(128);
    CHECK(s.c_eta == doctest::Approx(regimes::c_eta(2, 0.25)));
    for (int i = 0; i < 2; ++i) {
        CHECK(s.reports[i].residual <= 1e-8);
        const auto d = divergence(s.w[i]);
        // Relative to the forcing c_eta^2 on the unit cell.
        CHECK(norms(d).l2 <= 1e-8 * s.c_eta * s.c_eta);
        for (int c = 0; c < 2; ++c)
            for (std::size_t k = 0; k < s.masks->grid.size(); ++k)
                if (!s.masks->face_fluid[c][k]) CHECK(s.w[i].component(c)[k] == 0.0);
        CHECK(std::abs(s.q[i].mean()) < 1e-14);
    }
}

TEST_CASE("disk symmetry swaps the two directions") {
    const auto& s = solution(64);
    const auto& g = s.masks->grid;
    double diff = 0.0;
    for (int i = 0; i < g.n; ++i) {
        for (int j = 0; j < g.n; ++j) {
            diff = std::max(diff, std::abs(s.w[1].component(1)[g.index(j, i, 0)] - s.w[0].component(0)[g.index(i, j, 0)]));
            diff = std::max(diff, std::abs(s.w[1].component(0)[g.index(j, i, 0)] - s.w[0].component(1)[g.index(i, j, 0)]));
        }
    }
    CHECK(diff <= 1e-6 * max_abs(s.w[0].data));
}

TEST_CASE("cell problem is linear in the direction") {
    const auto& s = solution(64);
    CellOptions opt;
    opt.tol = 1e-10;
    const auto r = solve_cell_direction(disk_cell(0.25), 64, {1.0, 1.0, 0.0}, opt);
    auto sum = s.w[0];
    sum += s.w[1];
    auto diff = r.u;
    diff -= sum;
    CHECK(norms(diff).l2 <= 1e-6 * norms(sum).l2);
}

TEST_CASE("average velocity self-converges") {
    double avg[3];
    int k = 0;
    for (int n : {64, 128, 256}) avg[k++] = integral(solution(n).w[0])[0];
    const double d1 = std::abs(avg[0] - avg[1]), d2 = std::abs(avg[1] - avg[2]);
    CHECK(d2 < d1);
    CHECK(d2 < 0.05 * std::abs(avg[2]));
}

TEST_CASE("permeability diagnostics") {
    const auto a = permeability(solution(256));
    CHECK(asymmetry(a.energy, 2) <= 1e-10 * a.energy[0][0]);
    CHECK(std::abs(a.average[0][1]) <= 1e-3 * a.average[0][0]);
    CHECK(std::abs(a.average[1][0]) <= 1e-3 * a.average[0][0]);
    CHECK(min_eigenvalue(a.energy, 2) >= -1e-10 * trace(a.energy, 2));
    CHECK(min_eigenvalue(a.average, 2) >= -1e-10 * trace(a.average, 2));
    CHECK(max_abs_difference(a.energy, a.average, 2) <= 0.02 * a.energy[0][0]);
}

TEST_CASE("zero solution has zero permeability") {
    CellSolution s = solution(64);
    for (auto& w : s.w) std::fill(w.data.begin(), w.data.end(), 0.0);
    const auto a = permeability(s);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            CHECK(a.energy[i][j] == 0.0);
            CHECK(a.average[i][j] == 0.0);
        }
}

TEST_CASE("Tartar forcing rescales the permeability") {
    CellOptions opt;
    opt.tartar = true;
    const auto t = solve_cell(disk_cell(0.25), 64, opt);
    CHECK(t.tartar);
    const auto at = permeability(t);
    const auto ag = permeability(solution(64));
    const double c2 = solution(64).c_eta * solution(64).c_eta;
    CHECK(at.energy[0][0] == doctest::Approx(ag.energy[0][0] / c2).epsilon(1e-6));
    CHECK(at.average[0][0] == doctest::Approx(ag.average[0][0] / c2).epsilon(1e-6));
}

TEST_CASE("Poincare constant") {
    const auto p = poincare_constant(disk_cell(0.25), 128);
    CHECK(p.lambda > 0.0);
    CHECK(p.constant == doctest::Approx(1.0 / std::sqrt(p.lambda)));
    const auto box = solver::smallest_eigenvalue(homogenized::box_masks(2, 128), 1e-8);
    CHECK(1.0 / std::sqrt(box.value) == doctest::Approx(1.0 / std::sqrt(2 * pi * pi)).epsilon(0.01));
}

TEST_CASE("small sweep keeps the scaling bands") {
    SweepOptions o;
    o.etas = {0.2, 0.1, 0.05};
    o.n_cap = 1024;
    const auto r = sweep_eta(o);
    REQUIRE(r.rows.size() == 3);
    for (const auto& row : r.rows) {
        CHECK(row.n == n_rule(o.hole, 2, row.eta));
        CHECK(asymmetry(row.a.energy, 2) <= 1e-10 * row.a.energy[0][0]);
        CHECK(min_eigenvalue(row.a.energy, 2) >= -1e-10 * trace(row.a.energy, 2));
        REQUIRE(row.poincare.has_value());
    }
    CHECK(r.bands.grad_w <= 3.0);
    CHECK(r.bands.q <= 3.0);
    CHECK(r.bands.w <= 3.0);
    CHECK(r.bands.poincare <= 4.0);
    REQUIRE(r.reference.has_value());
    CHECK(*r.reference == doctest::Approx(1.0 / pi));

    // Hasimoto's dilute expansion for a square array of cylinders, in the
    // c_eta^2 = 1/|log eta| normalization; tends to 1/(4 pi).
    for (const auto& row : r.rows) {
        if (row.eta > 0.1) continue;
        const double l = -std::log(row.eta);
        const double hasimoto = (l - 1.3105 + pi * row.eta * row.eta) / (4 * pi * l);
        CAPTURE(row.eta);
        CHECK(row.a.energy[0][0] == doctest::Approx(hasimoto).epsilon(0.005));
    }
}

TEST_CASE("n_rule resolves the hole") {
    CHECK(n_rule(HoleShape::ball(1.0), 2, 0.25) == 32);
    CHECK(n_rule(HoleShape::ball(1.0), 2, 0.2) == 64);
    CHECK(n_rule(HoleShape::ball(0.25), 2, 0.25) == 128);
    CHECK(n_rule(HoleShape::ball(1.0), 2, 0.9) == 16);
}

TEST_CASE("tiling preserves L2 norms and scales gradients") {
    const auto& s = solution(64);
    const auto t = tile_to_domain(s, 0.25, 256);
    REQUIRE(t.w.size() == 2);
    for (int i = 0; i < 2; ++i) {
        const auto nc = norms(s.w[i]);
        const auto nd = norms(t.w[i]);
        CHECK(nd.l2 == doctest::Approx(nc.l2).epsilon(1e-12));
        CHECK(nd.h1semi == doctest::Approx(4.0 * nc.h1semi).epsilon(1e-12));
        CHECK(norms(t.q[i]).l2 == doctest::Approx(norms(s.q[i]).l2).epsilon(1e-12));
    }
    const auto id = tile_to_domain(s, 1.0, 64);
    CHECK(id.w[0].data == s.w[0].data);
    try {
        tile_to_domain(s, 0.25, 200);
        FAIL("expected AlignmentError");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::AlignmentError);
    }
}

TEST_CASE("three-dimensional cell stays symmetric and PSD") {
    const auto s = solve_cell(disk_cell(0.4, 3), 32);
    const auto a = permeability(s);
    CHECK(asymmetry(a.energy, 3) <= 1e-10 * a.energy[0][0]);
    CHECK(min_eigenvalue(a.energy, 3) > 0.0);
    CHECK(a.energy[1][1] == doctest::Approx(a.energy[0][0]).epsilon(1e-6));
    CHECK(a.energy[2][2] == doctest::Approx(a.energy[0][0]).epsilon(1e-6));
}
