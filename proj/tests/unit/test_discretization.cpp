#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "perfstokes/discretization.hpp"
#include "perfstokes/errors.hpp"
#include "perfstokes/geometry.hpp"
#include "perfstokes/homogenized.hpp"
#include "perfstokes/spectral.hpp"

using namespace perfstokes;
using std::numbers::pi;

namespace {

MasksPtr torus(int dim, int n) { return std::make_shared<const GridMasks>(full_masks(Grid{dim, n, Boundary::Periodic})); }

MasksPtr punctured(int dim, int n) {
    const auto c = geometry::build_cell(dim, 0.25, geometry::HoleShape::ball(1.0), 0.4);
    return std::make_shared<const GridMasks>(geometry::rasterize(c, n));
}

double face_coord(const Grid& g, std::size_t idx, int comp, int axis) {
    return (g.coords(idx)[axis] + (axis == comp ? 0.0 : 0.5)) * g.h();
}

VelocityField random_velocity(const MasksPtr& m, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss;
    auto u = VelocityField::zeros(m);
    for (auto& v : u.data) v = gauss(rng);
    u.apply_mask();
    return u;
}

PressureField random_pressure(const MasksPtr& m, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss;
    auto p = PressureField::zeros(m);
    for (auto& v : p.data) v = gauss(rng);
    p.apply_mask();
    p.remove_mean();
    return p;
}

double l2(const VelocityField& u) { return std::sqrt(inner(u, u)); }
double l2(const PressureField& p) { return std::sqrt(inner(p, p)); }

}  // namespace

TEST_CASE("divergence of a constant field vanishes") {
    auto u = VelocityField::zeros(torus(2, 16));
    for (auto& v : u.component(0)) v = 1.0;
    const auto d = divergence(u);
    for (double v : d.data) CHECK(v == 0.0);
    const auto l = laplacian(u);
    for (double v : l.data) CHECK(v == 0.0);
}

TEST_CASE("divergence of a sine field is second-order accurate") {
    double errs[2];
    int k = 0;
    for (int n : {32, 64}) {
        const auto m = torus(2, n);
        auto u = VelocityField::zeros(m);
        for (std::size_t i = 0; i < m->grid.size(); ++i) {
            u.component(0)[i] = std::sin(2 * pi * face_coord(m->grid, i, 0, 0)) / (2 * pi);
        }
        const auto d = divergence(u);
        double err = 0.0;
        for (std::size_t i = 0; i < m->grid.size(); ++i) {
            const double x = (m->grid.coords(i)[0] + 0.5) * m->grid.h();
            err = std::max(err, std::abs(d.data[i] - std::cos(2 * pi * x)));
        }
        errs[k++] = err;
    }
    CHECK(errs[0] < 1e-2);
    CHECK(errs[0] / errs[1] == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("summation by parts and Laplacian symmetry hold to round-off") {
    std::mt19937_64 rng(11);
    const MasksPtr cases[] = {torus(2, 32), punctured(2, 32), homogenized::box_masks(2, 32), torus(3, 16),
                              punctured(3, 32), homogenized::box_masks(3, 16)};
    for (const auto& m : cases) {
        const auto u = random_velocity(m, rng);
        const auto v = random_velocity(m, rng);
        const auto p = random_pressure(m, rng);
        const double adj = inner(divergence(u), p) + inner(u, gradient(p));
        CHECK(std::abs(adj) <= 1e-12 * l2(u) * l2(p));
        const double sym = inner(laplacian(u), v) - inner(u, laplacian(v));
        CHECK(std::abs(sym) <= 1e-12 * l2(u) * l2(v));
        CHECK(inner(laplacian(u), u) <= 0.0);
        CHECK(energy_inner(u, v) == energy_inner(v, u));
    }
}

TEST_CASE("sine is an eigenfunction of the Laplacian") {
    double errs[2];
    int k = 0;
    for (int n : {32, 64}) {
        const auto m = torus(2, n);
        auto u = VelocityField::zeros(m);
        for (std::size_t i = 0; i < m->grid.size(); ++i) {
            u.component(0)[i] = std::sin(2 * pi * face_coord(m->grid, i, 0, 0));
        }
        const auto l = laplacian(u);
        double err = 0.0;
        for (std::size_t i = 0; i < m->grid.size(); ++i) {
            err = std::max(err, std::abs(-l.component(0)[i] - 4 * pi * pi * u.component(0)[i]));
        }
        errs[k++] = err;
    }
    CHECK(errs[0] < 0.2);
    CHECK(errs[0] / errs[1] == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("linear fields are reproduced away from walls") {
    const auto m = homogenized::box_masks(2, 16);
    auto u = VelocityField::zeros(m);
    for (std::size_t i = 0; i < m->grid.size(); ++i) {
        if (m->face_fluid[0][i]) u.component(0)[i] = 0.3 + 2.0 * face_coord(m->grid, i, 0, 1);
    }
    const auto l = laplacian(u);
    const auto d = divergence(u);
    for (std::size_t i = 0; i < m->grid.size(); ++i) {
        const auto c = m->grid.coords(i);
        if (c[0] < 2 || c[0] > 13 || c[1] < 1 || c[1] > 14) continue;
        CHECK(std::abs(l.component(0)[i]) < 1e-10);
        CHECK(std::abs(d.data[i]) < 1e-12);
    }
}

TEST_CASE("spectral inverse divergence") {
    SUBCASE("single mode") {
        const auto m = torus(2, 32);
        auto f = PressureField::zeros(m);
        for (std::size_t i = 0; i < m->grid.size(); ++i) {
            f.data[i] = std::cos(2 * pi * (m->grid.coords(i)[0] + 0.5) / 32.0);
        }
        const auto r = spectral::inverse_divergence(f);
        const auto d = divergence(r.u);
        for (std::size_t i = 0; i < m->grid.size(); ++i) {
            CHECK(d.data[i] == doctest::Approx(f.data[i]).epsilon(1e-12).scale(1.0));
            const double x = m->grid.coords(i)[0] / 32.0;
            CHECK(r.u.component(0)[i] == doctest::Approx(std::sin(2 * pi * x) / (2 * pi)).epsilon(2e-3).scale(1.0));
            CHECK(std::abs(r.u.component(1)[i]) < 1e-14);
        }
    }
    SUBCASE("zero") {
        const auto r = spectral::inverse_divergence(PressureField::zeros(torus(2, 16)));
        for (double v : r.u.data) CHECK(v == 0.0);
    }
    SUBCASE("random field, exact to round-off, idempotent") {
        std::mt19937_64 rng(5);
        for (int dim : {2, 3}) {
            const auto m = torus(dim, dim == 2 ? 64 : 16);
            const auto f = random_pressure(m, rng);
            const auto r = spectral::inverse_divergence(f);
            const auto d = divergence(r.u);
            double err = 0.0, fmax = 0.0;
            for (std::size_t i = 0; i < f.data.size(); ++i) {
                err = std::max(err, std::abs(d.data[i] - f.data[i]));
                fmax = std::max(fmax, std::abs(f.data[i]));
            }
            CHECK(err <= 1e-10 * fmax);
            CHECK(r.h1_constant > 0.0);
            const auto again = spectral::inverse_divergence(d);
            double diff = 0.0, umax = 0.0;
            for (std::size_t i = 0; i < r.u.data.size(); ++i) {
                diff = std::max(diff, std::abs(again.u.data[i] - r.u.data[i]));
                umax = std::max(umax, std::abs(r.u.data[i]));
            }
            CHECK(diff <= 1e-12 * umax);
        }
    }
    SUBCASE("non-zero mean is rejected") {
        auto f = PressureField::zeros(torus(2, 16));
        for (auto& v : f.data) v = 1.0;
        try {
            spectral::inverse_divergence(f);
            FAIL("expected NonZeroMean");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::NonZeroMean);
        }
    }
}

TEST_CASE("norm examples") {
    const auto m = torus(2, 16);
    auto u = VelocityField::zeros(m);
    for (auto& v : u.component(1)) v = -2.5;
    CHECK(norms(u).l2 == doctest::Approx(2.5).epsilon(1e-14));
    CHECK(norms(u).h1semi == 0.0);
    CHECK(norms(u).linf == 2.5);

    for (int n : {16, 64}) {
        const auto mm = torus(2, n);
        auto s = VelocityField::zeros(mm);
        for (std::size_t i = 0; i < mm->grid.size(); ++i) s.component(0)[i] = std::sin(2 * pi * face_coord(mm->grid, i, 0, 0));
        CHECK(norms(s).l2 == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1.0 / (n * n)));
    }

    // A field living only on solid faces is masked away entirely.
    const auto mp = punctured(2, 64);
    auto solid = VelocityField::zeros(mp);
    for (int c = 0; c < 2; ++c) {
        for (std::size_t i = 0; i < mp->grid.size(); ++i) {
            if (!mp->face_fluid[c][i]) solid.component(c)[i] = 1.0;
        }
    }
    solid.apply_mask();
    const auto nr = norms(solid);
    CHECK(nr.l2 == 0.0);
    CHECK(nr.h1semi == 0.0);
    CHECK(nr.linf == 0.0);
}

TEST_CASE("field dump header") {
    std::ostringstream os;
    write_field(os, VelocityField::zeros(torus(2, 8)));
    std::istringstream is(os.str());
    int dim = 0, n = 0, comps = 0;
    is >> dim >> n >> comps;
    CHECK(dim == 2);
    CHECK(n == 8);
    CHECK(comps == 2);
}
