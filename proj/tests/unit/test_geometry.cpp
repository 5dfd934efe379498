#include <doctest.h>

#include <cmath>
#include <numbers>

#include "perfstokes/errors.hpp"
#include "perfstokes/geometry.hpp"

using namespace perfstokes;
using namespace perfstokes::geometry;

namespace {

template <class F>
ErrorCode code_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error raised");
    return ErrorCode::InvalidArgument;
}

// Brute-force count of lattice cells eps*(k + [0,1]^d) inside the open unit cube.
std::size_t interior_cells(int dim, double eps) {
    const int m = static_cast<int>(std::ceil(1.0 / eps)) + 1;
    std::size_t count = 0;
    const int m2 = dim >= 2 ? m : 1, m3 = dim >= 3 ? m : 1;
    for (int k0 = -1; k0 <= m; ++k0)
        for (int k1 = -1; k1 <= m2; ++k1)
            for (int k2 = (dim >= 3 ? -1 : 0); k2 <= (dim >= 3 ? m3 : 0); ++k2) {
                const int k[3] = {k0, k1, k2};
                bool inside = true;
                for (int a = 0; a < dim; ++a) {
                    const double lo = eps * k[a], hi = eps * (k[a] + 1);
                    inside = inside && lo > 0.0 && hi < 1.0;
                }
                count += inside;
            }
    return count;
}

}  // namespace

TEST_CASE("build_cell examples") {
    const auto c = build_cell(2, 0.25, HoleShape::ball(0.25), 0.3);
    CHECK(c.has_hole());
    // eta*T contains y iff T contains y/eta.
    const double inside[2] = {0.06 / 0.25, 0.0};
    const double outside[2] = {0.065 / 0.25, 0.0};
    CHECK(c.hole.contains_closed(std::span<const double>(inside, 2)));
    CHECK(!c.hole.contains_closed(std::span<const double>(outside, 2)));
    CHECK(*c.eta * c.hole.delta2(2) == doctest::Approx(0.0625));

    CHECK(code_of([] { build_cell(2, 0.9, HoleShape::ball(0.4), 0.3); }) == ErrorCode::InclusionViolation);
    CHECK_NOTHROW(build_cell(3, 0.5, HoleShape::ball(0.3), 0.45));
    CHECK(code_of([] { build_cell(2, 1.0, HoleShape::ball(0.3), 0.45); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("build_perforated counts interior cells") {
    CHECK(build_perforated(2, 0.25, 1.0 / 16, HoleShape::ball(1.0)).k_set.size() == 4);
    CHECK(build_perforated(2, 1.0, 0.5, HoleShape::ball(0.25)).k_set.size() == 0);
    CHECK(build_perforated(3, 0.25, 1.0 / 32, HoleShape::ball(1.0)).k_set.size() == 8);
    CHECK(interior_cells(2, 0.25) == 4);
    CHECK(interior_cells(3, 0.25) == 8);
    for (double eps : {1.0 / 3, 0.3, 1.0 / 8, 0.11}) {
        CAPTURE(eps);
        CHECK(build_perforated(2, eps, eps / 8, HoleShape::ball(1.0)).k_set.size() == interior_cells(2, eps));
    }
}

TEST_CASE("perforated holes sit at cell centres") {
    const auto g = build_perforated(2, 0.25, 1.0 / 16, HoleShape::ball(1.0));
    for (const auto& k : g.k_set) {
        const auto c = g.hole_center(k);
        CHECK(c[0] == doctest::Approx(0.25 * (k[0] + 0.5)));
        CHECK(c[1] == doctest::Approx(0.25 * (k[1] + 0.5)));
    }
}

TEST_CASE("rasterize resolution threshold") {
    const auto c = build_cell(2, 0.25, HoleShape::ball(0.25), 0.3);
    const auto m = rasterize(c, 64);
    CHECK(m.hole_cells_across == doctest::Approx(8.0));
    CHECK(m.has_hole());
    CHECK(code_of([&] { rasterize(c, 16); }) == ErrorCode::UnresolvedHole);
}

TEST_CASE("hole-free cell is all fluid and periodic") {
    const auto m = rasterize(hole_free_cell(2), 16);
    CHECK(m.grid.bc == Boundary::Periodic);
    CHECK(!m.has_hole());
    CHECK(m.fluid_face_count() == 2u * 256u);
    CHECK(m.active_cell_count() == 256u);
    CHECK(!m.has_dirichlet_faces());
}

TEST_CASE("faces inside the closed hole are solid") {
    const auto c = build_cell(2, 0.25, HoleShape::ball(1.0), 0.4);
    const auto m = rasterize(c, 64);
    const double h = 1.0 / 64;
    for (int comp = 0; comp < 2; ++comp) {
        for (std::size_t idx = 0; idx < m.grid.size(); ++idx) {
            const auto ij = m.grid.coords(idx);
            double y[2];
            for (int a = 0; a < 2; ++a) y[a] = (ij[a] + (a == comp ? 0.0 : 0.5)) * h - 0.5;
            if (std::hypot(y[0], y[1]) <= 0.25) CHECK(m.face_fluid[comp][idx] == 0);
        }
    }
    CHECK(pressure_components(m) == 1);
}

TEST_CASE("fluid fraction converges at first order") {
    const double eta = 0.3;
    const auto c = build_cell(2, eta, HoleShape::ball(1.0), 0.4);
    const double exact = 1.0 - std::numbers::pi * eta * eta;
    double prev = 0.0;
    for (int n : {32, 64, 128, 256}) {
        const double err = std::abs(rasterize(c, n).fluid_volume_fraction() - exact);
        CAPTURE(n);
        CHECK(err <= 4.0 / n);
        if (n > 32) CHECK(err <= prev + 2.0 / n);
        prev = err;
    }
}

TEST_CASE("masks of symmetric holes are dihedral invariant") {
    for (const auto& hole : {HoleShape::ball(1.0), HoleShape::square(1.0)}) {
        const auto c = build_cell(2, 0.2, hole, 0.4);
        const int n = 40;
        const auto m = rasterize(c, n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                const auto p = m.cell_active[m.grid.index(i, j, 0)];
                CHECK(p == m.cell_active[m.grid.index(j, i, 0)]);
                CHECK(p == m.cell_active[m.grid.index(n - 1 - i, j, 0)]);
                // x-faces map to x-faces under x -> 1 - x with a shift of one index.
                CHECK(m.face_fluid[0][m.grid.index(i, j, 0)] == m.face_fluid[0][m.grid.index((n - i) % n, j, 0)]);
                CHECK(m.face_fluid[0][m.grid.index(i, j, 0)] == m.face_fluid[1][m.grid.index(j, i, 0)]);
            }
        }
    }
}

TEST_CASE("perforated masks repeat the cell masks") {
    const double eps = 0.25;
    const int per_cell = 32;
    const auto dom = build_perforated(2, eps, 0.05, HoleShape::ball(1.0));
    const auto md = rasterize(dom, per_cell * 4);
    const auto mc = rasterize(build_cell(2, 0.2, HoleShape::ball(1.0), 0.4), per_cell);
    for (const auto& k : dom.k_set) {
        for (int i = 0; i < per_cell; ++i) {
            for (int j = 0; j < per_cell; ++j) {
                const auto dc = md.grid.index(k[0] * per_cell + i, k[1] * per_cell + j, 0);
                const auto cc = mc.grid.index(i, j, 0);
                CHECK(md.cell_active[dc] == mc.cell_active[cc]);
                // Faces on the lower cell edge also depend on the neighbour cell.
                if (i > 0) CHECK(md.face_fluid[0][dc] == mc.face_fluid[0][cc]);
                if (j > 0) CHECK(md.face_fluid[1][dc] == mc.face_fluid[1][cc]);
            }
        }
    }
}

TEST_CASE("hole shape parsing") {
    CHECK(HoleShape::parse("disk:1").kind() == HoleShape::Kind::Ball);
    CHECK(HoleShape::parse("square:0.5").kind() == HoleShape::Kind::Square);
    CHECK(HoleShape::parse("square:0.5").delta2(2) == doctest::Approx(0.5 * std::sqrt(2.0)));
    CHECK(code_of([] { HoleShape::parse("triangle:1"); }) == ErrorCode::ConfigError);
}
