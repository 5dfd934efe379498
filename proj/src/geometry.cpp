#include "perfstokes/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "perfstokes/errors.hpp"
#include "perfstokes/format.hpp"

namespace perfstokes::geometry {

namespace {

constexpr int kDirectionSamples = 1024;

void check_grid_dim(int dim) {
    require(dim == 2 || dim == 3, ErrorCode::InvalidArgument, "only d = 2 and d = 3 are supported");
}

std::vector<std::array<double, 3>> sample_directions(int dim) {
    std::vector<std::array<double, 3>> dirs;
    dirs.reserve(kDirectionSamples);
    if (dim == 2) {
        for (int k = 0; k < kDirectionSamples; ++k) {
            const double t = 2.0 * std::numbers::pi * k / kDirectionSamples;
            dirs.push_back({std::cos(t), std::sin(t), 0.0});
        }
        return dirs;
    }
    // Fibonacci lattice on the sphere.
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < kDirectionSamples; ++k) {
        const double z = 1.0 - 2.0 * (k + 0.5) / kDirectionSamples;
        const double r = std::sqrt(1.0 - z * z);
        dirs.push_back({r * std::cos(golden * k), r * std::sin(golden * k), z});
    }
    return dirs;
}

double ball_sdf(std::span<const double> y, double radius) {
    double s = 0.0;
    for (double v : y) s += v * v;
    return std::sqrt(s) - radius;
}

double square_sdf(std::span<const double> y, double halfwidth) {
    double m = 0.0;
    for (double v : y) m = std::max(m, std::abs(v));
    return m - halfwidth;
}

// Classifies one sample point given its hole-local coordinate y.
struct PointClass {
    bool closed = false;
    bool open = false;
};

PointClass classify_local(const HoleShape& hole, const double* y, int dim) {
    const double s = hole.signed_distance(std::span<const double>(y, dim));
    return {s <= 0.0, s < 0.0};
}

// Fills masks from a classifier of (integer index, per-axis half offsets).
template <class Classifier>
GridMasks build_masks(const Grid& grid, Classifier&& classify) {
    GridMasks m;
    m.grid = grid;
    const std::size_t size = grid.size();
    m.cell_active.assign(size, 1);
    m.scalar_fluid.assign(size, 1);
    for (int c = 0; c < grid.dim; ++c) m.face_fluid[c].assign(size, 1);

    std::array<double, 3> offset{0.5, 0.5, 0.5};
    for (std::size_t idx = 0; idx < size; ++idx) {
        const auto ic = grid.coords(idx);
        const PointClass p = classify(ic, offset);
        m.cell_active[idx] = p.open ? 0 : 1;
        m.scalar_fluid[idx] = p.closed ? 0 : 1;
    }
    for (int c = 0; c < grid.dim; ++c) {
        std::array<double, 3> face_offset{0.5, 0.5, 0.5};
        face_offset[c] = 0.0;
        const std::size_t stride = grid.stride(c);
        for (std::size_t idx = 0; idx < size; ++idx) {
            const auto ic = grid.coords(idx);
            const std::size_t below = ic[c] == 0 ? idx + (grid.n - 1) * stride : idx - stride;
            bool fluid = true;
            if (grid.bc == Boundary::DirichletZero && ic[c] == 0) {
                fluid = false;
            } else if (!m.cell_active[idx] || !m.cell_active[below]) {
                fluid = false;
            } else {
                fluid = !classify(ic, face_offset).closed;
            }
            m.face_fluid[c][idx] = fluid ? 1 : 0;
        }
    }
    // Cells left without any fluid face carry no constraint; drop them.
    for (std::size_t idx = 0; idx < size; ++idx) {
        if (!m.cell_active[idx]) continue;
        const auto ic = grid.coords(idx);
        bool any = false;
        for (int c = 0; c < grid.dim && !any; ++c) {
            const std::size_t stride = grid.stride(c);
            const std::size_t above = ic[c] == grid.n - 1 ? idx - (grid.n - 1) * stride : idx + stride;
            any = m.face_fluid[c][idx] || m.face_fluid[c][above];
        }
        if (!any) m.cell_active[idx] = 0;
    }
    return m;
}

}  // namespace

HoleShape HoleShape::ball(double radius) {
    require(radius > 0.0, ErrorCode::InvalidArgument, "ball radius must be positive");
    HoleShape h;
    h.kind_ = Kind::Ball;
    h.size_ = radius;
    return h;
}

HoleShape HoleShape::square(double halfwidth) {
    require(halfwidth > 0.0, ErrorCode::InvalidArgument, "square half-width must be positive");
    HoleShape h;
    h.kind_ = Kind::Square;
    h.size_ = halfwidth;
    return h;
}

HoleShape HoleShape::implicit(SignedDistance sdf, double delta1, double delta2, std::string name) {
    require(static_cast<bool>(sdf), ErrorCode::InvalidArgument, "implicit hole needs a signed distance");
    require(0.0 < delta1 && delta1 <= delta2, ErrorCode::InvalidArgument, "implicit hole needs 0 < delta1 <= delta2");
    HoleShape h;
    h.kind_ = Kind::Implicit;
    h.size_ = delta2;
    h.delta1_ = delta1;
    h.delta2_ = delta2;
    h.sdf_ = std::move(sdf);
    h.name_ = std::move(name);
    return h;
}

HoleShape HoleShape::parse(const std::string& text) {
    const auto colon = text.find(':');
    require(colon != std::string::npos, ErrorCode::ConfigError, "hole must look like disk:R or square:H, got '" + text + "'");
    const std::string kind = text.substr(0, colon);
    const double value = parse_real(text.substr(colon + 1));
    if (kind == "disk" || kind == "ball") return ball(value);
    if (kind == "square") return square(value);
    fail(ErrorCode::ConfigError, "unknown hole kind '" + kind + "'");
}

double HoleShape::delta1(int dim) const {
    (void)dim;
    return kind_ == Kind::Implicit ? delta1_ : size_;
}

double HoleShape::delta2(int dim) const {
    switch (kind_) {
        case Kind::Ball: return size_;
        case Kind::Square: return size_ * std::sqrt(static_cast<double>(dim));
        case Kind::Implicit: return delta2_;
    }
    return size_;
}

double HoleShape::signed_distance(std::span<const double> y) const {
    switch (kind_) {
        case Kind::Ball: return ball_sdf(y, size_);
        case Kind::Square: return square_sdf(y, size_);
        case Kind::Implicit: return sdf_(y);
    }
    return 1.0;
}

std::string HoleShape::describe() const {
    switch (kind_) {
        case Kind::Ball: return "disk:" + format_shortest(size_);
        case Kind::Square: return "square:" + format_shortest(size_);
        case Kind::Implicit: return "implicit:" + name_;
    }
    return "?";
}

CellGeometry build_cell(int dim, double eta, const HoleShape& hole, double delta3) {
    check_grid_dim(dim);
    require(0.0 < eta && eta < 1.0, ErrorCode::InvalidArgument, "eta must lie in (0,1), got " + format_real(eta));
    const double d1 = hole.delta1(dim);
    const double d2 = hole.delta2(dim);

    for (const auto& dir : sample_directions(dim)) {
        std::array<double, 3> inner{};
        std::array<double, 3> outer{};
        for (int a = 0; a < dim; ++a) {
            inner[a] = dir[a] * d1 * (1.0 - 1e-12);
            outer[a] = dir[a] * d2 * (1.0 + 1e-12);
        }
        if (!hole.contains_closed(std::span<const double>(inner.data(), dim))) {
            fail(ErrorCode::InclusionViolation, "B(0, delta1*eta) is not inside eta*T");
        }
        if (hole.contains_closed(std::span<const double>(outer.data(), dim))) {
            fail(ErrorCode::InclusionViolation, "eta*T is not inside B(0, delta2*eta)");
        }
    }
    if (!(d2 * eta < delta3)) {
        fail(ErrorCode::InclusionViolation, "eta*T is not inside B(0, delta3): delta2*eta = " + format_real(d2 * eta) +
                                                " >= delta3 = " + format_real(delta3));
    }
    if (!(delta3 < 0.5)) {
        fail(ErrorCode::InclusionViolation, "B(0, delta3) is not inside Q_0: delta3 = " + format_real(delta3));
    }
    CellGeometry cell;
    cell.dim = dim;
    cell.eta = eta;
    cell.hole = hole;
    cell.delta3 = delta3;
    return cell;
}

CellGeometry hole_free_cell(int dim) {
    check_grid_dim(dim);
    CellGeometry cell;
    cell.dim = dim;
    return cell;
}

std::array<double, 3> PerforatedGeometry::hole_center(const std::array<int, 3>& k) const {
    std::array<double, 3> x{0.0, 0.0, 0.0};
    for (int a = 0; a < dim; ++a) x[a] = epsilon * (k[a] + 0.5);
    return x;
}

PerforatedGeometry build_perforated(int dim, double epsilon, double a_eps, const HoleShape& hole) {
    check_grid_dim(dim);
    require(0.0 < epsilon && epsilon <= 1.0, ErrorCode::OrderingViolation, "require 0 < epsilon <= 1");
    require(0.0 < a_eps && a_eps < epsilon, ErrorCode::OrderingViolation, "require 0 < a_eps < epsilon");
    // Holes stay strictly inside their own lattice cell, hence disjoint.
    require(hole.delta2(dim) * a_eps < 0.5 * epsilon, ErrorCode::InclusionViolation,
            "a_eps*T does not fit inside B(eps x_k, eps/2)");

    PerforatedGeometry g;
    g.dim = dim;
    g.epsilon = epsilon;
    g.a_eps = a_eps;
    g.hole = hole;

    // Closed cube eps*[k, k+1] inside (0,1): eps*k > 0 and eps*(k+1) < 1.
    std::vector<int> admissible;
    for (int k = 1; epsilon * (k + 1) < 1.0; ++k) admissible.push_back(k);
    const int count = static_cast<int>(admissible.size());
    if (count == 0) return g;
    const int total = dim == 2 ? count * count : count * count * count;
    g.k_set.reserve(total);
    for (int t = 0; t < total; ++t) {
        std::array<int, 3> k{0, 0, 0};
        int rem = t;
        for (int a = 0; a < dim; ++a) {
            k[a] = admissible[rem % count];
            rem /= count;
        }
        g.k_set.push_back(k);
    }
    return g;
}

GridMasks rasterize(const CellGeometry& cell, int n) {
    require(n >= 8, ErrorCode::InvalidArgument, "grid needs at least 8 cells per side");
    Grid grid{cell.dim, n, Boundary::Periodic};
    if (!cell.has_hole()) return full_masks(grid);

    const double eta = *cell.eta;
    const double across = 2.0 * cell.hole.delta2(cell.dim) * eta * n;
    if (across < kMinHoleCells) {
        fail(ErrorCode::UnresolvedHole, "hole spans " + format_shortest(across) + " cells across its diameter, need " +
                                            format_shortest(kMinHoleCells));
    }
    const int dim = cell.dim;
    auto classify = [&](const std::array<int, 3>& ic, const std::array<double, 3>& off) {
        double y[3];
        for (int a = 0; a < dim; ++a) y[a] = ((ic[a] + off[a]) / n - 0.5) / eta;
        return classify_local(cell.hole, y, dim);
    };
    GridMasks m = build_masks(grid, classify);
    m.hole_cells_across = across;
    m.hole_count = 1;
    return m;
}

GridMasks rasterize_unchecked(const PerforatedGeometry& domain, int n) {
    require(n >= 8, ErrorCode::InvalidArgument, "grid needs at least 8 cells per side");
    const int dim = domain.dim;
    Grid grid{dim, n, Boundary::DirichletZero};
    if (domain.k_set.empty()) return full_masks(grid);

    int kmin = domain.k_set.front()[0];
    int kmax = kmin;
    for (const auto& k : domain.k_set) {
        kmin = std::min(kmin, k[0]);
        kmax = std::max(kmax, k[0]);
    }
    const double eta = domain.a_eps / domain.epsilon;
    const double cells_per_lattice = n * domain.epsilon;
    const int nc = static_cast<int>(std::lround(cells_per_lattice));
    const bool aligned = nc > 0 && std::abs(cells_per_lattice - nc) < 1e-9;

    auto classify = [&](const std::array<int, 3>& ic, const std::array<double, 3>& off) {
        double y[3];
        for (int a = 0; a < dim; ++a) {
            int k = 0;
            if (aligned) {
                k = ic[a] / nc;
                // Same arithmetic as the cell rasterizer at resolution nc.
                const int local = ic[a] - k * nc;
                y[a] = ((local + off[a]) / nc - 0.5) / eta;
            } else {
                const double x = (ic[a] + off[a]) / n;
                k = static_cast<int>(std::floor(x / domain.epsilon));
                y[a] = (x - domain.epsilon * (k + 0.5)) / domain.a_eps;
            }
            if (k < kmin || k > kmax) return PointClass{};
        }
        return classify_local(domain.hole, y, dim);
    };
    GridMasks m = build_masks(grid, classify);
    m.hole_cells_across = 2.0 * domain.hole.delta2(dim) * domain.a_eps * n;
    m.hole_count = domain.k_set.size();
    return m;
}

GridMasks rasterize(const PerforatedGeometry& domain, int n) {
    if (!domain.k_set.empty()) {
        const double across = 2.0 * domain.hole.delta2(domain.dim) * domain.a_eps * n;
        if (across < kMinHoleCells) {
            fail(ErrorCode::UnresolvedHole, "holes span " + format_shortest(across) + " cells across, need " +
                                                format_shortest(kMinHoleCells));
        }
    }
    return rasterize_unchecked(domain, n);
}

}  // namespace perfstokes::geometry
