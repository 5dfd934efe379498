#pragma once

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "perfstokes/grid.hpp"

namespace perfstokes::geometry {

/// Model hole T, a closed bounded set containing the origin with
/// B(0, delta1) inside T inside B(0, delta2).
class HoleShape {
public:
    enum class Kind { Ball, Square, Implicit };

    /// Negative inside, zero on the boundary, positive outside.
    using SignedDistance = std::function<double(std::span<const double>)>;

    static HoleShape ball(double radius);
    static HoleShape square(double halfwidth);
    static HoleShape implicit(SignedDistance sdf, double delta1, double delta2, std::string name);
    /// "disk:R", "ball:R" or "square:H".
    static HoleShape parse(const std::string& text);

    Kind kind() const { return kind_; }
    double size() const { return size_; }
    double delta1(int dim) const;
    double delta2(int dim) const;
    double signed_distance(std::span<const double> y) const;
    bool contains_closed(std::span<const double> y) const { return signed_distance(y) <= 0.0; }
    bool contains_open(std::span<const double> y) const { return signed_distance(y) < 0.0; }
    std::string describe() const;

private:
    Kind kind_ = Kind::Ball;
    double size_ = 0.0;
    double delta1_ = 0.0;
    double delta2_ = 0.0;
    SignedDistance sdf_;
    std::string name_;
};

/// Punctured periodic cell Q_eta = Q_0 minus eta*T, with the hole centred in
/// the unit cell [0,1)^d. A cell without eta is the hole-free torus.
struct CellGeometry {
    int dim = 2;
    std::optional<double> eta;
    HoleShape hole = HoleShape::ball(0.25);
    double delta3 = 0.0;

    bool has_hole() const { return eta.has_value(); }
};

/// Validates 0 < eta < 1 and the chain B(0, d1 eta) in eta T in B(0, d2 eta)
/// in B(0, d3) in Q_0 by sampling at least 10^3 directions.
CellGeometry build_cell(int dim, double eta, const HoleShape& hole, double delta3);
CellGeometry hole_free_cell(int dim);

/// Unit cube perforated by holes eps*(k + 1/2) + a_eps*T for k in K_eps.
///
/// Lattice cells are eps*(k + [0,1]^d); K_eps keeps the cells whose closure
/// lies inside the open unit cube, so cells touching the boundary carry no hole.
struct PerforatedGeometry {
    int dim = 2;
    double epsilon = 1.0;
    double a_eps = 0.0;
    HoleShape hole = HoleShape::ball(1.0);
    std::vector<std::array<int, 3>> k_set;

    std::array<double, 3> hole_center(const std::array<int, 3>& k) const;
};

PerforatedGeometry build_perforated(int dim, double epsilon, double a_eps, const HoleShape& hole);

/// Minimum number of grid cells across a hole diameter.
inline constexpr double kMinHoleCells = 4.0;

/// Staircase masks: a face is solid when its centre lies in the closed hole or
/// when it borders an excluded pressure cell; a pressure cell is excluded when
/// its centre lies in the open hole.
GridMasks rasterize(const CellGeometry& cell, int n);
GridMasks rasterize(const PerforatedGeometry& domain, int n);

/// Same masks as rasterize(domain, n) without the resolution check; used for
/// the hole-free domain and for diagnostics.
GridMasks rasterize_unchecked(const PerforatedGeometry& domain, int n);

}  // namespace perfstokes::geometry
