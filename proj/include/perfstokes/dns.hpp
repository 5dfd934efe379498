#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "perfstokes/cell_problem.hpp"
#include "perfstokes/discretization.hpp"
#include "perfstokes/geometry.hpp"
#include "perfstokes/homogenized.hpp"
#include "perfstokes/regimes.hpp"

namespace perfstokes::dns {

struct DnsOptions {
    double tol = 1e-6;
    int max_iter = 5000;
    /// Cahouet-Chabard weight of the pressure preconditioner; negative selects
    /// 0.3 times friction_estimate.
    double schur_gamma = -1.0;
    /// Shift of the spectral momentum preconditioner.
    double precond_shift = 0.0;
};

struct DnsResult {
    geometry::PerforatedGeometry geometry;
    int n = 0;
    MasksPtr masks;      // perforated domain
    MasksPtr box;        // Omega without holes
    VelocityField u;     // on masks
    PressureField p;     // zero mean over active cells
    VelocityField u_ext; // zero extension, on box
    std::optional<regimes::RegimeParams> params;  // absent without holes
    Norms u_norms;
    Norms ext_norms;
    SolveReport report;
    int inner_iterations = 0;
    double energy = 0.0;  // ||grad u||^2
    double work = 0.0;    // <f, u>
};

/// Smallest power of two N >= 16 with every hole diameter spanning
/// `cells_across` cells; BudgetExceeded above n_cap.
int grid_for(const geometry::PerforatedGeometry& geom, int n_cap, double cells_across = 8.0);

/// Default n_cap: 1024 in 2D, 128 in 3D.
int default_cap(int dim);

/// Friction scale 1/(eps^2 K) of the perforated medium, from the dilute
/// array drag; steers the pressure preconditioner only.
double friction_estimate(const geometry::PerforatedGeometry& geom);

DnsResult solve_dns(const geometry::PerforatedGeometry& geom, const homogenized::Forcing& f, int n,
                    const DnsOptions& options = {});

/// Block averages of a cell-centred field on a lattice of blocks of side
/// `window` starting at the origin; the last block along an axis is cut at
/// the boundary. Each grid cell belongs to the block holding its centre.
struct CoarseField {
    int dim = 2;
    int components = 1;
    int blocks = 1;                      // per axis
    std::vector<double> values;          // components * blocks^dim
    std::vector<double> weights;         // cells per block / total cells
    std::vector<std::size_t> cell_block; // block of every fine cell

    double mean(int component) const;
    /// Value of block b, component c, at fine cell idx.
    double at_cell(int component, std::size_t idx) const {
        return values[static_cast<std::size_t>(component) * weights.size() + cell_block[idx]];
    }
};

/// Velocity at cell centres (average of the two faces along each axis).
std::vector<double> velocity_at_centres(const VelocityField& u);

/// Box filter of the velocity; WindowTooSmall if window < 2 epsilon.
CoarseField coarse_grain(const VelocityField& u, double window, double epsilon);
/// Box filter of a raw cell-centred field with `components` blocks of n^d.
CoarseField coarse_grain_cells(const Grid& grid, std::span<const double> values, int components, double window,
                               double epsilon);

struct ComparisonRow {
    double epsilon = 0.0;
    double a_eps = 0.0;
    double sigma = 0.0;
    int n = 0;
    std::size_t holes = 0;
    double rel_l2_velocity = 0.0;
    double rel_l2_pressure = 0.0;
    double rel_h1_velocity = 0.0;  // small holes only
    bool absolute = false;         // limit velocity zero: errors are absolute
    double l2_ext = 0.0;
    double h1_ext = 0.0;
    double energy_gap = 0.0;       // | ||grad u||^2 - <f,u> | / <f,u>
    double extension_gap = 0.0;    // largest extension norm mismatch
    int iterations = 0;
    double residual = 0.0;
    double seconds = 0.0;
};

struct CompareOptions {
    regimes::ScalingFamily family;
    geometry::HoleShape hole = geometry::HoleShape::ball(1.0);
    homogenized::Forcing forcing;
    std::vector<double> eps_list;
    double tol = 1e-6;
    int n_cap = 0;            // 0 selects default_cap(dim)
    double cells_across = 8.0;
    double window_factor = 2.0;
    /// Permeability for the limit system. When absent it comes from a cell
    /// computation: A(eta) for families with constant eta, else the
    /// extrapolated limit of an eta sweep.
    std::optional<solver::Matrix3> permeability;
    std::vector<double> sweep_etas;  // used when the limit is extrapolated
    double sweep_tol = 1e-8;
};

struct Comparison {
    regimes::Regime regime;
    solver::Matrix3 permeability{};
    std::string permeability_source;
    std::vector<ComparisonRow> rows;
};

Comparison compare_regime(const CompareOptions& options);

/// max/min over rows of ||u||/(||grad u|| sigma), ||grad u||/sigma and
/// ||u||/sigma^2 for the zero extension; 0 with fewer than two rows.
struct PerforatedBands {
    double poincare = 0.0;
    double gradient = 0.0;
    double l2 = 0.0;
};
PerforatedBands perforated_bands(const std::vector<ComparisonRow>& rows);

/// CSV with the ComparisonRow columns, one row per epsilon.
void write_comparison_csv(std::ostream& out, const Comparison& cmp, bool with_timing = true);

}  // namespace perfstokes::dns
