#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace perfstokes {

/// Closure applied on all sides of the unit cube.
enum class Boundary {
    Periodic,      // unit cell Q_0, hole centred at (1/2, ..., 1/2)
    DirichletZero  // unit domain Omega with no-slip walls
};

/// Uniform MAC grid on the unit cube with n cells per side.
///
/// Storage convention shared by every field: one value per cell index
/// (i0, i1, i2), axis 0 fastest. Cell-centred quantities sit at (i + 1/2) h.
/// Velocity component c sits on the lower face of cell i along axis c, i.e.
/// at i_c h on axis c and (i_a + 1/2) h on the other axes. Under
/// DirichletZero the face with i_c = 0 is the wall x_c = 0, and the wall
/// x_c = 1 aliases it through the periodic index wrap, so both walls carry
/// exactly zero.
struct Grid {
    int dim = 2;
    int n = 0;
    Boundary bc = Boundary::Periodic;

    double h() const { return 1.0 / n; }
    double cell_volume() const;
    std::size_t size() const;  // n^dim
    int extent(int axis) const { return axis < dim ? n : 1; }
    std::size_t stride(int axis) const;
    std::size_t index(int i0, int i1, int i2) const {
        return static_cast<std::size_t>(i0) + static_cast<std::size_t>(n) * (static_cast<std::size_t>(i1) +
                                                                               static_cast<std::size_t>(extent(1)) * i2);
    }
    std::array<int, 3> coords(std::size_t idx) const;

    bool operator==(const Grid& other) const = default;
};

/// Fluid/solid classification on a MAC grid.
///
/// face_fluid[c] marks velocity unknowns of component c; cell_active marks
/// pressure unknowns; scalar_fluid marks cell-centred unknowns of the scalar
/// Poincare problem. Solid entries of every field are exactly zero.
struct GridMasks {
    Grid grid;
    std::array<std::vector<std::uint8_t>, 3> face_fluid;
    std::vector<std::uint8_t> cell_active;
    std::vector<std::uint8_t> scalar_fluid;
    /// Grid cells across the widest hole diameter; 0 when there is no hole.
    double hole_cells_across = 0.0;
    std::size_t hole_count = 0;

    bool has_hole() const { return hole_count > 0; }
    /// True when some velocity unknown is pinned by a hole or a wall.
    bool has_dirichlet_faces() const;
    /// True when some scalar unknown neighbours a hole or a wall.
    bool has_scalar_dirichlet() const;
    std::size_t fluid_face_count() const;
    std::size_t active_cell_count() const;
    /// Fraction of cells whose pressure unknown is active.
    double fluid_volume_fraction() const;

    /// One character per entry ('F' fluid, 'S' solid); component -1 selects
    /// the pressure mask. Rows run along axis 0, one line per (i1, i2).
    std::string to_text(int component) const;
};

/// Masks with every unknown fluid (no holes).
GridMasks full_masks(const Grid& grid);

/// Connected components of active pressure cells, linked through fluid faces.
int pressure_components(const GridMasks& masks);

}  // namespace perfstokes
