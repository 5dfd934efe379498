#include "perfstokes/grid.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace perfstokes {

double Grid::cell_volume() const { return std::pow(h(), dim); }

std::size_t Grid::size() const {
    std::size_t s = 1;
    for (int a = 0; a < dim; ++a) s *= static_cast<std::size_t>(n);
    return s;
}

std::size_t Grid::stride(int axis) const {
    std::size_t s = 1;
    for (int a = 0; a < axis; ++a) s *= static_cast<std::size_t>(n);
    return s;
}

std::array<int, 3> Grid::coords(std::size_t idx) const {
    std::array<int, 3> c{0, 0, 0};
    for (int a = 0; a < dim; ++a) {
        c[a] = static_cast<int>(idx % n);
        idx /= n;
    }
    return c;
}

bool GridMasks::has_dirichlet_faces() const {
    if (grid.bc == Boundary::DirichletZero) return true;
    for (int c = 0; c < grid.dim; ++c) {
        for (auto f : face_fluid[c]) {
            if (!f) return true;
        }
    }
    return false;
}

bool GridMasks::has_scalar_dirichlet() const {
    if (grid.bc == Boundary::DirichletZero) return true;
    for (auto f : scalar_fluid) {
        if (!f) return true;
    }
    return false;
}

std::size_t GridMasks::fluid_face_count() const {
    std::size_t count = 0;
    for (int c = 0; c < grid.dim; ++c) count += std::accumulate(face_fluid[c].begin(), face_fluid[c].end(), std::size_t{0});
    return count;
}

std::size_t GridMasks::active_cell_count() const {
    return std::accumulate(cell_active.begin(), cell_active.end(), std::size_t{0});
}

double GridMasks::fluid_volume_fraction() const {
    return static_cast<double>(active_cell_count()) / static_cast<double>(grid.size());
}

std::string GridMasks::to_text(int component) const {
    const auto& mask = component < 0 ? cell_active : face_fluid.at(component);
    std::ostringstream out;
    out << grid.dim << ' ' << grid.n << ' ' << (component < 0 ? std::string("p") : std::to_string(component)) << '\n';
    for (std::size_t row = 0; row < grid.size() / grid.n; ++row) {
        for (int i = 0; i < grid.n; ++i) out << (mask[row * grid.n + i] ? 'F' : 'S');
        out << '\n';
    }
    return out.str();
}

GridMasks full_masks(const Grid& grid) {
    GridMasks m;
    m.grid = grid;
    const std::size_t size = grid.size();
    for (int c = 0; c < grid.dim; ++c) m.face_fluid[c].assign(size, 1);
    m.cell_active.assign(size, 1);
    m.scalar_fluid.assign(size, 1);
    if (grid.bc == Boundary::DirichletZero) {
        for (int c = 0; c < grid.dim; ++c) {
            for (std::size_t idx = 0; idx < size; ++idx) {
                if (grid.coords(idx)[c] == 0) m.face_fluid[c][idx] = 0;
            }
        }
    }
    return m;
}

int pressure_components(const GridMasks& masks) {
    const Grid& g = masks.grid;
    const std::size_t size = g.size();
    std::vector<int> label(size, -1);
    std::vector<std::size_t> stack;
    int components = 0;
    for (std::size_t seed = 0; seed < size; ++seed) {
        if (!masks.cell_active[seed] || label[seed] >= 0) continue;
        label[seed] = components;
        stack.push_back(seed);
        while (!stack.empty()) {
            const std::size_t idx = stack.back();
            stack.pop_back();
            const auto c = g.coords(idx);
            for (int a = 0; a < g.dim; ++a) {
                const std::size_t stride = g.stride(a);
                // Lower face of idx links to the cell below; lower face of the
                // cell above links upward. Wall faces are never fluid.
                const std::size_t below = c[a] == 0 ? idx + (g.n - 1) * stride : idx - stride;
                const std::size_t above = c[a] == g.n - 1 ? idx - (g.n - 1) * stride : idx + stride;
                if (masks.face_fluid[a][idx] && label[below] < 0 && masks.cell_active[below]) {
                    label[below] = components;
                    stack.push_back(below);
                }
                if (masks.face_fluid[a][above] && label[above] < 0 && masks.cell_active[above]) {
                    label[above] = components;
                    stack.push_back(above);
                }
            }
        }
        ++components;
    }
    return components;
}

}  // namespace perfstokes
