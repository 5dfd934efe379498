#include "perfstokes/discretization.hpp"

#include <algorithm>
#include <cmath>

#include "perfstokes/errors.hpp"

namespace perfstokes {

namespace kernels {

namespace {

// Visits every index with its coordinates, axis 0 fastest.
template <class F>
void for_each_index(const Grid& g, F&& f) {
    const int n = g.n;
    const int e1 = g.extent(1);
    const int e2 = g.extent(2);
    std::size_t idx = 0;
    for (int i2 = 0; i2 < e2; ++i2) {
        for (int i1 = 0; i1 < e1; ++i1) {
            for (int i0 = 0; i0 < n; ++i0, ++idx) f(idx, std::array<int, 3>{i0, i1, i2});
        }
    }
}

struct Neighbours {
    std::size_t lower;
    std::size_t upper;
};

inline Neighbours neighbours(const Grid& g, std::size_t idx, int coord, std::size_t stride) {
    const std::size_t wrap = static_cast<std::size_t>(g.n - 1) * stride;
    return {coord == 0 ? idx + wrap : idx - stride, coord == g.n - 1 ? idx - wrap : idx + stride};
}

}  // namespace

void neg_laplacian(const GridMasks& m, int component, std::span<const double> u, std::span<double> out) {
    const Grid& g = m.grid;
    const auto& fluid = m.face_fluid[component];
    const double inv_h2 = static_cast<double>(g.n) * g.n;
    const bool wall = g.bc == Boundary::DirichletZero;
    std::array<std::size_t, 3> strides{g.stride(0), g.stride(1), g.stride(2)};
    for_each_index(g, [&](std::size_t idx, const std::array<int, 3>& ic) {
        if (!fluid[idx]) {
            out[idx] = 0.0;
            return;
        }
        const double v = u[idx];
        double acc = 0.0;
        for (int a = 0; a < g.dim; ++a) {
            const auto nb = neighbours(g, idx, ic[a], strides[a]);
            if (wall && a != component) {
                acc += ic[a] == 0 ? 2.0 * v : v - u[nb.lower];
                acc += ic[a] == g.n - 1 ? 2.0 * v : v - u[nb.upper];
            } else {
                acc += 2.0 * v - u[nb.lower] - u[nb.upper];
            }
        }
        out[idx] = acc * inv_h2;
    });
}

void neg_laplacian_scalar(const GridMasks& m, std::span<const double> s, std::span<double> out) {
    const Grid& g = m.grid;
    const auto& fluid = m.scalar_fluid;
    const double inv_h2 = static_cast<double>(g.n) * g.n;
    const bool wall = g.bc == Boundary::DirichletZero;
    std::array<std::size_t, 3> strides{g.stride(0), g.stride(1), g.stride(2)};
    for_each_index(g, [&](std::size_t idx, const std::array<int, 3>& ic) {
        if (!fluid[idx]) {
            out[idx] = 0.0;
            return;
        }
        const double v = s[idx];
        double acc = 0.0;
        for (int a = 0; a < g.dim; ++a) {
            const auto nb = neighbours(g, idx, ic[a], strides[a]);
            if (wall) {
                acc += ic[a] == 0 ? 2.0 * v : v - s[nb.lower];
                acc += ic[a] == g.n - 1 ? 2.0 * v : v - s[nb.upper];
            } else {
                acc += 2.0 * v - s[nb.lower] - s[nb.upper];
            }
        }
        out[idx] = acc * inv_h2;
    });
}

void divergence(const GridMasks& m, std::span<const double> u, std::span<double> out) {
    const Grid& g = m.grid;
    const std::size_t block = g.size();
    const double inv_h = g.n;
    std::array<std::size_t, 3> strides{g.stride(0), g.stride(1), g.stride(2)};
    for_each_index(g, [&](std::size_t idx, const std::array<int, 3>& ic) {
        if (!m.cell_active[idx]) {
            out[idx] = 0.0;
            return;
        }
        double acc = 0.0;
        for (int c = 0; c < g.dim; ++c) {
            const double* uc = u.data() + c * block;
            const auto nb = neighbours(g, idx, ic[c], strides[c]);
            acc += uc[nb.upper] - uc[idx];
        }
        out[idx] = acc * inv_h;
    });
}

void gradient(const GridMasks& m, std::span<const double> p, std::span<double> out) {
    const Grid& g = m.grid;
    const std::size_t block = g.size();
    const double inv_h = g.n;
    std::array<std::size_t, 3> strides{g.stride(0), g.stride(1), g.stride(2)};
    for (int c = 0; c < g.dim; ++c) {
        const auto& fluid = m.face_fluid[c];
        double* oc = out.data() + c * block;
        for_each_index(g, [&](std::size_t idx, const std::array<int, 3>& ic) {
            if (!fluid[idx]) {
                oc[idx] = 0.0;
                return;
            }
            const auto nb = neighbours(g, idx, ic[c], strides[c]);
            oc[idx] = (p[idx] - p[nb.lower]) * inv_h;
        });
    }
}

double dirichlet_form(const GridMasks& m, std::span<const double> u, std::span<const double> v) {
    const Grid& g = m.grid;
    const std::size_t block = g.size();
    const bool wall = g.bc == Boundary::DirichletZero;
    std::array<std::size_t, 3> strides{g.stride(0), g.stride(1), g.stride(2)};
    double sum = 0.0;
    for (int c = 0; c < g.dim; ++c) {
        const double* uc = u.data() + c * block;
        const double* vc = v.data() + c * block;
        const auto& fluid = m.face_fluid[c];
        for_each_index(g, [&](std::size_t idx, const std::array<int, 3>& ic) {
            for (int a = 0; a < g.dim; ++a) {
                const auto nb = neighbours(g, idx, ic[a], strides[a]);
                if (wall && a != c) {
                    // Half edges to the walls, ghost value -u.
                    if (fluid[idx] && ic[a] == 0) sum += 2.0 * uc[idx] * vc[idx];
                    if (fluid[idx] && ic[a] == g.n - 1) sum += 2.0 * uc[idx] * vc[idx];
                    if (ic[a] == g.n - 1) continue;
                }
                if (!fluid[idx] && !fluid[nb.upper]) continue;
                sum += (uc[idx] - uc[nb.upper]) * (vc[idx] - vc[nb.upper]);
            }
        });
    }
    return sum;
}

void interpolate_faces(const GridMasks& m, int from, int to, std::span<const double> u, std::span<double> out) {
    const Grid& g = m.grid;
    const auto& fluid_to = m.face_fluid[to];
    const std::size_t sf = g.stride(from);
    const std::size_t st = g.stride(to);
    for_each_index(g, [&](std::size_t idx, const std::array<int, 3>& ic) {
        if (!fluid_to[idx]) {
            out[idx] = 0.0;
            return;
        }
        const auto along_to = neighbours(g, idx, ic[to], st);
        const auto here = neighbours(g, idx, ic[from], sf);
        const auto below = neighbours(g, along_to.lower, ic[from], sf);
        out[idx] = 0.25 * (u[idx] + u[here.upper] + u[along_to.lower] + u[below.upper]);
    });
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace kernels

PressureField divergence(const VelocityField& u) {
    auto p = PressureField::zeros(u.masks);
    kernels::divergence(*u.masks, u.data, p.data);
    return p;
}

VelocityField gradient(const PressureField& p) {
    auto u = VelocityField::zeros(p.masks);
    kernels::gradient(*p.masks, p.data, u.data);
    return u;
}

VelocityField laplacian(const VelocityField& u) {
    auto out = VelocityField::zeros(u.masks);
    for (int c = 0; c < u.dim(); ++c) {
        kernels::neg_laplacian(*u.masks, c, u.component(c), out.component(c));
        for (auto& v : out.component(c)) v = -v;
    }
    return out;
}

double inner(const VelocityField& u, const VelocityField& v) {
    require(u.masks->grid == v.masks->grid, ErrorCode::InvalidArgument, "fields live on different grids");
    return kernels::dot(u.data, v.data) * u.masks->grid.cell_volume();
}

double inner(const PressureField& p, const PressureField& q) {
    require(p.masks->grid == q.masks->grid, ErrorCode::InvalidArgument, "fields live on different grids");
    return kernels::dot(p.data, q.data) * p.masks->grid.cell_volume();
}

double energy_inner(const VelocityField& u, const VelocityField& v) {
    require(u.masks->grid == v.masks->grid, ErrorCode::InvalidArgument, "fields live on different grids");
    const Grid& g = u.masks->grid;
    return kernels::dirichlet_form(*u.masks, u.data, v.data) * g.cell_volume() * g.n * g.n;
}

Norms norms(const VelocityField& u) {
    Norms r;
    double sum = 0.0;
    for (int c = 0; c < u.dim(); ++c) {
        const auto comp = u.component(c);
        const auto& fluid = u.masks->face_fluid[c];
        for (std::size_t i = 0; i < comp.size(); ++i) {
            if (!fluid[i]) continue;
            sum += comp[i] * comp[i];
            r.linf = std::max(r.linf, std::abs(comp[i]));
        }
    }
    r.l2 = std::sqrt(sum * u.masks->grid.cell_volume());
    r.h1semi = std::sqrt(std::max(0.0, energy_inner(u, u)));
    return r;
}

Norms norms(const PressureField& p) {
    Norms r;
    double sum = 0.0;
    for (std::size_t i = 0; i < p.data.size(); ++i) {
        if (!p.masks->cell_active[i]) continue;
        sum += p.data[i] * p.data[i];
        r.linf = std::max(r.linf, std::abs(p.data[i]));
    }
    r.l2 = std::sqrt(sum * p.masks->grid.cell_volume());
    const auto g = gradient(p);
    r.h1semi = std::sqrt(inner(g, g));
    return r;
}

std::array<double, 3> integral(const VelocityField& u) {
    std::array<double, 3> out{0.0, 0.0, 0.0};
    for (int c = 0; c < u.dim(); ++c) {
        double s = 0.0;
        for (double v : u.component(c)) s += v;
        out[c] = s * u.masks->grid.cell_volume();
    }
    return out;
}

}  // namespace perfstokes
