#include "perfstokes/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

#include "perfstokes/discretization.hpp"
#include "perfstokes/errors.hpp"

namespace perfstokes::spectral {

namespace {

// FFTW planning is not thread-safe.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

fftw_r2r_kind forward_kind(AxisKind k) {
    switch (k) {
        case AxisKind::Periodic: return FFTW_R2HC;
        case AxisKind::DirichletFace: return FFTW_RODFT00;
        case AxisKind::DirichletCell: return FFTW_RODFT10;
        case AxisKind::NeumannCell: return FFTW_REDFT10;
    }
    return FFTW_R2HC;
}

fftw_r2r_kind backward_kind(AxisKind k) {
    switch (k) {
        case AxisKind::Periodic: return FFTW_HC2R;
        case AxisKind::DirichletFace: return FFTW_RODFT00;
        case AxisKind::DirichletCell: return FFTW_RODFT01;
        case AxisKind::NeumannCell: return FFTW_REDFT01;
    }
    return FFTW_HC2R;
}

double eigenvalue(AxisKind kind, int n, int k) {
    const double pi = std::numbers::pi;
    const double scale = 4.0 * n * n;
    double s = 0.0;
    switch (kind) {
        case AxisKind::Periodic: s = std::sin(pi * k / n); break;
        case AxisKind::DirichletFace:
        case AxisKind::DirichletCell: s = std::sin(pi * (k + 1) / (2.0 * n)); break;
        case AxisKind::NeumannCell: s = std::sin(pi * k / (2.0 * n)); break;
    }
    return scale * s * s;
}

}  // namespace

struct LaplaceInverse::Plans {
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;
    ~Plans() {
        std::lock_guard lock(planner_mutex());
        if (forward) fftw_destroy_plan(forward);
        if (backward) fftw_destroy_plan(backward);
    }
};

LaplaceInverse::LaplaceInverse(int dim, int n, std::array<AxisKind, 3> axes, double shift, double zero_mode_value)
    : dim_(dim), n_(n), axes_(axes) {
    require(dim >= 2 && dim <= 3 && n >= 2, ErrorCode::InvalidArgument, "spectral grid must be 2D or 3D with n >= 2");
    std::size_t total = 1;
    double norm = 1.0;
    for (int a = 0; a < dim; ++a) {
        len_[a] = axes[a] == AxisKind::DirichletFace ? n - 1 : n;
        total *= static_cast<std::size_t>(len_[a]);
        norm *= axes[a] == AxisKind::Periodic ? n : 2.0 * n;
    }
    work_.assign(total, 0.0);
    inverse_symbol_.assign(total, 0.0);

    std::array<std::vector<double>, 3> eig;
    for (int a = 0; a < dim; ++a) {
        eig[a].resize(len_[a]);
        for (int k = 0; k < len_[a]; ++k) eig[a][k] = eigenvalue(axes[a], n, k);
    }
    std::size_t idx = 0;
    for (int k2 = 0; k2 < (dim > 2 ? len_[2] : 1); ++k2) {
        for (int k1 = 0; k1 < len_[1]; ++k1) {
            for (int k0 = 0; k0 < len_[0]; ++k0, ++idx) {
                double lambda = eig[0][k0] + eig[1][k1] + (dim > 2 ? eig[2][k2] : 0.0) + shift;
                if (idx == 0 && lambda == 0.0) {
                    has_zero_mode_ = true;
                    inverse_symbol_[idx] = zero_mode_value / norm;
                } else {
                    inverse_symbol_[idx] = 1.0 / (lambda * norm);
                }
            }
        }
    }

    int dims[3];
    fftw_r2r_kind fk[3];
    fftw_r2r_kind bk[3];
    for (int a = 0; a < dim; ++a) {
        dims[dim - 1 - a] = len_[a];
        fk[dim - 1 - a] = forward_kind(axes[a]);
        bk[dim - 1 - a] = backward_kind(axes[a]);
    }
    plans_ = std::make_unique<Plans>();
    std::lock_guard lock(planner_mutex());
    plans_->forward = fftw_plan_r2r(dim, dims, work_.data(), work_.data(), fk, FFTW_ESTIMATE);
    plans_->backward = fftw_plan_r2r(dim, dims, work_.data(), work_.data(), bk, FFTW_ESTIMATE);
    require(plans_->forward && plans_->backward, ErrorCode::InvalidArgument, "FFTW planning failed");
}

LaplaceInverse::~LaplaceInverse() = default;

void LaplaceInverse::apply(std::span<const double> in, std::span<double> out) const {
    const int n = n_;
    const int e1 = dim_ > 1 ? n : 1;
    const int e2 = dim_ > 2 ? n : 1;
    const int o0 = axes_[0] == AxisKind::DirichletFace ? 1 : 0;
    const int o1 = axes_[1] == AxisKind::DirichletFace ? 1 : 0;
    const int o2 = dim_ > 2 && axes_[2] == AxisKind::DirichletFace ? 1 : 0;

    std::size_t w = 0;
    for (int i2 = o2; i2 < e2; ++i2) {
        for (int i1 = o1; i1 < e1; ++i1) {
            const std::size_t row = static_cast<std::size_t>(n) * (i1 + static_cast<std::size_t>(e1) * i2);
            for (int i0 = o0; i0 < n; ++i0) work_[w++] = in[row + i0];
        }
    }
    fftw_execute(plans_->forward);
    for (std::size_t i = 0; i < work_.size(); ++i) work_[i] *= inverse_symbol_[i];
    fftw_execute(plans_->backward);

    if (o0 || o1 || o2) std::fill(out.begin(), out.end(), 0.0);
    w = 0;
    for (int i2 = o2; i2 < e2; ++i2) {
        for (int i1 = o1; i1 < e1; ++i1) {
            const std::size_t row = static_cast<std::size_t>(n) * (i1 + static_cast<std::size_t>(e1) * i2);
            for (int i0 = o0; i0 < n; ++i0) out[row + i0] = work_[w++];
        }
    }
}

std::array<AxisKind, 3> velocity_axes(const Grid& grid, int component) {
    std::array<AxisKind, 3> axes{AxisKind::Periodic, AxisKind::Periodic, AxisKind::Periodic};
    if (grid.bc == Boundary::DirichletZero) {
        for (int a = 0; a < 3; ++a) axes[a] = a == component ? AxisKind::DirichletFace : AxisKind::DirichletCell;
    }
    return axes;
}

std::array<AxisKind, 3> pressure_axes(const Grid& grid) {
    const AxisKind k = grid.bc == Boundary::DirichletZero ? AxisKind::NeumannCell : AxisKind::Periodic;
    return {k, k, k};
}

std::array<AxisKind, 3> scalar_axes(const Grid& grid) {
    const AxisKind k = grid.bc == Boundary::DirichletZero ? AxisKind::DirichletCell : AxisKind::Periodic;
    return {k, k, k};
}

InverseDivergence inverse_divergence(const PressureField& f) {
    const Grid& g = f.masks->grid;
    require(g.bc == Boundary::Periodic && !f.masks->has_hole(), ErrorCode::InvalidArgument,
            "inverse divergence needs the hole-free periodic grid");
    const double norm_f = std::sqrt(inner(f, f));
    double sum = 0.0;
    for (double v : f.data) sum += v;
    const double mean = sum / static_cast<double>(f.data.size());
    require(std::abs(mean) <= 1e-10 * norm_f || norm_f == 0.0, ErrorCode::NonZeroMean,
            "forcing must have zero mean");

    LaplaceInverse inv(g.dim, g.n, pressure_axes(g));
    auto psi = PressureField::zeros(f.masks);
    inv.apply(f.data, psi.data);
    for (auto& v : psi.data) v = -v;

    InverseDivergence r{gradient(psi), 0.0};
    if (norm_f > 0.0) {
        const auto nrm = norms(r.u);
        r.h1_constant = std::sqrt(nrm.l2 * nrm.l2 + nrm.h1semi * nrm.h1semi) / norm_f;
    }
    return r;
}

}  // namespace perfstokes::spectral
