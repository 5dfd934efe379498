#include "perfstokes/homogenized.hpp"

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <numbers>

#include "perfstokes/discretization.hpp"
#include "perfstokes/format.hpp"
#include "perfstokes/spectral.hpp"

namespace perfstokes::homogenized {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double elapsed(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

System parse_system(const std::string& text) {
    if (text == "stokes") return System::Stokes;
    if (text == "darcy") return System::Darcy;
    if (text == "brinkman") return System::Brinkman;
    fail(ErrorCode::ConfigError, "unknown system '" + text + "' (stokes, darcy, brinkman)");
}

std::string system_name(System s) {
    switch (s) {
        case System::Stokes: return "stokes";
        case System::Darcy: return "darcy";
        case System::Brinkman: return "brinkman";
    }
    return "?";
}

Forcing Forcing::constant(std::array<double, 3> v) {
    Forcing f;
    f.kind = Kind::Constant;
    f.value = v;
    return f;
}

Forcing Forcing::sinshear() { return Forcing{}; }

Forcing Forcing::gradient() {
    Forcing f;
    f.kind = Kind::Gradient;
    return f;
}

Forcing Forcing::from_field(VelocityField field) {
    Forcing f;
    f.kind = Kind::Field;
    f.field = std::move(field);
    return f;
}

Forcing Forcing::parse(const std::string& text) {
    if (text == "sinshear") return sinshear();
    if (text == "gradient") return gradient();
    if (text.rfind("constant:", 0) == 0) {
        const auto v = parse_real_list(text.substr(9));
        require(!v.empty() && v.size() <= 3, ErrorCode::ConfigError, "constant forcing needs 1 to 3 components");
        std::array<double, 3> a{0.0, 0.0, 0.0};
        std::copy(v.begin(), v.end(), a.begin());
        return constant(a);
    }
    fail(ErrorCode::ConfigError, "unknown forcing '" + text + "' (constant:a,b[,c], sinshear, gradient)");
}

std::string Forcing::describe() const {
    switch (kind) {
        case Kind::Constant: {
            std::string s = "constant:" + format_shortest(value[0]) + "," + format_shortest(value[1]);
            if (value[2] != 0.0) s += "," + format_shortest(value[2]);
            return s;
        }
        case Kind::SinShear: return "sinshear";
        case Kind::Gradient: return "gradient";
        case Kind::Field: return "field";
    }
    return "?";
}

double gradient_potential(std::span<const double> x, int) {
    return std::sin(kTwoPi * x[0]) * std::sin(kTwoPi * x[1]);
}

PressureField sample_potential(const MasksPtr& masks) {
    const Grid& g = masks->grid;
    auto p = PressureField::zeros(masks);
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
        if (!masks->cell_active[idx]) continue;
        const auto c = g.coords(idx);
        std::array<double, 3> x{};
        for (int a = 0; a < g.dim; ++a) x[a] = (c[a] + 0.5) * g.h();
        p.data[idx] = gradient_potential(x, g.dim);
    }
    p.remove_mean();
    return p;
}

VelocityField sample(const Forcing& f, const MasksPtr& masks) {
    const Grid& g = masks->grid;
    switch (f.kind) {
        case Forcing::Kind::Gradient: return gradient(sample_potential(masks));
        case Forcing::Kind::Field: {
            require(f.field && f.field->masks->grid == g, ErrorCode::InvalidArgument, "forcing field lives on another grid");
            auto u = VelocityField::zeros(masks);
            u.data = f.field->data;
            u.apply_mask();
            return u;
        }
        default: break;
    }
    auto u = VelocityField::zeros(masks);
    for (int c = 0; c < g.dim; ++c) {
        auto comp = u.component(c);
        const auto& fluid = masks->face_fluid[c];
        for (std::size_t idx = 0; idx < g.size(); ++idx) {
            if (!fluid[idx]) continue;
            if (f.kind == Forcing::Kind::Constant) {
                comp[idx] = f.value[c];
            } else if (c == 0) {
                const double x2 = (g.coords(idx)[1] + 0.5) * g.h();
                comp[idx] = std::sin(kTwoPi * x2);
            }
        }
    }
    return u;
}

MasksPtr box_masks(int dim, int n) {
    return std::make_shared<const GridMasks>(full_masks(Grid{dim, n, Boundary::DirichletZero}));
}

Matrix3 scalar_matrix(double s, int dim) {
    Matrix3 m{};
    for (int i = 0; i < dim; ++i) m[i][i] = s;
    return m;
}

Matrix3 inverse_spd(const Matrix3& a, int dim) {
    Eigen::MatrixXd m(dim, dim);
    for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) m(i, j) = a[i][j];
    }
    const double scale = m.cwiseAbs().maxCoeff();
    require(scale > 0.0 && (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale, ErrorCode::NotSPD,
            "permeability matrix is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    require(es.eigenvalues().minCoeff() > 0.0, ErrorCode::NotSPD, "permeability matrix is not positive definite");
    const Eigen::MatrixXd inv = es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() *
                                es.eigenvectors().transpose();
    Matrix3 out{};
    for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) out[i][j] = 0.5 * (inv(i, j) + inv(j, i));
    }
    return out;
}

void apply_matrix(const GridMasks& m, const Matrix3& k, std::span<const double> v, std::span<double> out) {
    const std::size_t block = m.grid.size();
    std::vector<double> scratch(block);
    for (int c = 0; c < m.grid.dim; ++c) {
        auto oc = out.subspan(c * block, block);
        const auto vc = v.subspan(c * block, block);
        const auto& fluid = m.face_fluid[c];
        for (std::size_t i = 0; i < block; ++i) oc[i] = fluid[i] ? k[c][c] * vc[i] : 0.0;
        for (int j = 0; j < m.grid.dim; ++j) {
            if (j == c || k[c][j] == 0.0) continue;
            kernels::interpolate_faces(m, j, c, v.subspan(j * block, block), scratch);
            for (std::size_t i = 0; i < block; ++i) oc[i] += k[c][j] * scratch[i];
        }
    }
}

namespace {

LimitSolution saddle_limit(const Forcing& f, std::optional<Matrix3> friction, int dim, int n, double tol) {
    const auto masks = box_masks(dim, n);
    solver::SaddleSpec spec;
    spec.masks = masks;
    spec.rhs = sample(f, masks);
    spec.tol = tol;
    spec.friction = friction;
    if (friction) {
        double mean = 0.0;
        for (int c = 0; c < dim; ++c) mean += (*friction)[c][c] / dim;
        spec.schur_gamma = mean;
    }
    auto r = solver::solve_saddle(spec);
    LimitSolution out;
    out.report = r.report;
    out.energy = energy_inner(r.u, r.u);
    if (friction) {
        std::vector<double> ku(r.u.data.size());
        apply_matrix(*masks, *friction, r.u.data, ku);
        out.energy += kernels::dot(ku, r.u.data) * masks->grid.cell_volume();
    }
    out.work = inner(spec.rhs, r.u);
    out.u = std::move(r.u);
    out.p = std::move(r.p);
    out.p.remove_mean();
    return out;
}

}  // namespace

LimitSolution solve_stokes(const Forcing& f, int dim, int n, double tol) {
    return saddle_limit(f, std::nullopt, dim, n, tol);
}

LimitSolution solve_brinkman(const Forcing& f, const Matrix3& a, double sigma_star, int dim, int n, double tol) {
    require(sigma_star > 0.0, ErrorCode::InvalidArgument, "sigma_star must be positive");
    auto k = inverse_spd(a, dim);
    for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) k[i][j] /= sigma_star * sigma_star;
    }
    return saddle_limit(f, k, dim, n, tol);
}

LimitSolution solve_darcy(const Forcing& f, const Matrix3& a, int dim, int n, double tol) {
    const auto start = std::chrono::steady_clock::now();
    inverse_spd(a, dim);
    require(tol > 0.0 && tol <= 1e-2, ErrorCode::InvalidArgument, "tolerance must lie in (0, 1e-2]");
    const auto masks = box_masks(dim, n);
    const GridMasks& m = *masks;
    const std::size_t block = m.grid.size();
    const auto fs = sample(f, masks);

    std::vector<double> kf(fs.data.size()), gp(fs.data.size()), kgp(fs.data.size());
    apply_matrix(m, a, fs.data, kf);
    std::vector<double> b(block);
    kernels::divergence(m, kf, b);
    for (auto& v : b) v = -v;

    // S p = -D K G p, preconditioned by the Neumann Laplacian scaled by the
    // mean diagonal of A.
    double mean_a = 0.0;
    for (int c = 0; c < dim; ++c) mean_a += a[c][c] / dim;
    spectral::LaplaceInverse inv(dim, n, spectral::pressure_axes(m.grid));
    auto op = [&](std::span<const double> p, std::span<double> out) {
        kernels::gradient(m, p, gp);
        apply_matrix(m, a, gp, kgp);
        kernels::divergence(m, kgp, out);
        for (auto& v : out) v = -v;
    };
    auto precond = [&](std::span<const double> r, std::span<double> z) {
        inv.apply(r, z);
        for (auto& v : z) v /= mean_a;
    };
    auto project = [&](std::span<double> v) {
        double s = 0.0;
        for (double x : v) s += x;
        const double mean = s / static_cast<double>(v.size());
        for (auto& x : v) x -= mean;
    };

    auto p = PressureField::zeros(masks);
    auto res = solver::pcg(op, precond, b, p.data, tol, 20000, project);
    if (!res.converged) {
        throw NoConvergenceError("Darcy pressure solve stalled", SolveReport{res.iterations, res.residual, elapsed(start)});
    }
    p.remove_mean();

    LimitSolution out;
    out.u = VelocityField::zeros(masks);
    kernels::gradient(m, p.data, gp);
    for (std::size_t i = 0; i < gp.size(); ++i) gp[i] = fs.data[i] - gp[i];
    apply_matrix(m, a, gp, out.u.data);
    std::vector<double> div(block);
    kernels::divergence(m, out.u.data, div);
    const double bnorm = std::sqrt(kernels::dot(b, b));
    const double dnorm = std::sqrt(kernels::dot(div, div));
    out.divergence = bnorm > 0.0 ? dnorm / bnorm : dnorm;
    out.p = std::move(p);
    out.report = SolveReport{res.iterations, res.residual, elapsed(start)};
    out.work = inner(fs, out.u);
    return out;
}

}  // namespace perfstokes::homogenized
