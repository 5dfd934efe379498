#include "perfstokes/regimes.hpp"

#include <charconv>
#include <cmath>

#include "perfstokes/errors.hpp"
#include "perfstokes/format.hpp"

namespace perfstokes::regimes {

namespace {

void check_dim(int dim) {
    require(dim >= 2, ErrorCode::InvalidArgument, "dimension must be at least 2, got " + std::to_string(dim));
}

double parse_number(const std::string& text) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        fail(ErrorCode::ConfigError, "not a number: '" + text + "'");
    }
    return value;
}

}  // namespace

double c_eta(int dim, double eta) {
    check_dim(dim);
    if (dim == 2) return 1.0 / std::sqrt(std::abs(std::log(eta)));
    if (dim == 3) return std::sqrt(eta);
    return std::pow(eta, 0.5 * (dim - 2));
}

double sigma(int dim, double epsilon, double a_eps) {
    check_dim(dim);
    if (dim == 2) return epsilon * std::sqrt(std::abs(std::log(a_eps / epsilon)));
    // (eps^d / a^{d-2})^{1/2} written as eps * (eps/a)^{(d-2)/2} to avoid underflow.
    if (dim == 3) return epsilon * std::sqrt(epsilon / a_eps);
    return epsilon * std::pow(epsilon / a_eps, 0.5 * (dim - 2));
}

RegimeParams derive_params(int dim, double epsilon, double a_eps) {
    check_dim(dim);
    if (a_eps == epsilon && epsilon > 0.0) {
        fail(ErrorCode::DegenerateEta, "a_eps equals epsilon, eta = 1");
    }
    if (!(0.0 < a_eps && a_eps < epsilon && epsilon <= 1.0)) {
        fail(ErrorCode::OrderingViolation, "require 0 < a_eps < epsilon <= 1, got a_eps=" + format_real(a_eps) +
                                               " epsilon=" + format_real(epsilon));
    }
    RegimeParams p;
    p.dim = dim;
    p.epsilon = epsilon;
    p.a_eps = a_eps;
    p.eta = a_eps / epsilon;
    p.c_eta = c_eta(dim, p.eta);
    p.sigma = sigma(dim, epsilon, a_eps);
    return p;
}

double ScalingFamily::hole_size(double epsilon) const {
    if (const auto* pl = std::get_if<PowerLaw>(&kind)) {
        return pl->coefficient * std::pow(epsilon, pl->exponent);
    }
    const auto& lc = std::get<LogCritical>(kind);
    return epsilon * std::exp(-(lc.sigma_star * lc.sigma_star) / (epsilon * epsilon));
}

Regime classify(const ScalingFamily& family) {
    check_dim(family.dim);
    if (const auto* lc = std::get_if<LogCritical>(&family.kind)) {
        if (family.dim != 2) {
            fail(ErrorCode::UnsupportedFamily, "logcritical scaling exists only for d = 2");
        }
        require(lc->sigma_star > 0.0 && std::isfinite(lc->sigma_star), ErrorCode::UnsupportedFamily,
                "sigma_star must be positive and finite");
        return Critical{lc->sigma_star};
    }
    const auto& pl = std::get<PowerLaw>(family.kind);
    require(pl.coefficient > 0.0 && std::isfinite(pl.coefficient), ErrorCode::UnsupportedFamily,
            "power-law coefficient must be positive");
    require(pl.exponent >= 1.0 && std::isfinite(pl.exponent), ErrorCode::UnsupportedFamily,
            "power-law exponent must be >= 1");
    // Whether a_eps T fits in its cell is checked when a geometry is built
    // (DegenerateEta, InclusionViolation); the limit regime does not depend on it.
    if (family.dim == 2) return LargeHoles{};

    // gamma versus the critical exponent d/(d-2), compared as gamma*(d-2) vs d.
    const double lhs = pl.exponent * (family.dim - 2);
    const double rhs = family.dim;
    if (lhs < rhs) return LargeHoles{};
    if (lhs > rhs) return SmallHoles{};
    return Critical{std::pow(pl.coefficient, -0.5 * (family.dim - 2))};
}

std::string regime_name(const Regime& regime) {
    if (std::holds_alternative<SmallHoles>(regime)) return "small";
    if (std::holds_alternative<LargeHoles>(regime)) return "large";
    return "critical";
}

std::string describe(const Regime& regime) {
    if (const auto* c = std::get_if<Critical>(&regime)) {
        return "critical sigma_star=" + format_shortest(c->sigma_star);
    }
    return regime_name(regime);
}

ScalingFamily parse_family(const std::string& text, int dim) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) fail(ErrorCode::ConfigError, "family must look like kind:args, got '" + text + "'");
    const std::string kind = text.substr(0, colon);
    const std::string args = text.substr(colon + 1);
    ScalingFamily family;
    family.dim = dim;
    if (kind == "powerlaw") {
        const auto comma = args.find(',');
        if (comma == std::string::npos) fail(ErrorCode::ConfigError, "powerlaw needs C,gamma");
        family.kind = PowerLaw{parse_number(args.substr(0, comma)), parse_number(args.substr(comma + 1))};
    } else if (kind == "logcritical") {
        family.kind = LogCritical{parse_number(args)};
    } else {
        fail(ErrorCode::ConfigError, "unknown family kind '" + kind + "'");
    }
    return family;
}

}  // namespace perfstokes::regimes
