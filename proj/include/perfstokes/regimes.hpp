#pragma once

#include <string>
#include <variant>

namespace perfstokes::regimes {

/// Perforation scalings for one (d, epsilon, a_eps) triple.
///
/// eta is the hole-to-spacing ratio, c_eta the cell-problem normalization and
/// sigma the regime ratio. sigma * c_eta == epsilon up to round-off.
struct RegimeParams {
    int dim = 2;
    double epsilon = 0.0;
    double a_eps = 0.0;
    double eta = 0.0;
    double c_eta = 0.0;
    double sigma = 0.0;
};

/// a_eps = coefficient * epsilon^exponent.
struct PowerLaw {
    double coefficient = 1.0;
    double exponent = 1.0;
};

/// a_eps = epsilon * exp(-sigma_star^2 / epsilon^2); two dimensions only.
struct LogCritical {
    double sigma_star = 1.0;
};

struct ScalingFamily {
    std::variant<PowerLaw, LogCritical> kind;
    int dim = 2;

    /// Hole size a_eps at spacing epsilon.
    double hole_size(double epsilon) const;
};

struct SmallHoles {};
struct LargeHoles {};
struct Critical {
    double sigma_star = 0.0;
};

using Regime = std::variant<SmallHoles, Critical, LargeHoles>;

/// c_eta = |log eta|^{-1/2} for d = 2, eta^{(d-2)/2} for d >= 3.
double c_eta(int dim, double eta);

/// sigma = eps |log(a/eps)|^{1/2} for d = 2, (eps^d / a^{d-2})^{1/2} for d >= 3.
double sigma(int dim, double epsilon, double a_eps);

RegimeParams derive_params(int dim, double epsilon, double a_eps);

/// Regime of lim sigma_eps for a scaling family.
Regime classify(const ScalingFamily& family);

std::string regime_name(const Regime& regime);

/// "large", "small" or "critical sigma_star=<value>".
std::string describe(const Regime& regime);

/// Parses "powerlaw:C,gamma" or "logcritical:sigma".
ScalingFamily parse_family(const std::string& text, int dim);

}  // namespace perfstokes::regimes
