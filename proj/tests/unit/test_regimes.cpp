#include <doctest.h>

#include <cmath>
#include <random>

#include "perfstokes/errors.hpp"
#include "perfstokes/regimes.hpp"

using namespace perfstokes;
using namespace perfstokes::regimes;

namespace {

template <class F>
ErrorCode code_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error raised");
    return ErrorCode::InvalidArgument;
}

double ulp_distance(double a, double b) {
    return std::abs(a - b) / (std::nextafter(std::abs(b), INFINITY) - std::abs(b));
}

}  // namespace

TEST_CASE("derive_params in three dimensions") {
    const auto p = derive_params(3, 0.5, 0.125);
    CHECK(p.eta == 0.25);
    CHECK(p.c_eta == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(p.sigma == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("derive_params in two dimensions") {
    const auto p = derive_params(2, 0.1, 0.01);
    CHECK(p.eta == doctest::Approx(0.1).epsilon(1e-15));
    // 1/sqrt(ln 10) = 0.659010...
    CHECK(p.c_eta == doctest::Approx(0.65901).epsilon(1e-5));
    CHECK(p.sigma == doctest::Approx(0.15174).epsilon(1e-4));
}

TEST_CASE("derive_params rejects degenerate and misordered input") {
    CHECK(code_of([] { derive_params(2, 0.5, 0.5); }) == ErrorCode::DegenerateEta);
    CHECK(code_of([] { derive_params(2, 0.5, 0.7); }) == ErrorCode::OrderingViolation);
    CHECK(code_of([] { derive_params(2, 1.5, 0.1); }) == ErrorCode::OrderingViolation);
    CHECK(code_of([] { derive_params(2, 0.5, 0.0); }) == ErrorCode::OrderingViolation);
}

TEST_CASE("classify examples") {
    CHECK(describe(classify(parse_family("powerlaw:1,3", 3))) == "critical sigma_star=1");
    CHECK(regime_name(classify(parse_family("powerlaw:1,1", 3))) == "large");
    CHECK(describe(classify(parse_family("logcritical:2", 2))) == "critical sigma_star=2");
    CHECK(regime_name(classify(parse_family("powerlaw:0.2,1", 2))) == "large");
    CHECK(regime_name(classify(parse_family("powerlaw:1,4", 3))) == "small");
    CHECK(regime_name(classify(parse_family("powerlaw:1,2", 4))) == "critical");
    CHECK(code_of([] { classify(parse_family("logcritical:1", 3)); }) == ErrorCode::UnsupportedFamily);
    CHECK(code_of([] { classify(parse_family("powerlaw:1,0.5", 3)); }) == ErrorCode::UnsupportedFamily);
}

TEST_CASE("critical sigma_star follows the coefficient") {
    const auto r = classify(ScalingFamily{PowerLaw{0.25, 3.0}, 3});
    REQUIRE(std::holds_alternative<Critical>(r));
    CHECK(std::get<Critical>(r).sigma_star == doctest::Approx(2.0));
}

TEST_CASE("sigma c_eta equals epsilon within 4 ulp") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int t = 0; t < 2000; ++t) {
        const int d = 2 + static_cast<int>(unit(rng) * 3.0);
        const double eps = 1e-3 + unit(rng) * (1.0 - 1e-3);
        const double a = eps * (1e-6 + unit(rng) * (1.0 - 2e-6));
        const auto p = derive_params(d, eps, a);
        CHECK(ulp_distance(p.sigma * p.c_eta, eps) <= 4.0);
    }
}

TEST_CASE("sigma trend matches the regime") {
    const char* families[] = {"powerlaw:1,1.5", "powerlaw:0.5,3", "powerlaw:1,4", "powerlaw:0.3,1"};
    for (const char* text : families) {
        const auto fam = parse_family(text, 3);
        const auto regime = classify(fam);
        double s[3];
        const double eps[3] = {1e-2, 1e-3, 1e-4};
        for (int i = 0; i < 3; ++i) s[i] = sigma(3, eps[i], fam.hole_size(eps[i]));
        CAPTURE(text);
        if (std::holds_alternative<LargeHoles>(regime)) {
            CHECK(s[0] > s[1]);
            CHECK(s[1] > s[2]);
        } else if (std::holds_alternative<SmallHoles>(regime)) {
            CHECK(s[0] < s[1]);
            CHECK(s[1] < s[2]);
        } else {
            const double star = std::get<Critical>(regime).sigma_star;
            for (double v : s) CHECK(v == doctest::Approx(star).epsilon(1e-12));
        }
    }
    const auto fam2 = parse_family("powerlaw:0.2,2", 2);
    CHECK(sigma(2, 1e-2, fam2.hole_size(1e-2)) > sigma(2, 1e-3, fam2.hole_size(1e-3)));
    CHECK(sigma(2, 1e-3, fam2.hole_size(1e-3)) > sigma(2, 1e-4, fam2.hole_size(1e-4)));
}

TEST_CASE("logcritical keeps sigma at sigma_star") {
    const auto fam = parse_family("logcritical:0.5", 2);
    for (double eps : {0.5, 0.25, 0.2}) {
        CHECK(sigma(2, eps, fam.hole_size(eps)) == doctest::Approx(0.5).epsilon(1e-12));
    }
}

TEST_CASE("c_eta strictly increasing on (0,1)") {
    for (int d = 2; d <= 4; ++d) {
        double prev = 0.0;
        for (int i = 1; i < 1000; ++i) {
            const double v = c_eta(d, i / 1000.0);
            CHECK(v > prev);
            // In 2D c_eta passes 1 at eta = 1/e.
            if (d >= 3) CHECK(v < 1.0);
            prev = v;
        }
    }
}
