#include <catch2/catch_amalgamated.hpp>

#include <relent/conic.hpp>
#include <relent/divergence.hpp>
#include <relent/predictors.hpp>
#include <relent/simplex.hpp>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

using namespace relent;

namespace {

Distribution random_simplex_point(std::mt19937_64& rng, std::size_t d) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> w(d);
    double total = 0.0;
    for (double& x : w) {
        x = -std::log1p(-unit(rng));
        total += x;
    }
    for (double& x : w) x /= total;
    return Distribution(Distribution::exact_t{}, std::move(w));
}

Distribution random_type_point(std::mt19937_64& rng, std::size_t d, std::int64_t T) {
    std::uniform_int_distribution<std::size_t> pick(0, d - 1);
    std::vector<std::int64_t> counts(d, 0);
    for (std::int64_t k = 0; k < T; ++k) ++counts[pick(rng)];
    std::vector<double> w(d);
    for (std::size_t i = 0; i < d; ++i)
        w[i] = static_cast<double>(counts[i]) / static_cast<double>(T);
    return Distribution(Distribution::exact_t{}, std::move(w));
}

}  // namespace

TEST_CASE("shortest round-trip formatting survives a parse") {
    std::mt19937_64 rng(211);
    std::uniform_real_distribution<double> mant(-1.0, 1.0);
    std::uniform_int_distribution<int> expo(-300, 300);
    for (int n = 0; n < 2000; ++n) {
        const double x = std::ldexp(mant(rng), expo(rng));
        CHECK(parse_double(format_double(x)) == x);
    }
    CHECK(parse_double(format_double(0.0)) == 0.0);
    CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
    CHECK(format_double(std::nan("")) == "nan");
    CHECK(std::isinf(parse_double("-inf")));
    CHECK(std::isnan(parse_double("nan")));
    CHECK_THROWS_AS(parse_double("1.5x"), InputError);
    CHECK_THROWS_AS(parse_double(""), InputError);
    CHECK_THROWS_AS(parse_double("12,5"), InputError);
}

TEST_CASE("exponential cone membership branches") {
    // Interior of the curved branch: z log(y/z) >= x.
    CHECK(exp_cone_member({0.0, 1.0, 1.0}));
    CHECK(exp_cone_member({-1.0, 1.0, 1.0}));
    CHECK(exp_cone_member({1.0, 10.0, 1.0}));          // log 10 > 1
    CHECK_FALSE(exp_cone_member({1.0, 2.0, 1.0}));     // log 2 < 1
    CHECK(exp_cone_member({0.5, std::exp(0.5), 1.0})); // boundary point
    // Closure ray z = 0: needs x <= 0 and y >= 0.
    CHECK(exp_cone_member({-1.0, 2.0, 0.0}));
    CHECK(exp_cone_member({0.0, 0.0, 0.0}));
    CHECK_FALSE(exp_cone_member({1.0, 2.0, 0.0}));
    CHECK_FALSE(exp_cone_member({-1.0, -2.0, 0.0}));
    // Negative z is never a member.
    CHECK_FALSE(exp_cone_member({-5.0, 5.0, -1e-6}));
    // Tolerance admits slightly out-of-branch points.
    CHECK(exp_cone_member({1e-10, 2.0, 0.0}, 1e-9));
}

TEST_CASE("exponential-cone problem serialization round trip") {
    const CostVector g{0.1, 0.6, 0.3};
    const Distribution p({0.5, 0.25, 0.25});
    const ConicProblem built = build_exp_cone_problem(g, p, Rate(0.07));
    CHECK(built.form == ConicProblem::Form::ExponentialCone);
    CHECK(built.d == 3);
    CHECK_FALSE(built.T.has_value());
    const ConicProblem reparsed = parse_problem(serialize_problem(built));
    CHECK(reparsed == built);
}

TEST_CASE("geometric-mean problem records the center's sample size") {
    const Distribution center = empirical_distribution({1, 1, 2, 3}, 3);
    const ConicProblem built = build_socp_problem({0.0, 1.0, 0.5}, center, Rate(0.1), 4);
    CHECK(built.form == ConicProblem::Form::GeometricMeanSocp);
    REQUIRE(built.T.has_value());
    CHECK(*built.T == 4);
    REQUIRE(built.center_entropy.has_value());
    CHECK(*built.center_entropy == Catch::Approx(entropy(center)).margin(1e-15));
    const ConicProblem reparsed = parse_problem(serialize_problem(built));
    CHECK(reparsed == built);
    // A center that is not a type of the claimed sample size is refused.
    CHECK_THROWS_AS(build_socp_problem({0.0, 1.0, 0.5}, center, Rate(0.1), 5), InputError);
}

TEST_CASE("problem parsing rejects malformed payloads") {
    const ConicProblem built =
        build_exp_cone_problem({0.0, 1.0}, Distribution({0.5, 0.5}), Rate(0.2));
    const std::string good = serialize_problem(built);
    CHECK_THROWS_AS(parse_problem("not json"), InputError);
    CHECK_THROWS_AS(parse_problem("{}"), InputError);
    {
        std::string bad = good;
        const auto at = bad.find("dro-conic/v1");
        bad.replace(at, 12, "dro-conic/v9");
        CHECK_THROWS_AS(parse_problem(bad), InputError);
    }
}

TEST_CASE("certificate replay accepts honest solutions") {
    std::mt19937_64 rng(223);
    std::uniform_real_distribution<double> rate_draw(0.01, 0.6);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int n = 0; n < 50; ++n) {
        const std::size_t d = 2 + static_cast<std::size_t>(n % 3);
        CostVector g(d);
        for (double& x : g) x = unit(rng);
        const Distribution p = random_simplex_point(rng, d);
        const Rate r(rate_draw(rng));
        const PredictorResult result = dro_predictor(g, p, r);
        const ConeCheckReport report = verify_exp_cone_solution(result.certificate, g, p, r);
        CHECK(report.ok);
        CHECK(report.violations.empty());
        CHECK(report.budget_used <= r.value + 1e-9);
    }
}

TEST_CASE("certificate replay rejects tampered solutions") {
    const CostVector g{0.0, 1.0, 0.4};
    const Distribution p({0.5, 0.25, 0.25});
    const Rate r(0.15);
    const PredictorResult honest = dro_predictor(g, p, r);
    REQUIRE(verify_exp_cone_solution(honest.certificate, g, p, r).ok);

    {
        DualCertificate cert = honest.certificate;
        std::vector<double> w = cert.worst_case.weights();
        w[0] += 0.05;  // breaks the simplex constraint and the repricing
        cert.worst_case = Distribution(Distribution::exact_t{}, std::move(w));
        const ConeCheckReport report = verify_exp_cone_solution(cert, g, p, r);
        CHECK_FALSE(report.ok);
        CHECK_FALSE(report.violations.empty());
    }
    {
        DualCertificate cert = honest.certificate;
        cert.primal_value += 0.01;  // claims a better value than the worst case prices
        cert.dual_value += 0.01;
        const ConeCheckReport report = verify_exp_cone_solution(cert, g, p, r);
        CHECK_FALSE(report.ok);
        CHECK(std::abs(report.objective_gap) > 1e-3);
    }
    {
        // A worst case outside the divergence ball must blow the budget.
        DualCertificate cert = honest.certificate;
        cert.worst_case = Distribution::point_mass(3, 1);
        cert.primal_value = 1.0;
        cert.dual_value = 1.0;
        const ConeCheckReport report = verify_exp_cone_solution(cert, g, p, r);
        CHECK_FALSE(report.ok);
        CHECK(report.budget_used > r.value + 1e-9);
    }
}

TEST_CASE("geometric-mean certificate matches ball membership") {
    std::mt19937_64 rng(227);
    std::uniform_int_distribution<std::int64_t> t_draw(1, 40);
    std::uniform_real_distribution<double> rate_draw(0.001, 1.0);
    int agreements = 0;
    for (int n = 0; n < 500; ++n) {
        const std::size_t d = 2 + static_cast<std::size_t>(n % 3);
        const std::int64_t T = t_draw(rng);
        const Distribution center = random_type_point(rng, d, T);
        const Distribution candidate = random_simplex_point(rng, d);
        const double r = rate_draw(rng);
        const double kl = relative_entropy(center, candidate).nats;
        if (std::abs(kl - r) <= 1e-12) continue;
        CHECK(geometric_mean_certificate(candidate, center, Rate(r), T) == (kl <= r));
        ++agreements;
    }
    CHECK(agreements > 400);
}

TEST_CASE("geometric-mean certificate edge behavior") {
    const Distribution center = empirical_distribution({1, 1, 2}, 2);
    // The center itself is inside every ball.
    CHECK(geometric_mean_certificate(center, center, Rate(1e-12), 3));
    // Zero weight where the center has observations collapses the product.
    CHECK_FALSE(geometric_mean_certificate(Distribution::point_mass(2, 1), center, Rate(5.0), 3));
    // A vertex center with a generous ball accepts interior candidates.
    const Distribution vertex = Distribution::point_mass(2, 0);
    CHECK(geometric_mean_certificate(Distribution({0.9, 0.1}), vertex, Rate(0.2), 6));
    // Sample size must match the center's denominators.
    CHECK_THROWS_AS(geometric_mean_certificate(center, center, Rate(0.1), 4), InputError);
}
