#include <catch2/catch_amalgamated.hpp>

#include <relent/divergence.hpp>
#include <relent/predictors.hpp>
#include <relent/simplex.hpp>

#include <algorithm>
#include <cmath>
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

Distribution random_interior_point(std::mt19937_64& rng, std::size_t d) {
    const Distribution raw = random_simplex_point(rng, d);
    std::vector<double> w(d);
    for (std::size_t i = 0; i < d; ++i) w[i] = 0.7 * raw[i] + 0.3 / static_cast<double>(d);
    return Distribution(Distribution::exact_t{}, std::move(w));
}

CostVector random_costs(std::mt19937_64& rng, std::size_t d) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    CostVector g(d);
    for (double& x : g) x = unit(rng);
    return g;
}

double spread(const CostVector& g) {
    return *std::max_element(g.begin(), g.end()) - *std::min_element(g.begin(), g.end());
}

}  // namespace

TEST_CASE("rate type rejects bad radii") {
    CHECK_NOTHROW(Rate(0.0));
    CHECK_NOTHROW(Rate(2.5));
    CHECK_THROWS_AS(Rate(-1e-9), InputError);
    CHECK_THROWS_AS(Rate(std::nan("")), InputError);
    CHECK_THROWS_AS(Rate(std::numeric_limits<double>::infinity()), InputError);
}

TEST_CASE("zero radius collapses to the empirical mean") {
    std::mt19937_64 rng(101);
    for (int n = 0; n < 40; ++n) {
        const std::size_t d = 2 + static_cast<std::size_t>(n % 3);
        const CostVector g = random_costs(rng, d);
        const Distribution p = random_simplex_point(rng, d);
        const PredictorResult result = dro_predictor(g, p, Rate(0.0));
        CHECK(std::abs(result.value - sample_average(g, p)) <= 1e-12);
        CHECK(std::abs(result.certificate.primal_value - result.certificate.dual_value) <= 1e-9);
    }
}

TEST_CASE("unobserved worst scenario yields the survival closed form") {
    // All mass observed on a zero-cost scenario, worst cost elsewhere: the
    // ball lets exactly 1 - exp(-r) of the mass defect to the bad scenario.
    for (double r : {0.02, 0.05, 0.2, 0.7}) {
        const PredictorResult two =
            dro_predictor({0.0, 1.0}, Distribution::point_mass(2, 0), Rate(r));
        CHECK(std::abs(two.value - (1.0 - std::exp(-r))) <= 1e-10);
        const PredictorResult three =
            dro_predictor({0.0, 1.0, 0.0}, Distribution::point_mass(3, 0), Rate(r));
        CHECK(std::abs(three.value - (1.0 - std::exp(-r))) <= 1e-10);
    }
    // Frozen spot value for r = 0.05.
    const PredictorResult spot =
        dro_predictor({0.0, 1.0}, Distribution::point_mass(2, 0), Rate(0.05));
    CHECK(spot.value == Catch::Approx(0.048770575499285984).margin(1e-15));
}

TEST_CASE("symmetric two-scenario closed form") {
    // For g = (0,1) and a fair empirical distribution the worst case solves
    // a scalar problem with value (1 + sqrt(1 - exp(-2r))) / 2.
    const Distribution fair({0.5, 0.5});
    for (double r : {0.01, 0.05, 0.2, 1.0}) {
        const double expected = 0.5 * (1.0 + std::sqrt(1.0 - std::exp(-2.0 * r)));
        CHECK(dro_predictor({0.0, 1.0}, fair, Rate(r)).value ==
              Catch::Approx(expected).margin(1e-10));
    }
    CHECK(dro_predictor({0.0, 1.0}, fair, Rate(0.05)).value ==
          Catch::Approx(0.6542421650879231).margin(1e-12));
}

TEST_CASE("constant costs are immune to ambiguity") {
    const Distribution p({0.3, 0.2, 0.5});
    const PredictorResult result = dro_predictor({2.5, 2.5, 2.5}, p, Rate(0.4));
    CHECK(result.value == 2.5);
    CHECK(result.certificate.kl_residual <= 0.0);
}

TEST_CASE("robust value is monotone in the radius and bounded") {
    std::mt19937_64 rng(103);
    for (int n = 0; n < 25; ++n) {
        const std::size_t d = 2 + static_cast<std::size_t>(n % 3);
        const CostVector g = random_costs(rng, d);
        const Distribution p = random_simplex_point(rng, d);
        const double mean = sample_average(g, p);
        const double top = *std::max_element(g.begin(), g.end());
        double prev = mean;
        for (double r : {0.01, 0.05, 0.2, 1.0, 5.0}) {
            const double value = dro_predictor(g, p, Rate(r)).value;
            CHECK(value >= prev - 1e-12);
            CHECK(value >= mean - 1e-12);
            CHECK(value <= top + 1e-12);
            prev = value;
        }
        // A huge ball reaches the global worst cost.
        CHECK(dro_predictor(g, p, Rate(60.0)).value == Catch::Approx(top).margin(1e-9));
    }
}

TEST_CASE("certificates reprice their own worst case") {
    std::mt19937_64 rng(107);
    std::uniform_real_distribution<double> rate_draw(0.01, 0.8);
    for (int n = 0; n < 60; ++n) {
        const std::size_t d = 2 + static_cast<std::size_t>(n % 3);
        const CostVector g = random_costs(rng, d);
        const Distribution p = random_simplex_point(rng, d);
        const double r = rate_draw(rng);
        const PredictorResult result = dro_predictor(g, p, Rate(r));
        const DualCertificate& cert = result.certificate;
        CHECK(std::abs(expected_cost(g, cert.worst_case) - cert.primal_value) <= 1e-9);
        CHECK(std::abs(cert.primal_value - cert.dual_value) <=
              1e-8 * (1.0 + std::abs(cert.primal_value)));
        CHECK(cert.kl_residual <= 1e-8);
        CHECK(relative_entropy(p, cert.worst_case).nats <= r + 1e-8);
    }
}

TEST_CASE("grid oracle brackets the dual value") {
    std::mt19937_64 rng(109);
    std::uniform_real_distribution<double> rate_draw(0.02, 0.5);
    const std::int64_t m = 300;
    for (int n = 0; n < 30; ++n) {
        const CostVector g = random_costs(rng, 3);
        const Distribution p = random_simplex_point(rng, 3);
        const double r = rate_draw(rng);
        const double dual = dro_predictor(g, p, Rate(r)).value;
        const BruteForceResult brute = dro_brute_force(g, p, Rate(r), m);
        CHECK(brute.value <= dual + 1e-9);
        CHECK(std::abs(dual - brute.value) <=
              spread(g) * 3.0 / static_cast<double>(m) + 1e-9);
        CHECK(relative_entropy(p, brute.argmax).nats <= r + 1e-9);
    }
}

TEST_CASE("raising an unobserved worst cost raises the robust value") {
    const Distribution p({0.5, 0.0, 0.5});
    const double low = dro_predictor({0.0, 1.0, 0.0}, p, Rate(0.1)).value;
    const double high = dro_predictor({0.0, 1.5, 0.0}, p, Rate(0.1)).value;
    CHECK(high > low + 1e-6);
}

TEST_CASE("reverse ball ignores unobserved scenarios") {
    // Hedging only over models inside the data's support: a scenario never
    // observed cannot hurt, in contrast with the forward ball.
    const Distribution vertex = Distribution::point_mass(2, 0);
    for (double r : {0.01, 0.1, 1.0}) {
        CHECK(reverse_predictor({0.0, 1.0}, vertex, Rate(r)) == 0.0);
        CHECK(dro_predictor({0.0, 1.0}, vertex, Rate(r)).value > 0.0);
    }
    CHECK(reverse_predictor({3.0, 3.0}, Distribution({0.4, 0.6}), Rate(0.2)) == 3.0);
}

TEST_CASE("reverse predictor matches its own ball on a grid") {
    std::mt19937_64 rng(113);
    for (int n = 0; n < 8; ++n) {
        const CostVector g = random_costs(rng, 3);
        const Distribution p = random_interior_point(rng, 3);
        const double r = 0.05 + 0.1 * n;
        const double value = reverse_predictor(g, p, Rate(r));
        // Soundness: no grid point inside the ball beats the reported value.
        double best = -std::numeric_limits<double>::infinity();
        for_each_grid_point(SimplexGrid(3, 200), [&](const Distribution& q) {
            if (relative_entropy(q, p).nats <= r) best = std::max(best, expected_cost(g, q));
        });
        CHECK(best <= value + 1e-9);
        CHECK(value >= sample_average(g, p) - 1e-12);
        CHECK(value <= *std::max_element(g.begin(), g.end()) + 1e-12);
    }
}

TEST_CASE("reverse predictor behaves across radii") {
    std::mt19937_64 rng(127);
    for (int n = 0; n < 10; ++n) {
        const CostVector g = random_costs(rng, 3);
        const Distribution p = random_interior_point(rng, 3);
        CHECK(std::abs(reverse_predictor(g, p, Rate(0.0)) - sample_average(g, p)) <= 1e-12);
        double prev = sample_average(g, p);
        for (double r : {0.05, 0.2, 1.0, 5.0}) {
            const double value = reverse_predictor(g, p, Rate(r));
            CHECK(value >= prev - 1e-10);
            prev = value;
        }
        // With a strictly positive empirical distribution every scenario is
        // in the support, so a huge ball reaches the global maximum.
        const double top = *std::max_element(g.begin(), g.end());
        CHECK(reverse_predictor(g, p, Rate(80.0)) == Catch::Approx(top).margin(1e-9));
    }
}

TEST_CASE("forward and reverse premiums agree to first order") {
    // Both balls share the same quadratic shape at small radii.
    std::mt19937_64 rng(131);
    for (int n = 0; n < 10; ++n) {
        const std::size_t d = 2 + static_cast<std::size_t>(n % 3);
        const CostVector g = random_costs(rng, d);
        const Distribution p = random_interior_point(rng, d);
        const double mean = sample_average(g, p);
        const double fwd = dro_predictor(g, p, Rate(1e-5)).value - mean;
        const double rev = reverse_predictor(g, p, Rate(1e-5)) - mean;
        if (fwd < 1e-9) continue;  // degenerate spread
        CHECK(rev / fwd == Catch::Approx(1.0).margin(0.02));
    }
}

TEST_CASE("markowitz closed form") {
    const Distribution fair({0.5, 0.5});
    // mean 1/2, std 1/2, premium std * sqrt(2 r) with r = 0.08.
    CHECK(markowitz_predictor({0.0, 1.0}, fair, Rate(0.08)) ==
          Catch::Approx(0.7).margin(1e-12));
    std::mt19937_64 rng(137);
    for (int n = 0; n < 20; ++n) {
        const std::size_t d = 2 + static_cast<std::size_t>(n % 3);
        const CostVector g = random_costs(rng, d);
        const Distribution p = random_simplex_point(rng, d);
        double mean = 0.0, second = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            mean += p[i] * g[i];
            second += p[i] * g[i] * g[i];
        }
        const double var = std::max(second - mean * mean, 0.0);
        const double r = 0.02 * (n + 1);
        CHECK(markowitz_predictor(g, p, Rate(r)) ==
              Catch::Approx(mean + std::sqrt(2.0 * r * var)).margin(1e-12));
    }
}

TEST_CASE("pearson predictor matches the mean-deviation form when interior") {
    std::mt19937_64 rng(139);
    int interior_seen = 0;
    for (int n = 0; n < 30; ++n) {
        const std::size_t d = 2 + static_cast<std::size_t>(n % 3);
        const CostVector g = random_costs(rng, d);
        const Distribution p = random_interior_point(rng, d);
        const double r = 1e-5;
        const double mean = sample_average(g, p);
        double var = 0.0;
        for (std::size_t i = 0; i < d; ++i) var += p[i] * (g[i] - mean) * (g[i] - mean);
        if (var < 1e-8) continue;
        bool interior = true;
        for (std::size_t i = 0; i < d; ++i)
            if (p[i] + std::sqrt(2.0 * r / var) * p[i] * (g[i] - mean) <= 0.0) interior = false;
        if (!interior) continue;
        ++interior_seen;
        CHECK(std::abs(pearson_predictor(g, p, Rate(r)) - markowitz_predictor(g, p, Rate(r))) <=
              1e-10);
    }
    CHECK(interior_seen > 0);
}

TEST_CASE("pearson predictor against a quadratic-ball grid") {
    std::mt19937_64 rng(149);
    for (int n = 0; n < 8; ++n) {
        const CostVector g = random_costs(rng, 3);
        const Distribution p = random_interior_point(rng, 3);
        const double r = 0.02 + 0.03 * n;
        const double value = pearson_predictor(g, p, Rate(r));
        double best = -std::numeric_limits<double>::infinity();
        for_each_grid_point(SimplexGrid(3, 250), [&](const Distribution& q) {
            if (pearson_divergence(p, q).nats <= 2.0 * r)
                best = std::max(best, expected_cost(g, q));
        });
        // Soundness: the enumerated inner approximation never wins.
        CHECK(best <= value + 1e-9);
        CHECK(value >= sample_average(g, p) - 1e-12);
    }
    // A huge ball swallows the whole simplex.
    const Distribution p = random_interior_point(rng, 3);
    const CostVector g = random_costs(rng, 3);
    CHECK(pearson_predictor(g, p, Rate(500.0)) ==
          Catch::Approx(*std::max_element(g.begin(), g.end())).margin(1e-9));
}

TEST_CASE("pearson needs a strictly positive center but the dispatcher recovers") {
    const Distribution vertex = Distribution::point_mass(2, 0);
    CHECK_THROWS_AS(pearson_predictor({0.0, 1.0}, vertex, Rate(0.1)), DomainError);
    std::int64_t fallbacks = 0;
    const double value =
        evaluate_predictor(PredictorKind::pearson(0.1), {0.0, 1.0}, vertex, &fallbacks);
    CHECK(fallbacks == 1);
    CHECK(value == Catch::Approx(dro_predictor({0.0, 1.0}, vertex, Rate(0.1)).value)
                       .margin(1e-15));
}

TEST_CASE("dispatcher routes every family") {
    const Distribution p({0.25, 0.25, 0.5});
    const CostVector g{0.1, 0.9, 0.4};
    CHECK(evaluate_predictor(PredictorKind::sample_average(), g, p) == sample_average(g, p));
    CHECK(evaluate_predictor(PredictorKind::dro(0.2), g, p) ==
          dro_predictor(g, p, Rate(0.2)).value);
    CHECK(evaluate_predictor(PredictorKind::reverse_dro(0.2), g, p) ==
          reverse_predictor(g, p, Rate(0.2)));
    CHECK(evaluate_predictor(PredictorKind::markowitz(0.2), g, p) ==
          markowitz_predictor(g, p, Rate(0.2)));
    CHECK(evaluate_predictor(PredictorKind::pearson(0.2), g, p) ==
          pearson_predictor(g, p, Rate(0.2)));
}

TEST_CASE("prescription picks the cheapest row, lowest index on ties") {
    const Distribution p = Distribution::point_mass(2, 0);
    const CostMatrix costs({"risky", "safe", "middle"},
                           {{0.0, 1.0}, {1.0, 0.0}, {0.45, 0.55}});
    const Prescription mean_choice = prescribe(PredictorKind::sample_average(), costs, p);
    CHECK(mean_choice.decision == 0);
    CHECK(mean_choice.label == "risky");
    CHECK(mean_choice.value == 0.0);

    // Under ambiguity the never-observed bad scenario of the first row
    // carries weight, so the hedged row wins.
    const Prescription robust_choice = prescribe(PredictorKind::dro(0.7), costs, p);
    CHECK(robust_choice.decision == 2);
    CHECK(robust_choice.value ==
          Catch::Approx(evaluate_predictor(PredictorKind::dro(0.7), costs.row(2), p))
              .margin(1e-15));

    const CostMatrix tie({"first", "second"}, {{0.3, 0.3}, {0.3, 0.3}});
    CHECK(prescribe(PredictorKind::dro(0.2), tie, p).decision == 0);
}
