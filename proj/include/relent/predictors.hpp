#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "relent/divergence.hpp"
#include "relent/errors.hpp"
#include "relent/simplex.hpp"

namespace relent {

/// Radius of the relative-entropy ambiguity ball, in nats. Nonnegative and
/// finite.
struct Rate {
    double value;

    explicit Rate(double r) : value(r) {
        if (!(r >= 0.0) || !std::isfinite(r))
            throw InputError("Rate: must be nonnegative and finite");
    }
};

/// Optimality evidence attached to every robust predictor value: the dual
/// bisection endpoint mu, the entropy multiplier lambda, a worst-case
/// distribution attaining the value, and the residuals a verifier checks.
/// Invariants: |dual - primal| <= 1e-8 * (1 + |primal|), kl_residual
/// (divergence of the worst case minus the radius) <= 1e-8, and mu at least
/// the largest scenario cost minus 1e-12.
struct DualCertificate {
    double mu;
    double lambda;
    Distribution worst_case;
    double primal_value;
    double dual_value;
    double kl_residual;
};

/// Robust predictor value together with its certificate.
struct PredictorResult {
    double value;
    DualCertificate certificate;
};

enum class PredictorFamily { SampleAverage, Dro, ReverseDro, Markowitz, Pearson };

/// A predictor choice: the family plus, for every family except the sample
/// average, the ball radius it hedges against.
struct PredictorKind {
    PredictorFamily family;
    double rate;

    static PredictorKind sample_average() { return {PredictorFamily::SampleAverage, 0.0}; }
    static PredictorKind dro(double r) { return {PredictorFamily::Dro, Rate(r).value}; }
    static PredictorKind reverse_dro(double r) { return {PredictorFamily::ReverseDro, Rate(r).value}; }
    static PredictorKind markowitz(double r) { return {PredictorFamily::Markowitz, Rate(r).value}; }
    static PredictorKind pearson(double r) { return {PredictorFamily::Pearson, Rate(r).value}; }
};

inline const char* predictor_family_name(PredictorFamily f) {
    switch (f) {
        case PredictorFamily::SampleAverage: return "sample-average";
        case PredictorFamily::Dro: return "dro";
        case PredictorFamily::ReverseDro: return "reverse";
        case PredictorFamily::Markowitz: return "markowitz";
        case PredictorFamily::Pearson: return "pearson";
    }
    return "unknown";
}

/// Expected cost under the empirical distribution itself.
inline double sample_average(const CostVector& g, const Distribution& p_emp) {
    return expected_cost(g, p_emp);
}

namespace detail {

inline void check_predictor_inputs(const CostVector& g, const Distribution& p_emp) {
    check_cost_vector(g);
    if (g.size() != p_emp.size())
        throw InputError("predictor: cost vector and distribution sizes differ");
}

// Dual objective pieces for the worst-case expected cost over the ball
// {p : I(p_emp, p) <= r}: h(mu) = mu - lambda(mu) with
// lambda(mu) = exp(-r + sum_i p_emp(i) log(mu - g(i))), minimized over
// mu above every observed cost (and at or above every cost outright).
struct DroDual {
    const CostVector& g;
    const Distribution& p;
    double r;

    double lambda(double mu) const {
        double acc = -r;
        for (std::size_t i = 0; i < g.size(); ++i)
            if (p[i] > 0.0) acc += p[i] * std::log(mu - g[i]);
        return std::exp(acc);
    }

    // h'(mu) = 1 - lambda(mu) * sum_i p(i)/(mu - g(i)). Negative left of the
    // minimizer, positive right of it; h is convex.
    double slope(double mu) const {
        double s = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i)
            if (p[i] > 0.0) s += p[i] / (mu - g[i]);
        return 1.0 - lambda(mu) * s;
    }
};

inline DualCertificate trivial_certificate(const Distribution& p_emp, double value, double mu,
                                           double r) {
    return {mu, 0.0, p_emp, value, value, -r};
}

}  // namespace detail

/// Worst-case expected cost over the relative-entropy ball of radius r around
/// the empirical distribution, solved through the one-dimensional convex dual
/// and certified by reconstructing a primal maximizer from stationarity.
/// Monotone in r, never below the sample average, and equal to it at r = 0.
inline PredictorResult dro_predictor(const CostVector& g, const Distribution& p_emp, Rate rate) {
    detail::check_predictor_inputs(g, p_emp);
    const double r = rate.value;
    const std::size_t d = g.size();

    const double g_sup = *std::max_element(g.begin(), g.end());

    // r = 0: the ball is the singleton {p_emp}.
    if (r == 0.0)
        return {sample_average(g, p_emp),
                detail::trivial_certificate(p_emp, sample_average(g, p_emp), g_sup, r)};

    // Constant costs: every distribution prices the decision identically.
    if (*std::min_element(g.begin(), g.end()) == g_sup)
        return {g_sup, detail::trivial_certificate(p_emp, g_sup, g_sup, r)};

    double g_obs = -std::numeric_limits<double>::infinity();
    bool support_in_argmax = true;
    for (std::size_t i = 0; i < d; ++i) {
        if (p_emp[i] > 0.0) {
            g_obs = std::max(g_obs, g[i]);
            if (g[i] != g_sup) support_in_argmax = false;
        }
    }
    // Every observed scenario already carries the top cost, so p_emp itself
    // attains it and the ball cannot improve on it.
    if (support_in_argmax)
        return {g_sup, detail::trivial_certificate(p_emp, g_sup, g_sup, r)};

    const detail::DroDual dual{g, p_emp, r};
    const double scale = 1.0 + std::abs(g_sup);

    // Locate the dual minimizer. mu must exceed every observed cost for the
    // logarithms and sit at or above g_sup for unobserved scenarios; pick the
    // bracket endpoint with nonnegative slope so the reconstructed worst case
    // stays inside the ball.
    const auto minimize = [&]() -> std::pair<double, bool> {
        if (g_obs < g_sup && dual.slope(g_sup) >= 0.0)
            return {g_sup, true};  // minimizer pinned at the cost ceiling
        double lo;
        if (g_obs < g_sup) {
            lo = g_sup;  // slope(g_sup) < 0 here
        } else {
            // Slope diverges to -infinity at the open boundary; walk down
            // toward it until the sign flips.
            double s = scale;
            while (dual.slope(g_sup + s) >= 0.0 && s > 1e-300) s *= 0.25;
            lo = g_sup + s;
            if (dual.slope(lo) >= 0.0)
                return {lo, false};  // root below double resolution; lo is on
                                     // the nonnegative-slope side already
        }
        double hi = g_sup + scale;
        int guard = 0;
        while (dual.slope(hi) < 0.0) {
            hi = g_sup + (hi - g_sup) * 2.0;
            if (++guard > 2100 || !std::isfinite(hi))
                throw ViolationError("dro_predictor: dual slope never turned positive");
        }
        for (int it = 0; it < 700 && hi - lo > 1e-12 * scale; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (dual.slope(mid) < 0.0)
                lo = mid;
            else
                hi = mid;
        }
        return {hi, false};  // nonnegative-slope side
    };
    const auto [mu, at_cost_floor] = minimize();

    const double lambda = dual.lambda(mu);
    std::vector<double> w(d, 0.0);
    double observed_mass = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        if (p_emp[i] > 0.0) {
            w[i] = lambda * p_emp[i] / (mu - g[i]);
            observed_mass += w[i];
        }
    }
    if (at_cost_floor) {
        // Slack dual slope at the floor leaves mass for the costliest
        // unobserved scenario; ties break to the lowest index.
        const double residual = std::max(0.0, 1.0 - observed_mass);
        for (std::size_t i = 0; i < d; ++i) {
            if (p_emp[i] == 0.0 && g[i] == g_sup) {
                w[i] = residual;
                break;
            }
        }
    } else {
        for (double& x : w) x /= observed_mass;
    }
    Distribution worst(Distribution::exact_t{}, std::move(w));

    const double primal = expected_cost(g, worst);
    const double dual_value = mu - lambda;
    const double kl_residual = relative_entropy(p_emp, worst).nats - r;

    if (std::abs(dual_value - primal) > 1e-8 * (1.0 + std::abs(primal)))
        throw ViolationError("dro_predictor: duality gap above tolerance");
    if (kl_residual > 1e-8)
        throw ViolationError("dro_predictor: worst case left the ball");
    if (mu < g_sup - 1e-12)
        throw ViolationError("dro_predictor: dual variable below the cost ceiling");

    return {primal, {mu, lambda, std::move(worst), primal, dual_value, kl_residual}};
}

/// Grid oracle for dro_predictor: the best expected cost among lattice points
/// of resolution m inside the ball. A lower bound on the exact value; within
/// (max g - min g) * d / m of it empirically.
struct BruteForceResult {
    double value;
    Distribution argmax;
};

inline BruteForceResult dro_brute_force(const CostVector& g, const Distribution& p_emp,
                                        Rate rate, std::int64_t resolution) {
    detail::check_predictor_inputs(g, p_emp);
    const SimplexGrid grid(g.size(), resolution);
    double best = -std::numeric_limits<double>::infinity();
    std::optional<Distribution> arg;
    for_each_grid_point(grid, [&](const Distribution& p) {
        if (relative_entropy(p_emp, p).nats <= rate.value) {
            const double v = expected_cost(g, p);
            if (v > best) {
                best = v;
                arg = p;
            }
        }
    });
    if (!arg)
        throw DomainError("dro_brute_force: no lattice point inside the ball; raise resolution");
    return {best, *arg};
}

/// Worst-case expected cost when the ball constrains I(p, p_emp) <= r
/// instead: only models absolutely continuous with the data survive, so
/// unobserved scenarios never matter. Solved by exponential tilting of
/// p_emp along g, whose divergence grows monotonically with the tilt.
inline double reverse_predictor(const CostVector& g, const Distribution& p_emp, Rate rate) {
    detail::check_predictor_inputs(g, p_emp);
    const double r = rate.value;
    if (r == 0.0) return sample_average(g, p_emp);

    double g_max = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < g.size(); ++i)
        if (p_emp[i] > 0.0) g_max = std::max(g_max, g[i]);
    double argmax_mass = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (p_emp[i] > 0.0 && g[i] == g_max) argmax_mass += p_emp[i];

    // Enough budget reaches the conditional law on the costliest observed
    // scenarios, the extreme point of the absolutely continuous ball.
    const double r_cap = -std::log(argmax_mass);
    if (r >= r_cap) return g_max;

    // Tilted mean and divergence at parameter t, in log-domain anchored at
    // g_max so the exponentials never overflow.
    const auto stats = [&](double t) {
        double z = 0.0, zg = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (p_emp[i] == 0.0) continue;
            const double e = std::exp(t * (g[i] - g_max));
            z += p_emp[i] * e;
            zg += p_emp[i] * e * g[i];
        }
        const double mean = zg / z;
        const double kl = t * (mean - g_max) - std::log(z);
        return std::pair<double, double>(mean, kl);
    };

    double lo = 0.0, hi = 1.0;
    int guard = 0;
    while (stats(hi).second < r) {
        hi *= 2.0;
        if (++guard > 4000)
            throw ViolationError("reverse_predictor: tilt failed to reach the radius");
    }
    for (int it = 0; it < 300 && hi - lo > 1e-14 * (1.0 + hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (stats(mid).second < r)
            lo = mid;
        else
            hi = mid;
    }
    return stats(0.5 * (lo + hi)).first;
}

/// First-order robust surrogate: sample mean plus sqrt(2 r) standard
/// deviations of the cost under the empirical distribution. Variance uses
/// E[g^2] - (E[g])^2 with a clamp against negative round-off.
inline double markowitz_predictor(const CostVector& g, const Distribution& p_emp, Rate rate) {
    detail::check_predictor_inputs(g, p_emp);
    double mean = 0.0, second = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        mean += p_emp[i] * g[i];
        second += p_emp[i] * g[i] * g[i];
    }
    const double variance = std::max(0.0, second - mean * mean);
    return mean + std::sqrt(variance) * std::sqrt(2.0 * rate.value);
}

/// Exact maximum of the expected cost over the Pearson ball
/// {p in simplex : chi2(p_emp, p) <= 2r}, by enumerating active sets of the
/// nonnegativity constraints and solving each face's stationarity system in
/// closed form. Requires a strictly positive empirical distribution; equals
/// the markowitz value whenever the unconstrained ellipsoid optimizer keeps
/// all coordinates nonnegative.
inline double pearson_predictor(const CostVector& g, const Distribution& p_emp, Rate rate) {
    detail::check_predictor_inputs(g, p_emp);
    if (!p_emp.strictly_positive())
        throw DomainError("pearson_predictor: empirical distribution must be strictly positive");
    const double r = rate.value;
    const std::size_t d = g.size();
    if (d > 24) throw InputError("pearson_predictor: active-set enumeration capped at 24 scenarios");
    if (r == 0.0) return sample_average(g, p_emp);

    double best = -std::numeric_limits<double>::infinity();
    bool found = false;

    // Interior candidate: the ellipsoid's own maximizer along the covariance
    // direction, valid when it stays inside the simplex.
    {
        double mean = 0.0;
        for (std::size_t i = 0; i < d; ++i) mean += p_emp[i] * g[i];
        double var = 0.0;
        std::vector<double> q(d);
        for (std::size_t i = 0; i < d; ++i) {
            q[i] = p_emp[i] * (g[i] - mean);
            var += q[i] * (g[i] - mean);
        }
        if (var <= 0.0) return mean;  // effectively constant cost
        const double step = std::sqrt(2.0 * r / var);
        bool inside = true;
        double value = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            const double pi = p_emp[i] + step * q[i];
            if (pi < -1e-14) inside = false;
            value += g[i] * std::max(pi, 0.0);
        }
        if (inside) {
            best = value;
            found = true;
        }
    }

    // Faces: scenarios outside the active set S are pinned to zero, which
    // already spends their chi-square mass; the remainder is an ellipsoid
    // slice handled by a two-multiplier stationarity system that reduces to
    // a quadratic in the simplex multiplier.
    const std::uint32_t full = (1u << d) - 1u;
    for (std::uint32_t mask = 1u; mask <= full; ++mask) {
        if (mask == full) continue;  // interior case handled above
        double off_mass = 0.0;
        for (std::size_t i = 0; i < d; ++i)
            if (!(mask & (1u << i))) off_mass += p_emp[i];
        const double rho = 2.0 * r - off_mass;
        if (rho < 0.0) continue;

        // Single surviving scenario: the vertex itself.
        if ((mask & (mask - 1)) == 0u) {
            std::size_t j = 0;
            while (!(mask & (1u << j))) ++j;
            const double chi =
                (1.0 - p_emp[j]) * (1.0 - p_emp[j]) / p_emp[j] + off_mass;
            if (chi <= 2.0 * r + 1e-11) {
                if (!found || g[j] > best) best = g[j];
                found = true;
            }
            continue;
        }

        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            if (mask & (1u << i)) {
                alpha += p_emp[i];
                beta += p_emp[i] * g[i];
                gamma += p_emp[i] * g[i] * g[i];
            }
        }
        const double s = 1.0 - alpha;  // mass the face must absorb
        if (s <= 0.0) continue;        // strictly positive p_emp keeps s > 0

        // Degenerate face where the cost is constant: feasibility only.
        double face_min = std::numeric_limits<double>::infinity();
        double face_max = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < d; ++i) {
            if (mask & (1u << i)) {
                face_min = std::min(face_min, g[i]);
                face_max = std::max(face_max, g[i]);
            }
        }
        if (face_min == face_max) {
            if (s * s / alpha <= rho + 1e-11) {
                if (!found || face_min > best) best = face_min;
                found = true;
            }
            continue;
        }
        if (rho <= 0.0) continue;  // slice forces movement, no budget left

        // Quadratic in the simplex multiplier mu.
        const double A = alpha * (s * s - rho * alpha);
        const double B = 2.0 * rho * alpha * beta - 2.0 * s * s * beta;
        const double C = s * s * gamma - rho * beta * beta;
        std::vector<double> roots;
        if (std::abs(A) > 1e-300) {
            const double disc = B * B - 4.0 * A * C;
            if (disc >= 0.0) {
                const double sq = std::sqrt(disc);
                roots.push_back((-B + sq) / (2.0 * A));
                roots.push_back((-B - sq) / (2.0 * A));
            }
        } else if (std::abs(B) > 1e-300) {
            roots.push_back(-C / B);
        }
        for (const double mu : roots) {
            const double nu = (beta - mu * alpha) / (2.0 * s);
            if (!(nu > 0.0) || !std::isfinite(nu)) continue;
            double value = 0.0, mass = 0.0, chi = off_mass;
            bool ok = true;
            for (std::size_t i = 0; i < d && ok; ++i) {
                if (!(mask & (1u << i))) continue;
                const double qi = p_emp[i] * (g[i] - mu) / (2.0 * nu);
                const double pi = p_emp[i] + qi;
                if (pi < -1e-11) { ok = false; break; }
                const double clamped = std::max(pi, 0.0);
                value += g[i] * clamped;
                mass += clamped;
                chi += qi * qi / p_emp[i];
            }
            if (!ok) continue;
            if (std::abs(mass - 1.0) > 1e-8) continue;
            if (chi > 2.0 * r + 1e-8) continue;
            if (!found || value > best) best = value;
            found = true;
        }
    }

    if (!found)
        throw ViolationError("pearson_predictor: no feasible stationary candidate survived");
    return best;
}

/// Evaluates any predictor kind on one cost vector. Pearson is undefined on
/// boundary distributions; there it falls back to the robust value, counting
/// the fallback for the caller's report when a counter is supplied.
inline double evaluate_predictor(const PredictorKind& kind, const CostVector& g,
                                 const Distribution& p_emp,
                                 std::int64_t* pearson_fallbacks = nullptr) {
    switch (kind.family) {
        case PredictorFamily::SampleAverage:
            return sample_average(g, p_emp);
        case PredictorFamily::Dro:
            return dro_predictor(g, p_emp, Rate(kind.rate)).value;
        case PredictorFamily::ReverseDro:
            return reverse_predictor(g, p_emp, Rate(kind.rate));
        case PredictorFamily::Markowitz:
            return markowitz_predictor(g, p_emp, Rate(kind.rate));
        case PredictorFamily::Pearson:
            if (!p_emp.strictly_positive()) {
                if (pearson_fallbacks) ++*pearson_fallbacks;
                return dro_predictor(g, p_emp, Rate(kind.rate)).value;
            }
            return pearson_predictor(g, p_emp, Rate(kind.rate));
    }
    throw InputError("evaluate_predictor: unknown predictor family");
}

/// The decision a predictor recommends: the row of the cost matrix with the
/// smallest predicted cost, lowest index on ties.
struct Prescription {
    std::size_t decision;
    std::string label;
    double value;
};

inline Prescription prescribe(const PredictorKind& kind, const CostMatrix& costs,
                              const Distribution& p_emp,
                              std::int64_t* pearson_fallbacks = nullptr) {
    std::size_t best_index = 0;
    double best_value = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < costs.decisions(); ++i) {
        const double v = evaluate_predictor(kind, costs.row(i), p_emp, pearson_fallbacks);
        if (v < best_value) {
            best_value = v;
            best_index = i;
        }
    }
    return {best_index, costs.label(best_index), best_value};
}

}  // namespace relent
