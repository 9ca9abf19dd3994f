#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "relent/divergence.hpp"
#include "relent/errors.hpp"
#include "relent/predictors.hpp"
#include "relent/simplex.hpp"

namespace relent {

/// One empirical-frequency class of length-T samples: the counts, and the
/// log of how many sample paths realize them, via log-gamma.
struct TypeClass {
    std::vector<std::int64_t> counts;
    std::int64_t T;
    double log_multiplicity;

    Distribution distribution() const {
        std::vector<double> w(counts.size());
        for (std::size_t i = 0; i < w.size(); ++i)
            w[i] = static_cast<double>(counts[i]) / static_cast<double>(T);
        return Distribution(Distribution::exact_t{}, std::move(w));
    }
};

inline TypeClass make_type(std::vector<std::int64_t> counts) {
    if (counts.empty()) throw InputError("TypeClass: needs at least one scenario");
    std::int64_t T = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] < 0)
            throw InputError("TypeClass: count " + std::to_string(i + 1) + " is negative");
        T += counts[i];
    }
    if (T < 1) throw InputError("TypeClass: counts must sum to at least 1");
    double log_mult = std::lgamma(static_cast<double>(T) + 1.0);
    for (const std::int64_t c : counts) log_mult -= std::lgamma(static_cast<double>(c) + 1.0);
    return {std::move(counts), T, log_mult};
}

/// Streams every type of length-T samples over d scenarios, exactly once.
template <typename Fn>
inline void for_each_type(std::size_t d, std::int64_t T, Fn&& fn) {
    if (T < 1) throw InputError("for_each_type: T must be at least 1");
    for_each_composition(T, d, [&](const std::vector<std::int64_t>& counts) {
        fn(make_type(std::vector<std::int64_t>(counts)));
    });
}

inline std::vector<TypeClass> enumerate_types(std::size_t d, std::int64_t T) {
    std::vector<TypeClass> out;
    out.reserve(static_cast<std::size_t>(composition_count(T, d)));
    for_each_type(d, T, [&](TypeClass t) { out.push_back(std::move(t)); });
    return out;
}

/// Probability that a length-T i.i.d. sample from p lands exactly in this
/// type class, evaluated in log-domain: exact zero when the type charges a
/// scenario p rules out.
inline double log_type_probability(const TypeClass& type, const Distribution& p) {
    if (type.counts.size() != p.size())
        throw InputError("type_probability: type and model sizes differ");
    double acc = type.log_multiplicity;
    for (std::size_t i = 0; i < type.counts.size(); ++i) {
        if (type.counts[i] == 0) continue;
        if (p[i] == 0.0) return -std::numeric_limits<double>::infinity();
        acc += static_cast<double>(type.counts[i]) * std::log(p[i]);
    }
    return acc;
}

inline double type_probability(const TypeClass& type, const Distribution& p) {
    const double lp = log_type_probability(type, p);
    return std::isinf(lp) ? 0.0 : std::exp(lp);
}

namespace detail {

/// Compensated accumulator so exact probabilities are reproducible and keep
/// full precision across millions of terms.
struct KahanSum {
    double sum = 0.0;
    double carry = 0.0;

    void add(double x) {
        const double y = x - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
};

}  // namespace detail

/// The polynomial-times-exponential disappointment ceiling
/// (T + 1)^d exp(-r T), in log-domain to dodge overflow.
inline double strong_bound(std::size_t d, std::int64_t T, double r) {
    return std::exp(static_cast<double>(d) * std::log(static_cast<double>(T) + 1.0) -
                    r * static_cast<double>(T));
}

/// Exact probability, under model p, that the predictor evaluated at the
/// empirical distribution of a length-T sample undershoots the decision's
/// true expected cost (strict inequality; ties are not disappointment).
/// Boundary types where the Pearson predictor is undefined fall back to the
/// robust value; the count of such fallbacks is reported alongside.
struct DisappointmentValue {
    double probability;
    std::int64_t pearson_fallbacks;
};

inline DisappointmentValue exact_disappointment_detail(const PredictorKind& kind,
                                                       const CostVector& g,
                                                       const Distribution& model,
                                                       std::int64_t T) {
    check_cost_vector(g);
    if (g.size() != model.size())
        throw InputError("exact_disappointment: cost vector and model sizes differ");
    const double true_cost = expected_cost(g, model);
    detail::KahanSum prob;
    std::int64_t fallbacks = 0;
    for_each_type(g.size(), T, [&](const TypeClass& type) {
        const double predicted = evaluate_predictor(kind, g, type.distribution(), &fallbacks);
        if (true_cost > predicted) prob.add(type_probability(type, model));
    });
    return {std::min(prob.sum, 1.0), fallbacks};
}

inline double exact_disappointment(const PredictorKind& kind, const CostVector& g,
                                   const Distribution& model, std::int64_t T) {
    return exact_disappointment_detail(kind, g, model, T).probability;
}

/// Prescriptor overload: at each empirical distribution the predictor picks
/// its favorite row, and disappointment compares that row's true cost with
/// the value promised for it.
inline DisappointmentValue exact_disappointment_detail(const PredictorKind& kind,
                                                       const CostMatrix& costs,
                                                       const Distribution& model,
                                                       std::int64_t T) {
    if (costs.scenarios() != model.size())
        throw InputError("exact_disappointment: cost matrix and model sizes differ");
    detail::KahanSum prob;
    std::int64_t fallbacks = 0;
    for_each_type(model.size(), T, [&](const TypeClass& type) {
        const Distribution emp = type.distribution();
        const Prescription chosen = prescribe(kind, costs, emp, &fallbacks);
        const double realized = expected_cost(costs.row(chosen.decision), model);
        if (realized > chosen.value) prob.add(type_probability(type, model));
    });
    return {std::min(prob.sum, 1.0), fallbacks};
}

inline double exact_disappointment(const PredictorKind& kind, const CostMatrix& costs,
                                   const Distribution& model, std::int64_t T) {
    return exact_disappointment_detail(kind, costs, model, T).probability;
}

/// Exact disappointment next to its guarantee ceiling across sample sizes.
struct CurveEntry {
    std::int64_t T;
    double exact_probability;
    double strong_bound;
    double log_probability;
    std::int64_t pearson_fallbacks;
};

struct DisappointmentCurve {
    PredictorKind kind;
    double bound_rate;
    std::vector<CurveEntry> entries;

    /// Entries whose exact probability exceeds the ceiling. Zero is the
    /// guarantee for the robust predictor; other kinds may violate freely.
    std::int64_t bound_violations() const {
        std::int64_t n = 0;
        for (const CurveEntry& e : entries)
            if (e.exact_probability > e.strong_bound) ++n;
        return n;
    }
};

template <typename CostLike>
inline DisappointmentCurve disappointment_curve(const PredictorKind& kind, const CostLike& costs,
                                                const Distribution& model, std::int64_t t_min,
                                                std::int64_t t_max, std::int64_t t_step,
                                                std::optional<double> bound_rate_opt = {}) {
    if (t_min < 1 || t_max < t_min || t_step < 1)
        throw InputError("disappointment_curve: need 1 <= t_min <= t_max and t_step >= 1");
    const double bound_rate = bound_rate_opt.value_or(kind.rate);
    DisappointmentCurve curve{kind, bound_rate, {}};
    for (std::int64_t T = t_min; T <= t_max; T += t_step) {
        const DisappointmentValue v = exact_disappointment_detail(kind, costs, model, T);
        curve.entries.push_back({T, v.probability, strong_bound(model.size(), T, bound_rate),
                                 std::log(v.probability), v.pearson_fallbacks});
    }
    return curve;
}

/// Least-squares slope of log probability against T over a window, in nats
/// per sample. Entries with zero probability carry no information and are
/// dropped; an all-zero window decays faster than any exponential and
/// reports -infinity, while a single survivor cannot pin a slope.
inline double fit_decay_rate(const DisappointmentCurve& curve, std::int64_t t_min,
                             std::int64_t t_max) {
    std::vector<std::pair<double, double>> pts;
    std::size_t in_window = 0;
    for (const CurveEntry& e : curve.entries) {
        if (e.T < t_min || e.T > t_max) continue;
        ++in_window;
        if (e.exact_probability > 0.0)
            pts.push_back({static_cast<double>(e.T), e.log_probability});
    }
    if (in_window == 0) throw FitError("fit_decay_rate: window contains no curve entries");
    if (pts.empty()) return -std::numeric_limits<double>::infinity();
    if (pts.size() == 1)
        throw FitError("fit_decay_rate: only one positive entry in the window");
    double mean_t = 0.0, mean_y = 0.0;
    for (const auto& [t, y] : pts) { mean_t += t; mean_y += y; }
    mean_t /= static_cast<double>(pts.size());
    mean_y /= static_cast<double>(pts.size());
    double num = 0.0, den = 0.0;
    for (const auto& [t, y] : pts) {
        num += (t - mean_t) * (y - mean_y);
        den += (t - mean_t) * (t - mean_t);
    }
    if (den == 0.0) throw FitError("fit_decay_rate: degenerate window, all T equal");
    return num / den;
}

/// Event probability under the method of types: the exact chance the
/// empirical distribution lands in the event, and the ceiling
/// (T + 1)^d exp(-T inf I), with the infimum searched over the event's types
/// plus a refinement lattice. The reported ceiling dominates the exact
/// probability whenever that search attains the true infimum (always for
/// halfspace thresholds aligned with the lattice).
struct SanovResult {
    double exact;
    double rate_bound;
    double rate_infimum;
};

using EventPredicate = std::function<bool(const Distribution&)>;

/// Closed halfspace event {p : sum coefficients(i) p(i) >= threshold}.
struct HalfspaceEvent {
    std::vector<double> coefficients;
    double threshold;

    bool operator()(const Distribution& p) const {
        if (p.size() != coefficients.size())
            throw InputError("HalfspaceEvent: dimension mismatch");
        double acc = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) acc += coefficients[i] * p[i];
        return acc >= threshold;
    }
};

inline SanovResult sanov_set_probability(const Distribution& model, std::int64_t T,
                                         const EventPredicate& event,
                                         std::int64_t refinement_resolution = 240) {
    if (T < 1) throw InputError("sanov_set_probability: T must be at least 1");
    detail::KahanSum prob;
    double inf_rate = std::numeric_limits<double>::infinity();
    for_each_type(model.size(), T, [&](const TypeClass& type) {
        const Distribution p = type.distribution();
        if (!event(p)) return;
        prob.add(type_probability(type, model));
        inf_rate = std::min(inf_rate, relative_entropy(p, model).nats);
    });
    for_each_grid_point(SimplexGrid(model.size(), refinement_resolution),
                        [&](const Distribution& p) {
                            if (event(p))
                                inf_rate = std::min(inf_rate, relative_entropy(p, model).nats);
                        });
    const double bound =
        std::isinf(inf_rate) ? 0.0 : strong_bound(model.size(), T, inf_rate);
    return {std::min(prob.sum, 1.0), bound, inf_rate};
}

/// Smallest T0 past which the guarantee ceiling (T + 1)^d exp(-r T) stays
/// at or below beta for every T >= T0. The ceiling rises until T + 1 = d/r
/// and decays afterwards, so scanning from the peak settles the tail; no
/// finite T works when r = 0.
inline std::optional<std::int64_t> sample_complexity(std::size_t d, double r, double beta) {
    if (!(beta > 0.0) || !std::isfinite(beta))
        throw InputError("sample_complexity: beta must be positive and finite");
    if (!(r >= 0.0) || !std::isfinite(r)) throw InputError("sample_complexity: bad rate");
    if (r == 0.0) return std::nullopt;
    const double log_beta = std::log(beta);
    const auto ok = [&](std::int64_t T) {
        return static_cast<double>(d) * std::log(static_cast<double>(T) + 1.0) -
                   r * static_cast<double>(T) <=
               log_beta;
    };
    // Continuous peak at T = d/r - 1; check its integer neighbors. If even
    // the peak clears beta the whole curve does, so T0 = 1.
    const std::int64_t near_peak = static_cast<std::int64_t>(
        std::floor(std::max(0.0, static_cast<double>(d) / r - 1.0)));
    std::int64_t peak = std::max<std::int64_t>(1, near_peak);
    bool peak_ok = true;
    for (std::int64_t T = std::max<std::int64_t>(1, near_peak - 1); T <= near_peak + 1; ++T) {
        if (!ok(T)) {
            peak_ok = false;
            peak = std::max(peak, T);
        }
    }
    if (peak_ok) return 1;
    std::int64_t lo = peak, hi = peak;
    std::int64_t span = 1;
    while (!ok(hi)) {
        lo = hi;
        hi += span;
        span *= 2;
        if (hi > (std::int64_t{1} << 52))
            throw InputError("sample_complexity: threshold unreachable below 2^52 samples");
    }
    while (lo + 1 < hi) {
        const std::int64_t mid = lo + (hi - lo) / 2;
        if (ok(mid))
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

}  // namespace relent
