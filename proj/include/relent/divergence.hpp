#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "relent/errors.hpp"
#include "relent/simplex.hpp"

namespace relent {

/// A divergence value in nats. +infinity is a legitimate state (reference mass
/// on an impossible scenario), never an overflow artifact; NaN never escapes.
struct Divergence {
    double nats;

    bool finite() const { return std::isfinite(nats); }
    static Divergence infinite() { return {std::numeric_limits<double>::infinity()}; }
};

namespace detail {
// Sums can land at -1e-17 through rounding even though the quantity is
// provably nonnegative; snap those to zero, let anything worse surface.
inline double clamp_tiny_negative(double x) {
    return (x < 0.0 && x > -1e-12) ? 0.0 : x;
}
}  // namespace detail

/// Relative entropy I(p_ref, p) = sum p_ref(i) log(p_ref(i)/p(i)) in nats,
/// with the conventions 0 log(0/q) = 0 and q log(q/0) = +infinity. Evaluated
/// in log-domain term by term; infinite exactly when p_ref charges a scenario
/// that p rules out.
inline Divergence relative_entropy(const Distribution& p_ref, const Distribution& p) {
    if (p_ref.size() != p.size())
        throw InputError("relative_entropy: distribution sizes differ");
    double acc = 0.0;
    for (std::size_t i = 0; i < p_ref.size(); ++i) {
        const double a = p_ref[i];
        if (a == 0.0) continue;
        const double b = p[i];
        if (b == 0.0) return Divergence::infinite();
        acc += a * std::log(a / b);
    }
    return {detail::clamp_tiny_negative(acc)};
}

/// Shannon entropy in nats, in [0, log d].
inline double entropy(const Distribution& p) {
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double a = p[i];
        if (a > 0.0) acc -= a * std::log(a);
    }
    return detail::clamp_tiny_negative(acc);
}

/// Pearson divergence chi2(p_ref, p) = sum (p_ref(i) - p(i))^2 / p_ref(i).
/// Requires a strictly positive reference.
inline Divergence pearson_divergence(const Distribution& p_ref, const Distribution& p) {
    if (p_ref.size() != p.size())
        throw InputError("pearson_divergence: distribution sizes differ");
    if (!p_ref.strictly_positive())
        throw DomainError("pearson_divergence: reference must be strictly positive");
    double acc = 0.0;
    for (std::size_t i = 0; i < p_ref.size(); ++i) {
        const double diff = p_ref[i] - p[i];
        acc += diff * diff / p_ref[i];
    }
    return {acc};
}

/// Dense symmetric d-by-d matrix, row major. Small d only.
struct FisherMatrix {
    std::size_t d;
    std::vector<double> entries;

    double at(std::size_t i, std::size_t j) const { return entries[i * d + j]; }
};

/// Observed Fisher information of the categorical model at p_ref:
/// diag(1/p_ref(i)). Requires a strictly positive reference.
inline FisherMatrix observed_fisher(const Distribution& p_ref) {
    if (!p_ref.strictly_positive())
        throw DomainError("observed_fisher: reference must be strictly positive");
    const std::size_t d = p_ref.size();
    FisherMatrix f{d, std::vector<double>(d * d, 0.0)};
    for (std::size_t i = 0; i < d; ++i) f.entries[i * d + i] = 1.0 / p_ref[i];
    return f;
}

/// Independent check of observed_fisher: -(1/T) times the Hessian of the
/// log-likelihood of a length-T sample with empirical frequencies p_ref,
/// namely f(p) = T sum p_ref(i) log p(i), by central finite differences in
/// unconstrained coordinates at p = p_ref. Agrees with diag(1/p_ref) to
/// O(step^2).
inline FisherMatrix fisher_from_path_hessian(const Distribution& p_ref, double T,
                                             double step = 1e-4) {
    if (!p_ref.strictly_positive())
        throw DomainError("fisher_from_path_hessian: reference must be strictly positive");
    if (!(T > 0.0)) throw InputError("fisher_from_path_hessian: T must be positive");
    if (!(step > 0.0)) throw InputError("fisher_from_path_hessian: step must be positive");
    const std::size_t d = p_ref.size();
    const auto log_path = [&](const std::vector<double>& p) {
        double acc = 0.0;
        for (std::size_t i = 0; i < d; ++i) acc += p_ref[i] * std::log(p[i]);
        return T * acc;
    };
    std::vector<double> base = p_ref.weights();
    FisherMatrix f{d, std::vector<double>(d * d, 0.0)};
    const double f0 = log_path(base);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i; j < d; ++j) {
            double h;
            if (i == j) {
                std::vector<double> p = base;
                p[i] = base[i] + step;
                const double fp = log_path(p);
                p[i] = base[i] - step;
                const double fm = log_path(p);
                h = (fp - 2.0 * f0 + fm) / (step * step);
            } else {
                std::vector<double> p = base;
                p[i] = base[i] + step; p[j] = base[j] + step;
                const double fpp = log_path(p);
                p[j] = base[j] - step;
                const double fpm = log_path(p);
                p[i] = base[i] - step; p[j] = base[j] + step;
                const double fmp = log_path(p);
                p[j] = base[j] - step;
                const double fmm = log_path(p);
                h = (fpp - fpm - fmp + fmm) / (4.0 * step * step);
            }
            const double v = -h / T;
            f.entries[i * d + j] = v;
            f.entries[j * d + i] = v;
        }
    }
    return f;
}

/// Relative entropy next to its second-order model around p_ref:
/// quad = (1/2)(p - p_ref)^T diag(1/p_ref)(p - p_ref), gap = kl - quad.
/// The gap is o(|p - p_ref|^2) as p approaches p_ref.
struct TaylorGap {
    double kl;
    double quad;
    double gap;
};

inline TaylorGap taylor_gap(const Distribution& p_ref, const Distribution& p) {
    if (!p_ref.strictly_positive())
        throw DomainError("taylor_gap: reference must be strictly positive");
    const double kl = relative_entropy(p_ref, p).nats;
    const double quad = 0.5 * pearson_divergence(p_ref, p).nats;
    return {kl, quad, kl - quad};
}

}  // namespace relent
