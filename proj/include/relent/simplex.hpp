#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "relent/errors.hpp"

namespace relent {

/// A probability vector over d scenarios. Weights are nonnegative and sum to
/// one within 1e-12. Constructors renormalize inputs whose total deviates from
/// one by at most 1e-9 and reject anything worse, so downstream code never has
/// to re-validate.
class Distribution {
  public:
    /// Validating constructor. Renormalizes a sum deviation up to 1e-9,
    /// rejects larger deviations, negative weights, and nonfinite entries.
    explicit Distribution(std::vector<double> weights) : w_(std::move(weights)) {
        if (w_.empty()) throw InputError("Distribution: needs at least one scenario");
        double total = 0.0;
        for (std::size_t i = 0; i < w_.size(); ++i) {
            const double wi = w_[i];
            if (!std::isfinite(wi))
                throw InputError("Distribution: weight " + std::to_string(i + 1) + " is not finite");
            if (wi < 0.0)
                throw InputError("Distribution: weight " + std::to_string(i + 1) + " is negative");
            total += wi;
        }
        if (std::abs(total - 1.0) > 1e-9)
            throw InputError("Distribution: weights sum to " + std::to_string(total) +
                             ", more than 1e-9 away from 1");
        if (total != 1.0) {
            for (double& wi : w_) wi /= total;
        }
    }

    /// Trusted constructor for weights already known to sum to one within
    /// 1e-12 (exact count ratios, grid points). Skips renormalization so the
    /// stored weights are bit-identical to what the caller computed.
    struct exact_t {};
    Distribution(exact_t, std::vector<double> weights) : w_(std::move(weights)) {}

    static Distribution uniform(std::size_t d) {
        if (d == 0) throw InputError("Distribution::uniform: d must be positive");
        return Distribution(exact_t{}, std::vector<double>(d, 1.0 / static_cast<double>(d)));
    }

    static Distribution point_mass(std::size_t d, std::size_t index) {
        if (index >= d) throw InputError("Distribution::point_mass: index out of range");
        std::vector<double> w(d, 0.0);
        w[index] = 1.0;
        return Distribution(exact_t{}, std::move(w));
    }

    std::size_t size() const { return w_.size(); }
    double operator[](std::size_t i) const { return w_[i]; }
    const std::vector<double>& weights() const { return w_; }

    bool strictly_positive() const {
        return std::all_of(w_.begin(), w_.end(), [](double x) { return x > 0.0; });
    }

    double sum() const { return std::accumulate(w_.begin(), w_.end(), 0.0); }

  private:
    std::vector<double> w_;
};

/// Costs for one decision across d scenarios.
using CostVector = std::vector<double>;

inline void check_cost_vector(const CostVector& g) {
    if (g.empty()) throw InputError("cost vector: needs at least one scenario");
    for (std::size_t i = 0; i < g.size(); ++i)
        if (!std::isfinite(g[i]))
            throw InputError("cost vector: entry " + std::to_string(i + 1) + " is not finite");
}

/// Decision-by-scenario cost table with one label per decision row.
class CostMatrix {
  public:
    CostMatrix(std::vector<std::string> labels, std::vector<CostVector> rows)
        : labels_(std::move(labels)), rows_(std::move(rows)) {
        if (rows_.empty()) throw InputError("CostMatrix: needs at least one decision row");
        if (labels_.size() != rows_.size())
            throw InputError("CostMatrix: label count does not match row count");
        const std::size_t d = rows_.front().size();
        for (const CostVector& row : rows_) {
            if (row.size() != d) throw InputError("CostMatrix: rows have inconsistent widths");
            check_cost_vector(row);
        }
    }

    std::size_t decisions() const { return rows_.size(); }
    std::size_t scenarios() const { return rows_.front().size(); }
    const CostVector& row(std::size_t i) const { return rows_[i]; }
    const std::string& label(std::size_t i) const { return labels_[i]; }

  private:
    std::vector<std::string> labels_;
    std::vector<CostVector> rows_;
};

/// Expected cost of one decision under P: the dot product of its cost vector
/// with the scenario weights, summed in fixed index order for determinism.
inline double expected_cost(const CostVector& g, const Distribution& p) {
    check_cost_vector(g);
    if (g.size() != p.size())
        throw InputError("expected_cost: cost vector and distribution sizes differ");
    double acc = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * p[i];
    return acc;
}

/// Empirical distribution of 1-based scenario ids. Weights are the exact
/// count ratios count/T, with no renormalization drift.
inline Distribution empirical_distribution(const std::vector<std::int64_t>& observations,
                                           std::size_t d) {
    if (d == 0) throw InputError("empirical_distribution: d must be positive");
    if (observations.empty())
        throw InputError("empirical_distribution: at least one observation required");
    std::vector<std::int64_t> counts(d, 0);
    for (std::size_t k = 0; k < observations.size(); ++k) {
        const std::int64_t id = observations[k];
        if (id < 1 || id > static_cast<std::int64_t>(d))
            throw InputError("empirical_distribution: observation " + std::to_string(k + 1) +
                             " has scenario id " + std::to_string(id) + " outside 1.." +
                             std::to_string(d));
        ++counts[static_cast<std::size_t>(id - 1)];
    }
    const double T = static_cast<double>(observations.size());
    std::vector<double> w(d);
    for (std::size_t i = 0; i < d; ++i) w[i] = static_cast<double>(counts[i]) / T;
    return Distribution(Distribution::exact_t{}, std::move(w));
}

/// Visits every vector of nonnegative integers of length d summing to total,
/// in lexicographically decreasing order starting from (total, 0, ..., 0).
/// One shared enumeration backs both grid points and type counts.
template <typename Fn>
inline void for_each_composition(std::int64_t total, std::size_t d, Fn&& fn) {
    if (d == 0) throw InputError("for_each_composition: d must be positive");
    if (total < 0) throw InputError("for_each_composition: total must be nonnegative");
    std::vector<std::int64_t> c(d, 0);
    c[0] = total;
    for (;;) {
        fn(static_cast<const std::vector<std::int64_t>&>(c));
        if (d == 1 || c[d - 1] == total) return;
        // Find the rightmost movable coordinate before the last slot.
        std::size_t i = d - 2;
        while (c[i] == 0) --i;
        const std::int64_t tail = c[d - 1];
        c[d - 1] = 0;
        --c[i];
        c[i + 1] = tail + 1;
    }
}

/// Number of compositions of total into d parts: C(total + d - 1, d - 1),
/// computed as a double so callers can budget-check huge enumerations
/// without overflow.
inline double composition_count(std::int64_t total, std::size_t d) {
    if (d == 0) throw InputError("composition_count: d must be positive");
    if (total < 0) throw InputError("composition_count: total must be nonnegative");
    double out = 1.0;
    for (std::size_t j = 1; j < d; ++j)
        out *= static_cast<double>(total + static_cast<std::int64_t>(j)) / static_cast<double>(j);
    return std::round(out) >= 9e15 ? out : std::round(out);
}

/// The simplex lattice of resolution m: all distributions whose weights are
/// integer multiples of 1/m.
struct SimplexGrid {
    std::size_t d;
    std::int64_t resolution;

    SimplexGrid(std::size_t d_, std::int64_t resolution_) : d(d_), resolution(resolution_) {
        if (d == 0) throw InputError("SimplexGrid: d must be positive");
        if (resolution < 1) throw InputError("SimplexGrid: resolution must be at least 1");
    }

    double size() const { return composition_count(resolution, d); }
};

/// Streams every grid point exactly once, as exact count ratios.
template <typename Fn>
inline void for_each_grid_point(const SimplexGrid& grid, Fn&& fn) {
    const double m = static_cast<double>(grid.resolution);
    std::vector<double> w(grid.d);
    for_each_composition(grid.resolution, grid.d, [&](const std::vector<std::int64_t>& counts) {
        for (std::size_t i = 0; i < grid.d; ++i) w[i] = static_cast<double>(counts[i]) / m;
        fn(Distribution(Distribution::exact_t{}, w));
    });
}

/// Materializes the whole lattice. Prefer for_each_grid_point for large grids.
inline std::vector<Distribution> grid_enumerate(const SimplexGrid& grid) {
    std::vector<Distribution> out;
    out.reserve(static_cast<std::size_t>(grid.size()));
    for_each_grid_point(grid, [&](const Distribution& p) { out.push_back(p); });
    return out;
}

}  // namespace relent
