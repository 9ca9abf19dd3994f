#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "relent/divergence.hpp"
#include "relent/errors.hpp"
#include "relent/predictors.hpp"
#include "relent/simplex.hpp"

namespace relent {

/// Shortest decimal string that parses back to the identical double, so
/// serialized problems and CSV exports round-trip bit-exactly.
inline std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    double out = 0.0;
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    const auto res = std::from_chars(begin, end, out);
    if (res.ec != std::errc{} || res.ptr != end)
        throw InputError("parse_double: cannot parse '" + s + "'");
    return out;
}

/// A point of the exponential cone
/// {(x,y,z) : z > 0, z exp(x/z) <= y} union {(x,y,z) : x <= 0, y >= 0, z = 0}.
struct ExpConePoint {
    double x;
    double y;
    double z;
};

/// Membership test with additive slack tol on each defining inequality.
/// The z > 0 branch is evaluated in log-domain (x/z <= log(y/z)) so extreme
/// magnitudes cannot overflow; z < 0 is never a member.
inline bool exp_cone_member(const ExpConePoint& pt, double tol = 1e-9) {
    if (pt.z < 0.0) return false;
    if (pt.z > 0.0 && pt.y > 0.0 &&
        pt.x / pt.z <= std::log(pt.y / pt.z) + tol)
        return true;
    return pt.z <= tol && pt.x <= tol && pt.y >= -tol;
}

/// Conic statement of the robust prediction problem, in one of two forms:
/// d exponential-cone blocks with an entropy budget row, or a single
/// geometric-mean inequality available when the center is a type of some T.
struct ConicProblem {
    enum class Form { ExponentialCone, GeometricMeanSocp };

    Form form;
    std::size_t d;
    double r;
    CostVector objective;
    std::vector<double> p_prime;
    std::optional<std::int64_t> T;             // geometric-mean form only
    std::optional<double> center_entropy;      // geometric-mean form only

    bool operator==(const ConicProblem&) const = default;
};

inline ConicProblem build_exp_cone_problem(const CostVector& g, const Distribution& p_emp,
                                           Rate rate) {
    check_cost_vector(g);
    if (g.size() != p_emp.size())
        throw InputError("build_exp_cone_problem: dimension mismatch");
    return {ConicProblem::Form::ExponentialCone, g.size(), rate.value, g,
            p_emp.weights(),  std::nullopt,      std::nullopt};
}

namespace detail {

inline std::vector<std::int64_t> type_counts_of(const Distribution& p, std::int64_t T) {
    if (T < 1) throw InputError("type check: T must be at least 1");
    std::vector<std::int64_t> counts(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double scaled = p[i] * static_cast<double>(T);
        const double rounded = std::round(scaled);
        if (std::abs(scaled - rounded) > 1e-9)
            throw InputError("center is not a type of T = " + std::to_string(T) +
                             ": weight " + std::to_string(i + 1) + " times T is not an integer");
        counts[i] = static_cast<std::int64_t>(rounded);
    }
    return counts;
}

}  // namespace detail

/// Geometric-mean form. Requires the center's weights to be exact multiples
/// of 1/T; records T and the center's entropy to full precision. The O(T)
/// expansion of the geometric mean into three-term second-order cones is a
/// documented extension point, not performed here: this module checks
/// certificates, it does not run an interior-point method.
inline ConicProblem build_socp_problem(const CostVector& g, const Distribution& p_emp,
                                       Rate rate, std::int64_t T) {
    check_cost_vector(g);
    if (g.size() != p_emp.size()) throw InputError("build_socp_problem: dimension mismatch");
    detail::type_counts_of(p_emp, T);  // validates
    return {ConicProblem::Form::GeometricMeanSocp, g.size(), rate.value, g,
            p_emp.weights(),  T,           entropy(p_emp)};
}

/// Report of a certificate check: every violated constraint, by name, with
/// its residual.
struct ConeCheckReport {
    bool ok;
    double budget_used;
    double objective_gap;
    std::vector<std::string> violations;
};

/// Replays a dual certificate against the exponential-cone statement: builds
/// q(i) = p'(i) log(p'(i)/p(i)) from the certified worst case, checks each
/// triple (-q(i), p(i), p'(i)) for cone membership, the budget sum q <= r,
/// and that the certified value prices the worst case correctly.
inline ConeCheckReport verify_exp_cone_solution(const DualCertificate& cert, const CostVector& g,
                                                const Distribution& p_emp, Rate rate,
                                                double tol = 1e-9) {
    check_cost_vector(g);
    const std::size_t d = g.size();
    if (p_emp.size() != d || cert.worst_case.size() != d)
        throw InputError("verify_exp_cone_solution: dimension mismatch");
    ConeCheckReport report{true, 0.0, 0.0, {}};
    if (std::abs(cert.worst_case.sum() - 1.0) > tol) {
        report.ok = false;
        report.violations.push_back("mass: worst case sums to " +
                                    format_double(cert.worst_case.sum()));
    }
    double budget = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        const double ref = p_emp[i];
        const double w = cert.worst_case[i];
        double q = 0.0;
        if (ref > 0.0)
            q = (w == 0.0) ? std::numeric_limits<double>::infinity()
                           : ref * std::log(ref / w);
        budget += q;
        if (!exp_cone_member({-q, w, ref}, tol)) {
            report.ok = false;
            report.violations.push_back("cone block " + std::to_string(i + 1) +
                                        ": (-q, p, p') = (" + format_double(-q) + ", " +
                                        format_double(w) + ", " + format_double(ref) + ")");
        }
    }
    report.budget_used = budget;
    if (!(budget <= rate.value + tol)) {
        report.ok = false;
        report.violations.push_back("entropy budget: sum q = " + format_double(budget) +
                                    " exceeds r = " + format_double(rate.value));
    }
    const double priced = expected_cost(g, cert.worst_case);
    report.objective_gap = priced - cert.primal_value;
    if (std::abs(report.objective_gap) > tol) {
        report.ok = false;
        report.violations.push_back("objective: certified " + format_double(cert.primal_value) +
                                    " but worst case prices at " + format_double(priced));
    }
    return report;
}

/// Evaluates the geometric-mean inequality
/// (prod p(i)^(T p'(i)))^(1/T) >= exp(-(r + H(p'))) in log-domain. Agrees
/// with the divergence ball test I(p', p) <= r on every input; the two sides
/// are the same inequality after taking logs and dividing by T.
inline bool geometric_mean_certificate(const Distribution& p, const Distribution& p_emp,
                                       Rate rate, std::int64_t T) {
    if (p.size() != p_emp.size())
        throw InputError("geometric_mean_certificate: dimension mismatch");
    detail::type_counts_of(p_emp, T);  // validates the center is a type
    double lhs = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p_emp[i] == 0.0) continue;
        if (p[i] == 0.0) return false;  // geometric mean collapses to zero
        lhs += p_emp[i] * std::log(p[i]);
    }
    return lhs >= -(rate.value + entropy(p_emp));
}

/// JSON serialization of a conic problem, schema "dro-conic/v1". All reals
/// travel as decimal strings produced by format_double, so a parse of the
/// output reproduces the problem bit for bit.
inline std::string serialize_problem(const ConicProblem& problem) {
    nlohmann::ordered_json j;
    j["schema"] = "dro-conic/v1";
    j["form"] = problem.form == ConicProblem::Form::ExponentialCone ? "exponential_cone"
                                                                    : "geometric_mean_socp";
    j["d"] = problem.d;
    if (problem.T) j["T"] = *problem.T;
    j["r"] = format_double(problem.r);
    nlohmann::ordered_json obj = nlohmann::ordered_json::array();
    for (const double x : problem.objective) obj.push_back(format_double(x));
    j["objective"] = std::move(obj);
    nlohmann::ordered_json pp = nlohmann::ordered_json::array();
    for (const double x : problem.p_prime) pp.push_back(format_double(x));
    j["p_prime"] = std::move(pp);
    if (problem.center_entropy) j["entropy"] = format_double(*problem.center_entropy);

    // Structural constraint listing: one simplex block, then either the
    // budget row plus d cone blocks or the single geometric-mean row.
    nlohmann::ordered_json cons = nlohmann::ordered_json::array();
    cons.push_back({{"kind", "simplex"}, {"dim", problem.d}});
    if (problem.form == ConicProblem::Form::ExponentialCone) {
        cons.push_back({{"kind", "budget"}, {"bound", format_double(problem.r)}});
        for (std::size_t i = 0; i < problem.d; ++i)
            cons.push_back({{"kind", "exp_cone"},
                            {"scenario", i + 1},
                            {"triple", {"-q", "p", format_double(problem.p_prime[i])}}});
    } else {
        std::vector<std::int64_t> expo(problem.d);
        for (std::size_t i = 0; i < problem.d; ++i)
            expo[i] = static_cast<std::int64_t>(
                std::round(problem.p_prime[i] * static_cast<double>(*problem.T)));
        cons.push_back(
            {{"kind", "geometric_mean"},
             {"exponents", expo},
             {"lower_bound", format_double(std::exp(-(problem.r + *problem.center_entropy)))}});
    }
    j["constraints"] = std::move(cons);
    return j.dump(2);
}

inline ConicProblem parse_problem(const std::string& text) {
    nlohmann::ordered_json j;
    try {
        j = nlohmann::ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("parse_problem: invalid JSON: ") + e.what());
    }
    try {
        if (j.at("schema").get<std::string>() != "dro-conic/v1")
            throw InputError("parse_problem: unsupported schema");
        ConicProblem p;
        const std::string form = j.at("form").get<std::string>();
        if (form == "exponential_cone")
            p.form = ConicProblem::Form::ExponentialCone;
        else if (form == "geometric_mean_socp")
            p.form = ConicProblem::Form::GeometricMeanSocp;
        else
            throw InputError("parse_problem: unknown form '" + form + "'");
        p.d = j.at("d").get<std::size_t>();
        p.r = parse_double(j.at("r").get<std::string>());
        for (const auto& x : j.at("objective"))
            p.objective.push_back(parse_double(x.get<std::string>()));
        for (const auto& x : j.at("p_prime"))
            p.p_prime.push_back(parse_double(x.get<std::string>()));
        if (j.contains("T")) p.T = j.at("T").get<std::int64_t>();
        if (j.contains("entropy")) p.center_entropy = parse_double(j.at("entropy").get<std::string>());
        if (p.objective.size() != p.d || p.p_prime.size() != p.d)
            throw InputError("parse_problem: vector lengths disagree with d");
        if ((p.form == ConicProblem::Form::GeometricMeanSocp) != p.T.has_value())
            throw InputError("parse_problem: T is required exactly for the geometric-mean form");
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("parse_problem: malformed document: ") + e.what());
    }
}

}  // namespace relent
