#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "relent/conic.hpp"
#include "relent/divergence.hpp"
#include "relent/errors.hpp"
#include "relent/exact_ldp.hpp"
#include "relent/geometry.hpp"
#include "relent/io.hpp"
#include "relent/predictors.hpp"
#include "relent/simplex.hpp"

// Batch front end. Each command ingests files plus a RunConfig, produces a
// Report whose JSON body is deterministic for fixed inputs and seed, and
// writes CSV artifacts with shortest round-trip number formatting.

namespace relent {

/// Settings shared by the batch commands. Flag values override config-file
/// values; the config file is a flat JSON object using the keys documented
/// in load_config.
struct RunConfig {
    double rate = 0.1;                        // ball radius, nats per sample
    std::optional<Distribution> model;        // data-generating model for exact analyses
    std::int64_t t_min = 1;
    std::int64_t t_max = 60;
    std::int64_t t_step = 1;
    std::vector<std::string> kinds = {"sample-average", "dro"};
    std::int64_t resolution = 240;            // grid resolution for refinement scans
    double beta = 1e-3;                       // significance level for the sample-size display
    std::string out_dir;                      // empty: artifact files land in the working directory
    std::uint64_t seed = 2026;                // property-sampling seed only
    bool force = false;                       // bypass the enumeration budget refusal
    std::int64_t directions = 360;            // boundary rays per ball
    std::vector<double> event_coefficients;   // halfspace normal; empty selects the default event
    double event_threshold = 0.75;
    bool inject_fault = false;                // self-check: corrupt one certificate on purpose

    void validate() const {
        if (!(rate >= 0.0) || !std::isfinite(rate))
            throw InputError("config: rate must be finite and nonnegative");
        if (t_min < 1 || t_max < t_min || t_step < 1)
            throw InputError("config: need 1 <= tmin <= tmax and tstep >= 1");
        if (resolution < 1) throw InputError("config: grid resolution must be at least 1");
        if (!(beta > 0.0) || !std::isfinite(beta))
            throw InputError("config: beta must be positive and finite");
        if (directions < 1) throw InputError("config: directions must be at least 1");
        if (kinds.empty()) throw InputError("config: at least one predictor kind required");
    }
};

/// Machine-readable command outcome. `violations` counts failed certificate
/// checks and guarantee breaches; the CLI exits 2 when it is nonzero.
struct Report {
    nlohmann::ordered_json body;
    std::int64_t violations = 0;
};

inline PredictorKind parse_predictor_kind(const std::string& name, double rate) {
    if (name == "sample-average") return PredictorKind::sample_average();
    if (name == "dro") return PredictorKind::dro(rate);
    if (name == "reverse") return PredictorKind::reverse_dro(rate);
    if (name == "markowitz") return PredictorKind::markowitz(rate);
    if (name == "pearson") return PredictorKind::pearson(rate);
    throw InputError("unknown predictor kind '" + name +
                     "' (expected sample-average, dro, reverse, markowitz, or pearson)");
}

namespace detail {

inline std::vector<PredictorKind> resolve_kinds(const RunConfig& cfg) {
    std::vector<PredictorKind> kinds;
    for (const std::string& name : cfg.kinds) {
        const PredictorKind kind = parse_predictor_kind(name, cfg.rate);
        for (const PredictorKind& seen : kinds)
            if (seen.family == kind.family)
                throw InputError("config: duplicate predictor kind '" + name + "'");
        kinds.push_back(kind);
    }
    return kinds;
}

/// Finite reals travel as JSON numbers; infinities and NaN have no JSON
/// number form and travel as their round-trip strings instead.
inline nlohmann::ordered_json json_real(double x) {
    if (std::isfinite(x)) return x;
    return format_double(x);
}

inline nlohmann::ordered_json json_weights(const Distribution& p) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < p.size(); ++i) arr.push_back(p[i]);
    return arr;
}

inline std::string sanitize_filename(const std::string& name) {
    std::string out;
    for (char c : name) {
        const bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                          (c >= '0' && c <= '9') || c == '.' || c == '_' || c == '-';
        out.push_back(keep ? c : '-');
    }
    if (out.empty()) out = "decision";
    return out;
}

inline std::filesystem::path artifact_dir(const RunConfig& cfg) {
    std::filesystem::path dir = cfg.out_dir.empty() ? "." : cfg.out_dir;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw InputError("cannot create output directory '" + dir.string() + "'");
    return dir;
}

/// Reports are bit-identical across runs for fixed inputs; the trailing
/// newline makes the file a well-formed text file.
inline void write_report_file(const Report& report, const RunConfig& cfg) {
    if (cfg.out_dir.empty()) return;
    const std::filesystem::path path = artifact_dir(cfg) / "report.json";
    std::ofstream out(path);
    if (!out) throw InputError("cannot write report file '" + path.string() + "'");
    out << report.body.dump(2) << '\n';
}

inline nlohmann::ordered_json sample_complexity_block(std::size_t d, const RunConfig& cfg) {
    nlohmann::ordered_json block;
    block["beta"] = cfg.beta;
    const auto t0 = sample_complexity(d, cfg.rate, cfg.beta);
    block["t_zero"] = t0 ? nlohmann::ordered_json(*t0) : nlohmann::ordered_json(nullptr);
    return block;
}

inline nlohmann::ordered_json certificate_block(const DualCertificate& cert,
                                                const ConeCheckReport& check) {
    nlohmann::ordered_json block;
    block["mu"] = json_real(cert.mu);
    block["lambda"] = json_real(cert.lambda);
    block["primal_value"] = json_real(cert.primal_value);
    block["dual_value"] = json_real(cert.dual_value);
    block["kl_residual"] = json_real(cert.kl_residual);
    block["cone_ok"] = check.ok;
    block["budget_used"] = json_real(check.budget_used);
    block["objective_gap"] = json_real(check.objective_gap);
    if (!check.violations.empty()) block["cone_violations"] = check.violations;
    return block;
}

/// Guard shared by the enumeration commands: refuse jobs whose total type
/// count across the T range exceeds the budget, unless forced.
inline void check_enumeration_budget(std::size_t d, const RunConfig& cfg) {
    double total = 0.0;
    for (std::int64_t T = cfg.t_min; T <= cfg.t_max; T += cfg.t_step)
        total += composition_count(T, d);
    constexpr double kBudget = 1e7;
    if (total > kBudget && !cfg.force) {
        std::ostringstream msg;
        msg << "enumeration budget exceeded: the requested T range needs about " << total
            << " type classes, more than the " << kBudget
            << " budget; pass --force to run anyway";
        throw InputError(msg.str());
    }
}

inline Report predict_core(const RunConfig& cfg, const std::string& observations_path,
                           const std::string& costs_path, const char* command) {
    cfg.validate();
    const std::vector<PredictorKind> kinds = resolve_kinds(cfg);
    const std::vector<std::int64_t> observations = read_observations_file(observations_path);
    const CostMatrix costs = read_cost_matrix_file(costs_path);
    const std::size_t d = costs.scenarios();
    const Distribution p_emp = empirical_distribution(observations, d);

    Report report;
    nlohmann::ordered_json& body = report.body;
    body["schema"] = "dro-report/v1";
    body["command"] = command;
    body["d"] = d;
    body["sample_count"] = static_cast<std::int64_t>(observations.size());
    body["rate"] = cfg.rate;
    body["empirical"] = json_weights(p_emp);

    std::int64_t pearson_fallbacks = 0;
    nlohmann::ordered_json decisions = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < costs.decisions(); ++i) {
        const CostVector& g = costs.row(i);
        const double mean = sample_average(g, p_emp);
        nlohmann::ordered_json entry;
        entry["label"] = costs.label(i);
        nlohmann::ordered_json values, conservatism;
        for (const PredictorKind& kind : kinds) {
            const char* name = predictor_family_name(kind.family);
            if (kind.family == PredictorFamily::Dro) {
                const PredictorResult result = dro_predictor(g, p_emp, Rate(kind.rate));
                const ConeCheckReport check =
                    verify_exp_cone_solution(result.certificate, g, p_emp, Rate(kind.rate));
                if (!check.ok) ++report.violations;
                if (result.value - mean < -1e-10) ++report.violations;
                values[name] = json_real(result.value);
                conservatism[name] = json_real(result.value - mean);
                entry["certificate"] = certificate_block(result.certificate, check);
            } else {
                const double value = evaluate_predictor(kind, g, p_emp, &pearson_fallbacks);
                values[name] = json_real(value);
                conservatism[name] = json_real(value - mean);
            }
        }
        entry["values"] = std::move(values);
        entry["conservatism"] = std::move(conservatism);
        decisions.push_back(std::move(entry));
    }
    body["decisions"] = std::move(decisions);

    nlohmann::ordered_json prescriptions;
    for (const PredictorKind& kind : kinds) {
        const Prescription choice = prescribe(kind, costs, p_emp, &pearson_fallbacks);
        nlohmann::ordered_json entry;
        entry["decision"] = choice.label;
        entry["index"] = static_cast<std::int64_t>(choice.decision);
        entry["value"] = json_real(choice.value);
        prescriptions[predictor_family_name(kind.family)] = std::move(entry);
    }
    body["prescriptions"] = std::move(prescriptions);
    body["sample_complexity"] = sample_complexity_block(d, cfg);
    body["pearson_fallbacks"] = pearson_fallbacks;
    body["violations"] = report.violations;
    write_report_file(report, cfg);
    return report;
}

}  // namespace detail

/// Runs every requested predictor on every decision row of the cost table
/// against the empirical distribution of the observation file. Robust rows
/// carry replayed certificates; any failed replay marks the report violated.
inline Report cmd_predict(const RunConfig& cfg, const std::string& observations_path,
                          const std::string& costs_path) {
    return detail::predict_core(cfg, observations_path, costs_path, "predict");
}

/// Same pipeline as cmd_predict; the headline output is the recommended
/// decision per predictor kind rather than the value table.
inline Report cmd_prescribe(const RunConfig& cfg, const std::string& observations_path,
                            const std::string& costs_path) {
    return detail::predict_core(cfg, observations_path, costs_path, "prescribe");
}

/// Exact disappointment curves: for each decision row and kind, and for the
/// prescriptor of each kind, sweeps the T range by full type enumeration and
/// writes one CSV per curve. Guarantee-backed kinds (robust and sample
/// average) must stay under their ceiling; their excursions count as
/// violations. Other kinds may exceed the ceiling freely, which is the
/// comparison the curves exist to expose; their excursions are reported but
/// do not fail the run.
inline Report cmd_disappoint(const RunConfig& cfg, const std::string& costs_path) {
    cfg.validate();
    if (!cfg.model) throw InputError("disappoint: a model distribution is required");
    const std::vector<PredictorKind> kinds = detail::resolve_kinds(cfg);
    const CostMatrix costs = read_cost_matrix_file(costs_path);
    const Distribution& model = *cfg.model;
    if (costs.scenarios() != model.size())
        throw InputError("disappoint: cost table has " + std::to_string(costs.scenarios()) +
                         " scenarios but the model has " + std::to_string(model.size()));
    const std::size_t d = model.size();
    if (d > 4) throw InputError("disappoint: exact enumeration is guarded to d <= 4");
    if (cfg.t_max > 500) throw InputError("disappoint: exact enumeration is guarded to T <= 500");
    detail::check_enumeration_budget(d, cfg);

    const std::filesystem::path dir = detail::artifact_dir(cfg);
    Report report;
    nlohmann::ordered_json& body = report.body;
    body["schema"] = "dro-report/v1";
    body["command"] = "disappoint";
    body["d"] = d;
    body["rate"] = cfg.rate;
    body["model"] = detail::json_weights(model);
    body["t_range"] = {{"min", cfg.t_min}, {"max", cfg.t_max}, {"step", cfg.t_step}};

    std::int64_t guaranteed_violations = 0;
    nlohmann::ordered_json curves = nlohmann::ordered_json::array();
    const auto record = [&](const DisappointmentCurve& curve, const std::string& decision,
                            const std::string& stem) {
        const std::string file = stem + ".csv";
        write_curve_csv_file(curve, (dir / file).string());
        nlohmann::ordered_json entry;
        entry["decision"] = decision;
        entry["kind"] = predictor_family_name(curve.kind.family);
        entry["file"] = file;
        const std::int64_t excursions = curve.bound_violations();
        const bool guaranteed = curve.kind.family == PredictorFamily::Dro ||
                                curve.kind.family == PredictorFamily::SampleAverage;
        if (guaranteed) guaranteed_violations += excursions;
        entry["bound_excursions"] = excursions;
        entry["guarantee_backed"] = guaranteed;
        std::int64_t fallbacks = 0;
        for (const CurveEntry& e : curve.entries) fallbacks += e.pearson_fallbacks;
        entry["pearson_fallbacks"] = fallbacks;
        try {
            entry["fitted_decay_rate"] =
                detail::json_real(fit_decay_rate(curve, cfg.t_min, cfg.t_max));
        } catch (const FitError&) {
            entry["fitted_decay_rate"] = nullptr;
        }
        curves.push_back(std::move(entry));
    };

    for (std::size_t i = 0; i < costs.decisions(); ++i) {
        for (const PredictorKind& kind : kinds) {
            const DisappointmentCurve curve =
                disappointment_curve(kind, costs.row(i), model, cfg.t_min, cfg.t_max, cfg.t_step);
            record(curve, costs.label(i),
                   "curve_" + std::to_string(i + 1) + "_" +
                       detail::sanitize_filename(costs.label(i)) + "_" +
                       predictor_family_name(kind.family));
        }
    }
    for (const PredictorKind& kind : kinds) {
        const DisappointmentCurve curve =
            disappointment_curve(kind, costs, model, cfg.t_min, cfg.t_max, cfg.t_step);
        record(curve, "(prescriptor)",
               std::string("curve_prescriptor_") + predictor_family_name(kind.family));
    }

    report.violations = guaranteed_violations;
    body["curves"] = std::move(curves);
    body["bound_violations"] = guaranteed_violations;
    body["sample_complexity"] = detail::sample_complexity_block(d, cfg);
    body["violations"] = report.violations;
    detail::write_report_file(report, cfg);
    return report;
}

/// Exact tail probability of a halfspace event for the empirical
/// distribution, next to the ceiling built from the infimum divergence over
/// the event. With no coefficients configured the event defaults to
/// {P(1) >= threshold}. Any T whose exact probability exceeds the ceiling is
/// a violation.
inline Report cmd_sanov(const RunConfig& cfg) {
    cfg.validate();
    if (!cfg.model) throw InputError("sanov: a model distribution is required");
    const Distribution& model = *cfg.model;
    const std::size_t d = model.size();
    if (d > 4) throw InputError("sanov: exact enumeration is guarded to d <= 4");
    if (cfg.t_max > 500) throw InputError("sanov: exact enumeration is guarded to T <= 500");
    detail::check_enumeration_budget(d, cfg);

    HalfspaceEvent event{cfg.event_coefficients, cfg.event_threshold};
    if (event.coefficients.empty()) {
        event.coefficients.assign(d, 0.0);
        event.coefficients[0] = 1.0;
    }
    if (event.coefficients.size() != d)
        throw InputError("sanov: event has " + std::to_string(event.coefficients.size()) +
                         " coefficients but the model has " + std::to_string(d) + " scenarios");
    for (double a : event.coefficients)
        if (!std::isfinite(a)) throw InputError("sanov: event coefficients must be finite");
    if (!std::isfinite(cfg.event_threshold))
        throw InputError("sanov: event threshold must be finite");

    const std::filesystem::path dir = detail::artifact_dir(cfg);
    Report report;
    nlohmann::ordered_json& body = report.body;
    body["schema"] = "dro-report/v1";
    body["command"] = "sanov";
    body["d"] = d;
    body["model"] = detail::json_weights(model);
    body["event"] = {{"coefficients", event.coefficients},
                     {"threshold", cfg.event_threshold}};
    body["t_range"] = {{"min", cfg.t_min}, {"max", cfg.t_max}, {"step", cfg.t_step}};

    const std::string file = "sanov.csv";
    std::ofstream csv(dir / file);
    if (!csv) throw InputError("cannot write curve file '" + (dir / file).string() + "'");
    csv << "T,exact_probability,strong_bound,log_probability\n";

    std::int64_t violations = 0;
    double rate_infimum = std::numeric_limits<double>::infinity();
    double worst_margin = std::numeric_limits<double>::infinity();
    for (std::int64_t T = cfg.t_min; T <= cfg.t_max; T += cfg.t_step) {
        const SanovResult row = sanov_set_probability(model, T, event, cfg.resolution);
        rate_infimum = std::min(rate_infimum, row.rate_infimum);
        if (row.exact > row.rate_bound) ++violations;
        worst_margin = std::min(worst_margin, row.rate_bound - row.exact);
        csv << T << ',' << format_double(row.exact) << ',' << format_double(row.rate_bound)
            << ',' << format_double(std::log(row.exact)) << '\n';
    }

    report.violations = violations;
    body["file"] = file;
    body["rate_infimum"] = detail::json_real(rate_infimum);
    body["worst_margin"] = detail::json_real(worst_margin);
    body["bound_violations"] = violations;
    body["violations"] = report.violations;
    detail::write_report_file(report, cfg);
    return report;
}

namespace detail {

inline std::vector<Distribution> default_ball_centers() {
    return {Distribution::uniform(3),
            Distribution({14.0 / 18.0, 3.0 / 18.0, 1.0 / 18.0}),
            Distribution({2.0 / 36.0, 17.0 / 36.0, 17.0 / 36.0}),
            Distribution::point_mass(3, 0)};
}

/// Centers file: optional "p1,p2,p3" header, then one weight row per center.
inline std::vector<Distribution> read_centers_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open centers file '" + path + "'");
    std::vector<Distribution> centers;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty()) continue;
        if (line_no == 1 && t == "p1,p2,p3") continue;
        const auto cells = split_csv(t);
        if (cells.size() != 3)
            throw InputError("centers file line " + std::to_string(line_no) +
                             ": expected 3 weights, found " + std::to_string(cells.size()));
        std::vector<double> w;
        for (const std::string& cell : cells) {
            try {
                w.push_back(parse_double(cell));
            } catch (const InputError&) {
                throw InputError("centers file line " + std::to_string(line_no) +
                                 ": cannot parse weight '" + cell + "'");
            }
        }
        try {
            centers.emplace_back(std::move(w));
        } catch (const InputError& e) {
            throw InputError("centers file line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (centers.empty()) throw InputError("centers file '" + path + "' has no centers");
    return centers;
}

}  // namespace detail

/// Ternary plot data for divergence balls: for each center, the embedded
/// boundary polygon of {P : divergence from the center <= rate} and the two
/// level segments where the scenario-1 indicator cost meets its empirical
/// mean and its robust value. Centers default to one interior point, two
/// skewed points, and one vertex.
inline Report cmd_figure2(const RunConfig& cfg, const std::optional<std::string>& centers_path) {
    cfg.validate();
    if (!(cfg.rate > 0.0)) throw InputError("figure2: rate must be strictly positive");
    const std::vector<Distribution> centers =
        centers_path ? detail::read_centers_file(*centers_path) : detail::default_ball_centers();
    for (const Distribution& center : centers)
        if (center.size() != 3)
            throw InputError("figure2: centers must have exactly 3 scenarios");

    const CostVector indicator{1.0, 0.0, 0.0};
    const std::filesystem::path dir = detail::artifact_dir(cfg);
    Report report;
    nlohmann::ordered_json& body = report.body;
    body["schema"] = "dro-report/v1";
    body["command"] = "figure2";
    body["rate"] = cfg.rate;
    body["directions"] = cfg.directions;

    nlohmann::ordered_json center_entries = nlohmann::ordered_json::array();
    for (std::size_t c = 0; c < centers.size(); ++c) {
        const Distribution& center = centers[c];
        const std::vector<BoundaryPoint> boundary =
            ball_boundary(center, cfg.rate, static_cast<std::size_t>(cfg.directions));

        std::vector<PlotRow> ball_rows;
        double min_p1 = 1.0;
        for (const BoundaryPoint& bp : boundary) {
            ball_rows.push_back({ternary_embed(bp.point), bp.on_face ? "face" : "boundary"});
            min_p1 = std::min(min_p1, bp.point[0]);
        }
        const std::string ball_file = "ball_" + std::to_string(c + 1) + ".csv";
        write_plot_csv_file(ball_rows, (dir / ball_file).string());

        const PredictorResult robust = dro_predictor(indicator, center, Rate(cfg.rate));
        const ConeCheckReport check =
            verify_exp_cone_solution(robust.certificate, indicator, center, Rate(cfg.rate));
        if (!check.ok) ++report.violations;
        const double mean = sample_average(indicator, center);
        const double conservatism = robust.value - mean;
        if (conservatism < -1e-10) ++report.violations;

        // The indicator cost is constant on each line P(1) = level, so a
        // level set is the segment between the two face points with that
        // first coordinate.
        const auto level_segment = [](double level, const std::string& tag) {
            std::vector<PlotRow> rows;
            const Distribution a(Distribution::exact_t{}, {level, 1.0 - level, 0.0});
            const Distribution b(Distribution::exact_t{}, {level, 0.0, 1.0 - level});
            rows.push_back({ternary_embed(a), tag});
            rows.push_back({ternary_embed(b), tag});
            return rows;
        };
        std::vector<PlotRow> level_rows = level_segment(mean, "mean-level");
        const std::vector<PlotRow> robust_rows = level_segment(robust.value, "robust-level");
        level_rows.insert(level_rows.end(), robust_rows.begin(), robust_rows.end());
        const std::string levels_file = "levels_" + std::to_string(c + 1) + ".csv";
        write_plot_csv_file(level_rows, (dir / levels_file).string());

        nlohmann::ordered_json entry;
        entry["index"] = static_cast<std::int64_t>(c + 1);
        entry["center"] = detail::json_weights(center);
        entry["robust_value"] = detail::json_real(robust.value);
        entry["mean_value"] = detail::json_real(mean);
        entry["conservatism"] = detail::json_real(conservatism);
        entry["min_p1"] = detail::json_real(min_p1);
        entry["ball_file"] = ball_file;
        entry["levels_file"] = levels_file;
        entry["certificate"] = detail::certificate_block(robust.certificate, check);
        center_entries.push_back(std::move(entry));
    }

    body["centers"] = std::move(center_entries);
    body["violations"] = report.violations;
    detail::write_report_file(report, cfg);
    return report;
}

namespace detail {

struct SuiteResult {
    std::string name;
    std::int64_t cases = 0;
    std::int64_t failures = 0;
    double worst_residual = 0.0;
};

inline Distribution random_distribution(std::mt19937_64& rng, std::size_t d) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> w(d);
    double total = 0.0;
    for (double& x : w) {
        x = -std::log1p(-unit(rng));  // exponential draw, strictly positive
        total += x;
    }
    for (double& x : w) x /= total;
    return Distribution(Distribution::exact_t{}, std::move(w));
}

inline Distribution random_interior_distribution(std::mt19937_64& rng, std::size_t d) {
    const Distribution raw = random_distribution(rng, d);
    std::vector<double> w(d);
    const double floor_weight = 1.0 / static_cast<double>(d);
    for (std::size_t i = 0; i < d; ++i) w[i] = 0.7 * raw[i] + 0.3 * floor_weight;
    return Distribution(Distribution::exact_t{}, std::move(w));
}

inline CostVector random_costs(std::mt19937_64& rng, std::size_t d) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    CostVector g(d);
    for (double& x : g) x = unit(rng);
    return g;
}

inline Distribution random_type_distribution(std::mt19937_64& rng, std::size_t d,
                                             std::int64_t T) {
    std::uniform_int_distribution<std::size_t> pick(0, d - 1);
    std::vector<std::int64_t> counts(d, 0);
    for (std::int64_t k = 0; k < T; ++k) ++counts[pick(rng)];
    std::vector<double> w(d);
    for (std::size_t i = 0; i < d; ++i)
        w[i] = static_cast<double>(counts[i]) / static_cast<double>(T);
    return Distribution(Distribution::exact_t{}, std::move(w));
}

}  // namespace detail

/// Self-check command: runs the oracle and property suites and reports one
/// block per suite with case counts and the worst residual seen. Fails (exit
/// nonzero) exactly when a suite records failures; --inject-fault corrupts
/// one certificate on purpose to prove the replay catches it.
inline Report cmd_validate(const RunConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    std::vector<detail::SuiteResult> suites;

    // Dual solver versus the grid oracle, and certificate replays on the
    // same instances.
    {
        detail::SuiteResult agree{"dual-vs-grid"};
        detail::SuiteResult cones{"certificate-replay"};
        std::uniform_real_distribution<double> rate_draw(0.02, 0.5);
        const std::int64_t grid_m = 240;
        bool fault_pending = cfg.inject_fault;
        for (int n = 0; n < 50; ++n) {
            const CostVector g = detail::random_costs(rng, 3);
            const Distribution p = detail::random_distribution(rng, 3);
            const Rate r(rate_draw(rng));
            const PredictorResult result = dro_predictor(g, p, r);
            const BruteForceResult brute = dro_brute_force(g, p, r, grid_m);
            const double span =
                *std::max_element(g.begin(), g.end()) - *std::min_element(g.begin(), g.end());
            const double gap = std::abs(result.value - brute.value);
            ++agree.cases;
            agree.worst_residual = std::max(agree.worst_residual, gap);
            if (gap > span * 3.0 / static_cast<double>(grid_m) + 1e-9 ||
                brute.value > result.value + 1e-9)
                ++agree.failures;

            DualCertificate cert = result.certificate;
            if (fault_pending) {
                std::vector<double> w = cert.worst_case.weights();
                w[0] += 0.05;  // deliberately break the worst case
                cert.worst_case = Distribution(Distribution::exact_t{}, std::move(w));
                fault_pending = false;
            }
            const ConeCheckReport check = verify_exp_cone_solution(cert, g, p, r);
            ++cones.cases;
            cones.worst_residual = std::max(cones.worst_residual, check.objective_gap);
            if (!check.ok) ++cones.failures;
        }
        suites.push_back(agree);
        suites.push_back(cones);
    }

    // Small-radius behavior: the robust premium approaches sqrt(2r) times
    // the cost deviation, and the quadratic-ball value matches the
    // mean-deviation form whenever the quadratic optimizer stays interior.
    {
        detail::SuiteResult expansion{"small-radius-expansion"};
        std::uniform_int_distribution<std::size_t> dim_draw(2, 4);
        for (int n = 0; n < 30; ++n) {
            const std::size_t d = dim_draw(rng);
            const Distribution p = detail::random_interior_distribution(rng, d);
            CostVector g = detail::random_costs(rng, d);
            const double mean = sample_average(g, p);
            double var = 0.0;
            for (std::size_t i = 0; i < d; ++i) var += p[i] * (g[i] - mean) * (g[i] - mean);
            if (var < 1e-6) {
                g[0] += 0.5;  // degenerate spread would make the ratio meaningless
                const double m2 = sample_average(g, p);
                var = 0.0;
                for (std::size_t i = 0; i < d; ++i) var += p[i] * (g[i] - m2) * (g[i] - m2);
            }
            const double tiny = 1e-6;
            const double premium = dro_predictor(g, p, Rate(tiny)).value - sample_average(g, p);
            const double ratio = premium / (std::sqrt(2.0 * tiny) * std::sqrt(var));
            ++expansion.cases;
            expansion.worst_residual = std::max(expansion.worst_residual, std::abs(ratio - 1.0));
            if (std::abs(ratio - 1.0) > 0.03) ++expansion.failures;

            const double r_small = 1e-5;
            const double marko = markowitz_predictor(g, p, Rate(r_small));
            const double pears = pearson_predictor(g, p, Rate(r_small));
            const double mean_s = sample_average(g, p);
            bool interior = true;
            for (std::size_t i = 0; i < d; ++i) {
                const double step = std::sqrt(2.0 * r_small / var) * p[i] * (g[i] - mean_s);
                if (p[i] + step <= 0.0) interior = false;
            }
            if (interior) {
                ++expansion.cases;
                const double gap = std::abs(marko - pears);
                expansion.worst_residual = std::max(expansion.worst_residual, gap);
                if (gap > 1e-10) ++expansion.failures;
            }
        }
        suites.push_back(expansion);
    }

    // Type probabilities are a complete distribution over types, and the
    // enumeration size matches the closed-form count.
    {
        detail::SuiteResult types{"type-totality"};
        for (std::size_t d : {std::size_t{2}, std::size_t{3}}) {
            std::vector<Distribution> models{Distribution::uniform(d),
                                             detail::random_distribution(rng, d)};
            std::vector<double> boundary(d, 0.0);
            boundary[0] = 0.6;
            boundary[d - 1] = 0.4;
            models.emplace_back(std::move(boundary));
            for (std::int64_t T : {std::int64_t{1}, std::int64_t{5}, std::int64_t{17},
                                   std::int64_t{40}}) {
                for (const Distribution& model : models) {
                    detail::KahanSum total;
                    std::int64_t count = 0;
                    for_each_type(d, T, [&](const TypeClass& type) {
                        total.add(type_probability(type, model));
                        ++count;
                    });
                    const double residual = std::abs(total.sum - 1.0);
                    ++types.cases;
                    types.worst_residual = std::max(types.worst_residual, residual);
                    if (residual > 1e-12 ||
                        static_cast<double>(count) != composition_count(T, d))
                        ++types.failures;
                }
            }
        }
        suites.push_back(types);
    }

    // The geometric-mean certificate must agree with the divergence-ball
    // membership test away from the boundary band.
    {
        detail::SuiteResult socp{"ball-membership"};
        std::uniform_int_distribution<std::size_t> dim_draw(2, 4);
        std::uniform_int_distribution<std::int64_t> t_draw(1, 60);
        std::uniform_real_distribution<double> rate_draw(0.001, 1.0);
        for (int n = 0; n < 10000; ++n) {
            const std::size_t d = dim_draw(rng);
            const std::int64_t T = t_draw(rng);
            const Distribution center = detail::random_type_distribution(rng, d, T);
            const Distribution candidate = detail::random_distribution(rng, d);
            const double r = rate_draw(rng);
            const double kl = relative_entropy(center, candidate).nats;
            if (std::abs(kl - r) <= 1e-12) continue;
            const bool inside = kl <= r;
            const bool certified = geometric_mean_certificate(candidate, center, Rate(r), T);
            ++socp.cases;
            if (certified != inside) ++socp.failures;
        }
        suites.push_back(socp);
    }

    // The curvature of the log path probability must reproduce the
    // closed-form information matrix.
    {
        detail::SuiteResult fisher{"information-matrix"};
        std::uniform_int_distribution<std::size_t> dim_draw(2, 4);
        for (int n = 0; n < 20; ++n) {
            const std::size_t d = dim_draw(rng);
            const Distribution p = detail::random_interior_distribution(rng, d);
            const FisherMatrix closed = observed_fisher(p);
            const FisherMatrix numeric = fisher_from_path_hessian(p, 1000.0);
            double residual = 0.0;
            for (std::size_t i = 0; i < d; ++i)
                for (std::size_t j = 0; j < d; ++j) {
                    const double scale = 1.0 + std::abs(closed.at(i, j));
                    residual =
                        std::max(residual, std::abs(closed.at(i, j) - numeric.at(i, j)) / scale);
                }
            ++fisher.cases;
            fisher.worst_residual = std::max(fisher.worst_residual, residual);
            if (residual > 5e-4) ++fisher.failures;
        }
        suites.push_back(fisher);
    }

    Report report;
    nlohmann::ordered_json& body = report.body;
    body["schema"] = "dro-report/v1";
    body["command"] = "validate";
    body["seed"] = cfg.seed;
    body["fault_injected"] = cfg.inject_fault;
    nlohmann::ordered_json suite_entries = nlohmann::ordered_json::array();
    for (const detail::SuiteResult& s : suites) {
        report.violations += s.failures;
        nlohmann::ordered_json entry;
        entry["name"] = s.name;
        entry["cases"] = s.cases;
        entry["failures"] = s.failures;
        entry["worst_residual"] = detail::json_real(s.worst_residual);
        suite_entries.push_back(std::move(entry));
    }
    body["suites"] = std::move(suite_entries);
    body["all_pass"] = report.violations == 0;
    body["violations"] = report.violations;
    detail::write_report_file(report, cfg);
    return report;
}

/// Loads a flat JSON config object. Documented keys: rate, model, tmin,
/// tmax, tstep, kinds, grid, beta, out, seed, force, directions,
/// event_coefficients, event_threshold, inject_fault. Unknown keys are
/// rejected so typos cannot silently fall back to defaults.
inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InputError("config file '" + path + "': " + e.what());
    }
    if (!j.is_object()) throw InputError("config file '" + path + "': expected a JSON object");

    RunConfig cfg;
    for (const auto& [key, value] : j.items()) {
        try {
            if (key == "rate") {
                cfg.rate = value.get<double>();
            } else if (key == "model") {
                cfg.model = Distribution(value.get<std::vector<double>>());
            } else if (key == "tmin") {
                cfg.t_min = value.get<std::int64_t>();
            } else if (key == "tmax") {
                cfg.t_max = value.get<std::int64_t>();
            } else if (key == "tstep") {
                cfg.t_step = value.get<std::int64_t>();
            } else if (key == "kinds") {
                cfg.kinds = value.get<std::vector<std::string>>();
            } else if (key == "grid") {
                cfg.resolution = value.get<std::int64_t>();
            } else if (key == "beta") {
                cfg.beta = value.get<double>();
            } else if (key == "out") {
                cfg.out_dir = value.get<std::string>();
            } else if (key == "seed") {
                cfg.seed = value.get<std::uint64_t>();
            } else if (key == "force") {
                cfg.force = value.get<bool>();
            } else if (key == "directions") {
                cfg.directions = value.get<std::int64_t>();
            } else if (key == "event_coefficients") {
                cfg.event_coefficients = value.get<std::vector<double>>();
            } else if (key == "event_threshold") {
                cfg.event_threshold = value.get<double>();
            } else if (key == "inject_fault") {
                cfg.inject_fault = value.get<bool>();
            } else {
                throw InputError("config file '" + path + "': unknown key '" + key + "'");
            }
        } catch (const nlohmann::json::exception& e) {
            throw InputError("config file '" + path + "', key '" + key + "': " + e.what());
        }
    }
    return cfg;
}

}  // namespace relent
