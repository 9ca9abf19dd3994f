// Command line front end. Subcommands: predict, prescribe, disappoint,
// sanov, figure2, validate. Each accepts an optional JSON config file plus
// flag overrides; flags win. Exit codes: 0 success, 1 input error, 2
// certificate or bound violation.

#include <relent/commands.hpp>

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

// Flag values parsed per subcommand; only the ones the user actually set
// overwrite the config-file values.
struct Overrides {
    std::optional<std::string> config;
    std::optional<double> rate;
    std::optional<std::string> model;
    std::optional<std::int64_t> t_min, t_max, t_step;
    std::optional<std::string> kinds;
    std::optional<std::int64_t> grid;
    std::optional<double> beta;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    bool force = false;
    std::optional<std::int64_t> directions;
    std::optional<std::string> event_coefficients;
    std::optional<double> event_threshold;
    bool inject_fault = false;
};

std::vector<double> parse_double_list(const std::string& text, const char* what) {
    std::vector<double> values;
    for (const std::string& cell : relent::detail::split_csv(text)) {
        try {
            values.push_back(relent::parse_double(cell));
        } catch (const relent::InputError&) {
            throw relent::InputError(std::string(what) + ": cannot parse '" + cell + "'");
        }
    }
    if (values.empty()) throw relent::InputError(std::string(what) + ": empty list");
    return values;
}

std::vector<std::string> parse_kind_list(const std::string& text) {
    std::vector<std::string> kinds;
    for (const std::string& cell : relent::detail::split_csv(text))
        if (!cell.empty()) kinds.push_back(cell);
    if (kinds.empty()) throw relent::InputError("--kinds: empty list");
    return kinds;
}

void add_common_options(CLI::App* cmd, Overrides& ov) {
    cmd->add_option("--config", ov.config, "JSON config file; flags override its values");
    cmd->add_option("--rate", ov.rate, "ball radius in nats per sample");
    cmd->add_option("--model", ov.model, "model weights, comma separated");
    cmd->add_option("--tmin", ov.t_min, "first sample size");
    cmd->add_option("--tmax", ov.t_max, "last sample size");
    cmd->add_option("--tstep", ov.t_step, "sample size stride");
    cmd->add_option("--kinds", ov.kinds,
                    "comma separated predictor kinds "
                    "(sample-average, dro, reverse, markowitz, pearson)");
    cmd->add_option("--grid", ov.grid, "simplex grid resolution for refinement scans");
    cmd->add_option("--beta", ov.beta, "significance level for the sample-size display");
    cmd->add_option("--out", ov.out, "output directory for reports and CSV files");
    cmd->add_option("--seed", ov.seed, "seed for property sampling");
    cmd->add_flag("--force", ov.force, "bypass the enumeration budget refusal");
    cmd->add_option("--directions", ov.directions, "boundary rays per ball");
    cmd->add_option("--event-coefficients", ov.event_coefficients,
                    "halfspace normal, comma separated");
    cmd->add_option("--event-threshold", ov.event_threshold, "halfspace threshold");
    cmd->add_flag("--inject-fault", ov.inject_fault,
                  "corrupt one certificate to exercise the replay check");
}

relent::RunConfig build_config(const Overrides& ov) {
    relent::RunConfig cfg;
    if (ov.config) cfg = relent::load_config(*ov.config);
    if (ov.rate) cfg.rate = *ov.rate;
    if (ov.model) cfg.model = relent::Distribution(parse_double_list(*ov.model, "--model"));
    if (ov.t_min) cfg.t_min = *ov.t_min;
    if (ov.t_max) cfg.t_max = *ov.t_max;
    if (ov.t_step) cfg.t_step = *ov.t_step;
    if (ov.kinds) cfg.kinds = parse_kind_list(*ov.kinds);
    if (ov.grid) cfg.resolution = *ov.grid;
    if (ov.beta) cfg.beta = *ov.beta;
    if (ov.out) cfg.out_dir = *ov.out;
    if (ov.seed) cfg.seed = *ov.seed;
    if (ov.force) cfg.force = true;
    if (ov.directions) cfg.directions = *ov.directions;
    if (ov.event_coefficients)
        cfg.event_coefficients = parse_double_list(*ov.event_coefficients, "--event-coefficients");
    if (ov.event_threshold) cfg.event_threshold = *ov.event_threshold;
    if (ov.inject_fault) cfg.inject_fault = true;
    return cfg;
}

int finish(const relent::Report& report) {
    std::cout << report.body.dump(2) << '\n';
    return report.violations > 0 ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Data-driven robust predictors with exact finite-sample checks"};
    app.require_subcommand(1);

    Overrides ov_predict, ov_prescribe, ov_disappoint, ov_sanov, ov_figure2, ov_validate;
    std::string observations_path, costs_path;
    std::optional<std::string> centers_path;

    CLI::App* predict =
        app.add_subcommand("predict", "predictor values and certificates for one dataset");
    predict->add_option("observations", observations_path, "observation CSV file")->required();
    predict->add_option("costs", costs_path, "cost table CSV file")->required();
    add_common_options(predict, ov_predict);

    CLI::App* prescribe =
        app.add_subcommand("prescribe", "recommended decision per predictor kind");
    prescribe->add_option("observations", observations_path, "observation CSV file")->required();
    prescribe->add_option("costs", costs_path, "cost table CSV file")->required();
    add_common_options(prescribe, ov_prescribe);

    CLI::App* disappoint = app.add_subcommand(
        "disappoint", "exact disappointment curves against the guarantee ceiling");
    disappoint->add_option("costs", costs_path, "cost table CSV file")->required();
    add_common_options(disappoint, ov_disappoint);

    CLI::App* sanov =
        app.add_subcommand("sanov", "exact halfspace tail probabilities and their ceiling");
    add_common_options(sanov, ov_sanov);

    CLI::App* figure2 =
        app.add_subcommand("figure2", "ternary plot data for divergence balls and level sets");
    figure2->add_option("--centers", centers_path, "CSV of ball centers, 3 weights per row");
    add_common_options(figure2, ov_figure2);

    CLI::App* validate = app.add_subcommand("validate", "run the oracle and property suites");
    add_common_options(validate, ov_validate);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (predict->parsed())
            return finish(relent::cmd_predict(build_config(ov_predict), observations_path,
                                              costs_path));
        if (prescribe->parsed())
            return finish(relent::cmd_prescribe(build_config(ov_prescribe), observations_path,
                                                costs_path));
        if (disappoint->parsed())
            return finish(relent::cmd_disappoint(build_config(ov_disappoint), costs_path));
        if (sanov->parsed()) return finish(relent::cmd_sanov(build_config(ov_sanov)));
        if (figure2->parsed())
            return finish(relent::cmd_figure2(build_config(ov_figure2), centers_path));
        if (validate->parsed()) return finish(relent::cmd_validate(build_config(ov_validate)));
    } catch (const relent::ViolationError& e) {
        std::cerr << "violation: " << e.what() << '\n';
        return 2;
    } catch (const relent::InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const relent::DomainError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
