#pragma once

#include <cstdint>
#include <fstream>
#include <iosfwd>
#include <sstream>
#include <string>
#include <vector>

#include "relent/conic.hpp"
#include "relent/errors.hpp"
#include "relent/exact_ldp.hpp"
#include "relent/geometry.hpp"
#include "relent/simplex.hpp"

namespace relent {

namespace detail {

inline std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

}  // namespace detail

/// Observation files carry one 1-based scenario id per line; an optional
/// leading header line "scenario" is skipped. Blank lines are ignored.
inline std::vector<std::int64_t> read_observations(std::istream& in) {
    std::vector<std::int64_t> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string cell = detail::trim(line);
        if (cell.empty()) continue;
        if (line_no == 1 && cell == "scenario") continue;
        try {
            std::size_t used = 0;
            const long long id = std::stoll(cell, &used);
            if (used != cell.size()) throw std::invalid_argument("trailing junk");
            out.push_back(id);
        } catch (const std::exception&) {
            throw InputError("observations line " + std::to_string(line_no) +
                             ": expected an integer scenario id, got '" + cell + "'");
        }
    }
    if (out.empty()) throw InputError("observations: file contains no scenario ids");
    return out;
}

inline std::vector<std::int64_t> read_observations_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open observations file '" + path + "'");
    return read_observations(in);
}

/// Cost files are CSV with a mandatory header row; each following row is a
/// decision label and then one cost per scenario.
inline CostMatrix read_cost_matrix(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw InputError("cost file: empty, header row required");
    const std::size_t width = detail::split_csv(line).size();
    if (width < 2)
        throw InputError("cost file header: need a label column plus at least one scenario");
    std::vector<std::string> labels;
    std::vector<CostVector> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const std::vector<std::string> cells = detail::split_csv(line);
        if (cells.size() != width)
            throw InputError("cost file line " + std::to_string(line_no) + ": expected " +
                             std::to_string(width) + " cells, got " +
                             std::to_string(cells.size()));
        labels.push_back(cells[0]);
        CostVector row;
        for (std::size_t i = 1; i < cells.size(); ++i) {
            try {
                row.push_back(parse_double(cells[i]));
            } catch (const InputError&) {
                throw InputError("cost file line " + std::to_string(line_no) + ", column " +
                                 std::to_string(i + 1) + ": cannot parse '" + cells[i] + "'");
            }
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw InputError("cost file: no decision rows after the header");
    return CostMatrix(std::move(labels), std::move(rows));
}

inline CostMatrix read_cost_matrix_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open cost file '" + path + "'");
    return read_cost_matrix(in);
}

/// Disappointment curves export as T,exact_probability,strong_bound,
/// log_probability with every real in round-trip decimal form.
inline void write_curve_csv(const DisappointmentCurve& curve, std::ostream& out) {
    out << "T,exact_probability,strong_bound,log_probability\n";
    for (const CurveEntry& e : curve.entries)
        out << e.T << ',' << format_double(e.exact_probability) << ','
            << format_double(e.strong_bound) << ',' << format_double(e.log_probability) << '\n';
}

inline void write_curve_csv_file(const DisappointmentCurve& curve, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write curve file '" + path + "'");
    write_curve_csv(curve, out);
}

struct CurveRow {
    std::int64_t T;
    double exact_probability;
    double strong_bound;
    double log_probability;
};

inline std::vector<CurveRow> read_curve_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) ||
        detail::trim(line) != "T,exact_probability,strong_bound,log_probability")
        throw InputError("curve file: missing or unexpected header");
    std::vector<CurveRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto cells = detail::split_csv(line);
        if (cells.size() != 4)
            throw InputError("curve file line " + std::to_string(line_no) + ": expected 4 cells");
        rows.push_back({std::stoll(cells[0]), parse_double(cells[1]), parse_double(cells[2]),
                        parse_double(cells[3])});
    }
    return rows;
}

/// Ternary plot rows: planar coordinates plus a free-form tag such as
/// "ball", "face", or a level-set name.
struct PlotRow {
    TernaryPoint point;
    std::string tag;
};

inline void write_plot_csv(const std::vector<PlotRow>& rows, std::ostream& out) {
    out << "u,v,tag\n";
    for (const PlotRow& r : rows)
        out << format_double(r.point.u) << ',' << format_double(r.point.v) << ',' << r.tag
            << '\n';
}

inline void write_plot_csv_file(const std::vector<PlotRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write plot file '" + path + "'");
    write_plot_csv(rows, out);
}

}  // namespace relent
