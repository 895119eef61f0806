#pragma once

// Instance ingestion: disaggregation of per-age-group prevalence tables
// into per-subject risk lists, the six embedded benchmark instances, file
// loaders (per-subject CSV, aggregated JSON), and the two-proportion chi²
// utility used to compare positivity rates between groups.

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "pooltest/model.hpp"

namespace pooltest {

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(what) {}
};

class ParseError : public Error {
public:
    explicit ParseError(const std::string& what) : Error(what) {}
};

class SchemaError : public Error {
public:
    explicit SchemaError(const std::string& what) : Error(what) {}
};

// One row of an aggregated prevalence table: every subject in the row
// shares the row's risk. `positives` is the observed positive count,
// carried only for prevalence comparisons (chi²), not used by the solver.
struct AgeGroupRecord {
    std::string label;
    double risk = 0.0;
    long count = 0;
    std::optional<long> positives;

    friend bool operator==(const AgeGroupRecord&, const AgeGroupRecord&) = default;
};

struct InstanceSpec {
    std::string name;
    std::vector<AgeGroupRecord> records;
    TestCharacteristics tc;
    double lambda = 0.5;

    friend bool operator==(const InstanceSpec&, const InstanceSpec&) = default;
};

inline void validate_instance_spec(const InstanceSpec& spec) {
    long total = 0;
    for (const AgeGroupRecord& rec : spec.records) {
        if (rec.count < 0) throw Error("record '" + rec.label + "' has negative count");
        if (rec.positives && (*rec.positives < 0 || *rec.positives > rec.count))
            throw Error("record '" + rec.label + "' has positives outside [0, count]");
        total += rec.count;
    }
    if (total < 1) throw Error("instance '" + spec.name + "' contains no subjects");
}

// Expands aggregated records into one subject per counted person, id
// "<label>-<k>" with k starting at 1 within each record, then sorts by
// risk through the canonical population validator.
inline Population disaggregate(const InstanceSpec& spec) {
    validate_instance_spec(spec);
    std::vector<Subject> subjects;
    for (const AgeGroupRecord& rec : spec.records)
        for (long k = 1; k <= rec.count; ++k)
            subjects.push_back(Subject{rec.label + "-" + std::to_string(k), rec.risk});
    return validate_population(std::move(subjects));
}

// The six one-day screening benchmark instances, with each age group's
// positivity risk assigned from the preceding week's rate. Rows with a
// zero count are omitted (they contribute no subjects and some print no
// risk at all). Test characteristics and lambda follow the benchmark
// setup: Se = 0.7, Sp = 0.95, lambda = 0.8.
inline std::vector<InstanceSpec> builtin_paper_instances() {
    const TestCharacteristics tc{0.7, 0.95};
    const double lambda = 0.8;
    return {
        InstanceSpec{"inst1",
                     {{"15-44", 0.238, 18, 1},
                      {"45-64", 0.339, 18, 5},
                      {"65-74", 0.370, 4, 2},
                      {"75+", 0.253, 14, 5}},
                     tc,
                     lambda},
        InstanceSpec{"inst2",
                     {{"15-44", 0.238, 18, 3},
                      {"45-64", 0.339, 21, 1},
                      {"65-74", 0.370, 4, 0},
                      {"75+", 0.253, 11, 7}},
                     tc,
                     lambda},
        InstanceSpec{"inst3",
                     {{"-15", 0.000, 2, 0},
                      {"15-44", 0.187, 76, 14},
                      {"45-64", 0.152, 44, 6},
                      {"65-74", 0.125, 13, 5},
                      {"75+", 0.369, 22, 7}},
                     tc,
                     lambda},
        InstanceSpec{"inst4",
                     {{"-15", 0.000, 1, 0},
                      {"15-44", 0.187, 59, 11},
                      {"45-64", 0.152, 45, 8},
                      {"65-74", 0.125, 12, 2},
                      {"75+", 0.369, 29, 7}},
                     tc,
                     lambda},
        InstanceSpec{"inst5",
                     {{"-15", 0.000, 3, 1},
                      {"15-44", 0.157, 49, 9},
                      {"45-64", 0.199, 34, 9},
                      {"65-74", 0.176, 4, 0},
                      {"75+", 0.277, 14, 1}},
                     tc,
                     lambda},
        InstanceSpec{"inst6",
                     {{"15-44", 0.157, 49, 7},
                      {"45-64", 0.199, 36, 5},
                      {"65-74", 0.176, 9, 0},
                      {"75+", 0.277, 6, 1}},
                     tc,
                     lambda},
    };
}

// Finds a builtin instance by its name ("inst1".."inst6").
inline std::optional<InstanceSpec> find_builtin_instance(const std::string& name) {
    for (InstanceSpec& spec : builtin_paper_instances())
        if (spec.name == name) return std::move(spec);
    return std::nullopt;
}

struct ChiSquareResult {
    double statistic = 0.0;
    double p_value = 1.0;
    bool significant_at_5pct = false;
    // True when a margin of the 2x2 table is zero (e.g., no positives in
    // either group): expected counts contain zeros and the statistic is
    // undefined, reported as non-significant.
    bool degenerate = false;
};

// Pearson chi-square test that two groups share the same positivity
// proportion: 2x2 table (group x positive/negative), one degree of
// freedom, no continuity correction. p-value from the chi²₁ survival
// function, which reduces to erfc(sqrt(x/2)).
inline ChiSquareResult chi_square_two_proportions(long a_pos, long a_tot, long b_pos,
                                                  long b_tot) {
    if (a_tot < 1 || b_tot < 1) throw Error("both group totals must be at least 1");
    if (a_pos < 0 || a_pos > a_tot || b_pos < 0 || b_pos > b_tot)
        throw Error("positives must lie in [0, total] for both groups");

    const double a = static_cast<double>(a_pos);
    const double b = static_cast<double>(a_tot - a_pos);
    const double c = static_cast<double>(b_pos);
    const double d = static_cast<double>(b_tot - b_pos);
    const double n = a + b + c + d;

    ChiSquareResult r;
    if (a + c == 0.0 || b + d == 0.0) {
        r.degenerate = true;
        return r;  // statistic 0, p 1, not significant
    }
    r.statistic = n * (a * d - b * c) * (a * d - b * c) /
                  ((a + b) * (c + d) * (a + c) * (b + d));
    r.p_value = std::erfc(std::sqrt(r.statistic / 2.0));
    r.significant_at_5pct = r.p_value < 0.05;
    return r;
}

namespace detail {

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (in.bad()) throw IoError("error while reading '" + path.string() + "'");
    return std::move(buffer).str();
}

inline std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

inline double parse_risk_field(const std::string& field, std::size_t line_no) {
    std::size_t consumed = 0;
    double value = 0.0;
    try {
        value = std::stod(field, &consumed);
    } catch (const std::exception&) {
        throw ParseError("line " + std::to_string(line_no) + ": cannot parse risk '" +
                         field + "'");
    }
    if (consumed != field.size())
        throw ParseError("line " + std::to_string(line_no) + ": trailing characters in risk '" +
                         field + "'");
    return value;
}

}  // namespace detail

// Loads a per-subject CSV: header "id,risk", one subject per line, risk a
// decimal in [0, 1]. Returns the risk-sorted population. Blank lines are
// skipped; risks outside [0, 1] surface as RiskOutOfRangeError.
inline Population load_population_csv(const std::filesystem::path& path) {
    std::istringstream in(detail::read_file(path));
    std::string line;
    std::size_t line_no = 0;

    if (!std::getline(in, line))
        throw ParseError("line 1: empty file, expected header 'id,risk'");
    ++line_no;
    if (detail::strip_cr(line) != "id,risk")
        throw ParseError("line 1: expected header 'id,risk', got '" + detail::strip_cr(line) +
                         "'");

    std::vector<Subject> subjects;
    while (std::getline(in, line)) {
        ++line_no;
        line = detail::strip_cr(line);
        if (line.empty()) continue;
        const std::size_t comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
            throw ParseError("line " + std::to_string(line_no) +
                             ": expected exactly two fields 'id,risk'");
        std::string id = line.substr(0, comma);
        if (id.empty())
            throw ParseError("line " + std::to_string(line_no) + ": empty subject id");
        subjects.push_back(
            Subject{std::move(id), detail::parse_risk_field(line.substr(comma + 1), line_no)});
    }
    return validate_population(std::move(subjects));
}

// JSON (de)serialization of aggregated instances. Schema:
//   { "name": str, "se": num, "sp": num, "lambda": num,
//     "records": [ { "label": str, "risk": num, "count": int,
//                    "positives": int? } ] }
inline nlohmann::json instance_to_json(const InstanceSpec& spec) {
    nlohmann::json records = nlohmann::json::array();
    for (const AgeGroupRecord& rec : spec.records) {
        nlohmann::json row{{"label", rec.label}, {"risk", rec.risk}, {"count", rec.count}};
        if (rec.positives) row["positives"] = *rec.positives;
        records.push_back(std::move(row));
    }
    return nlohmann::json{{"name", spec.name},
                          {"se", spec.tc.sensitivity},
                          {"sp", spec.tc.specificity},
                          {"lambda", spec.lambda},
                          {"records", std::move(records)}};
}

inline InstanceSpec instance_from_json(const nlohmann::json& doc) {
    auto require = [&](const nlohmann::json& node, const char* key,
                       const char* context) -> const nlohmann::json& {
        if (!node.is_object() || !node.contains(key))
            throw SchemaError(std::string(context) + ": missing required key '" + key + "'");
        return node.at(key);
    };
    auto as_number = [](const nlohmann::json& v, const char* what) {
        if (!v.is_number()) throw SchemaError(std::string(what) + " must be a number");
        return v.get<double>();
    };

    InstanceSpec spec;
    const nlohmann::json& name = require(doc, "name", "instance");
    if (!name.is_string()) throw SchemaError("instance name must be a string");
    spec.name = name.get<std::string>();
    spec.tc.sensitivity = as_number(require(doc, "se", "instance"), "se");
    spec.tc.specificity = as_number(require(doc, "sp", "instance"), "sp");
    spec.lambda = as_number(require(doc, "lambda", "instance"), "lambda");

    const nlohmann::json& records = require(doc, "records", "instance");
    if (!records.is_array() || records.empty())
        throw SchemaError("instance records must be a non-empty array");
    for (const nlohmann::json& row : records) {
        AgeGroupRecord rec;
        const nlohmann::json& label = require(row, "label", "record");
        if (!label.is_string()) throw SchemaError("record label must be a string");
        rec.label = label.get<std::string>();
        rec.risk = as_number(require(row, "risk", "record"), "record risk");
        const nlohmann::json& count = require(row, "count", "record");
        if (!count.is_number_integer()) throw SchemaError("record count must be an integer");
        rec.count = count.get<long>();
        if (row.contains("positives")) {
            if (!row.at("positives").is_number_integer())
                throw SchemaError("record positives must be an integer");
            rec.positives = row.at("positives").get<long>();
        }
        spec.records.push_back(std::move(rec));
    }
    validate_instance_spec(spec);
    return spec;
}

// Loads an aggregated instance from a JSON file.
inline InstanceSpec load_instance_json(const std::filesystem::path& path) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(detail::read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("'" + path.string() + "': " + e.what());
    }
    return instance_from_json(doc);
}

enum class InstanceFormat { csv_subjects, json_aggregated };

// Format-dispatching loader: csv_subjects yields a Population directly,
// json_aggregated an InstanceSpec (disaggregate it to get a population).
inline std::variant<Population, InstanceSpec> load_instance(const std::filesystem::path& path,
                                                            InstanceFormat format) {
    if (format == InstanceFormat::csv_subjects) return load_population_csv(path);
    return load_instance_json(path);
}

}  // namespace pooltest
