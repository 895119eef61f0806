#pragma once

// Core value types for the pooled-testing design problem: subjects with
// individual infection risks, the risk-sorted population, test error
// characteristics, design parameters, and the partition/group types that
// solvers and evaluators exchange. All types are value types: cheap to
// copy, immutable after construction, safe to share across threads.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pooltest {

// Base class for all library errors so callers can catch one type.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class EmptyPopulationError : public Error {
public:
    EmptyPopulationError() : Error("population must contain at least one subject") {}
};

class RiskOutOfRangeError : public Error {
public:
    RiskOutOfRangeError(std::string subject_id, double risk)
        : Error("subject '" + subject_id + "' has risk " + std::to_string(risk) +
                " outside [0, 1]"),
          subject_id_(std::move(subject_id)),
          risk_(risk) {}

    const std::string& subject_id() const noexcept { return subject_id_; }
    double risk() const noexcept { return risk_; }

private:
    std::string subject_id_;
    double risk_;
};

class IndexOutOfRangeError : public Error {
public:
    explicit IndexOutOfRangeError(const std::string& what) : Error(what) {}
};

// One subject: an external identifier and a prior infection probability.
struct Subject {
    std::string id;
    double risk = 0.0;

    friend bool operator==(const Subject&, const Subject&) = default;
};

// An immutable population sorted by non-decreasing risk. Build one through
// validate_population(); the constructor is private so every instance in
// the program is known to satisfy the ordering invariant. Indexing is
// 1-based in the problem formulation; operator[] here is 0-based like any
// other C++ container, and subject(i) offers the 1-based view used by the
// graph formulation.
class Population {
public:
    using const_iterator = std::vector<Subject>::const_iterator;

    std::size_t size() const noexcept { return subjects_.size(); }
    bool empty() const noexcept { return subjects_.empty(); }

    const Subject& operator[](std::size_t i) const noexcept { return subjects_[i]; }

    // 1-based accessor matching the S_1..S_N notation. Throws on i == 0 or
    // i > size().
    const Subject& subject(std::size_t i) const {
        if (i == 0 || i > subjects_.size())
            throw IndexOutOfRangeError("subject index " + std::to_string(i) +
                                       " outside [1, " + std::to_string(subjects_.size()) + "]");
        return subjects_[i - 1];
    }

    const_iterator begin() const noexcept { return subjects_.begin(); }
    const_iterator end() const noexcept { return subjects_.end(); }

    const std::vector<Subject>& subjects() const noexcept { return subjects_; }

    friend bool operator==(const Population&, const Population&) = default;

private:
    friend Population validate_population(std::vector<Subject> subjects);

    explicit Population(std::vector<Subject> subjects) : subjects_(std::move(subjects)) {}

    std::vector<Subject> subjects_;
};

// Validates subject data and returns the canonical risk-sorted population.
// The sort is stable, so subjects with equal risk keep their input order
// (this pins down which of several equal-cost designs is reported).
// Throws EmptyPopulationError or RiskOutOfRangeError. Risks of exactly 0
// and exactly 1 are legal: the formulas degrade gracefully at both ends.
inline Population validate_population(std::vector<Subject> subjects) {
    if (subjects.empty()) throw EmptyPopulationError();
    for (const Subject& s : subjects) {
        if (!(s.risk >= 0.0 && s.risk <= 1.0))  // also rejects NaN
            throw RiskOutOfRangeError(s.id, s.risk);
    }
    std::stable_sort(subjects.begin(), subjects.end(),
                     [](const Subject& a, const Subject& b) { return a.risk < b.risk; });
    return Population(std::move(subjects));
}

// Sensitivity/specificity of the assay, assumed identical for pooled and
// individual tests and independent across tests.
struct TestCharacteristics {
    double sensitivity = 1.0;
    double specificity = 1.0;

    friend bool operator==(const TestCharacteristics&, const TestCharacteristics&) = default;
};

// Validates that both rates lie in [0, 1]. A test with Se + Sp < 1 is
// worse than a coin flip; the formulas still evaluate, so this is not an
// error, but the returned warning should be surfaced to the user.
inline std::optional<std::string> validate_test_characteristics(const TestCharacteristics& tc) {
    if (!(tc.sensitivity >= 0.0 && tc.sensitivity <= 1.0))
        throw Error("sensitivity " + std::to_string(tc.sensitivity) + " outside [0, 1]");
    if (!(tc.specificity >= 0.0 && tc.specificity <= 1.0))
        throw Error("specificity " + std::to_string(tc.specificity) + " outside [0, 1]");
    if (tc.sensitivity + tc.specificity < 1.0)
        return "test characteristics are worse than random (Se + Sp < 1); "
               "results are valid but the assay is uninformative";
    return std::nullopt;
}

// Design parameters: the FN-vs-FP tradeoff weight, the maximum group size
// the assay supports, and the budget on the expected number of tests.
struct DesignConfig {
    double lambda = 0.5;        // weight on expected false negatives in [0, 1]
    std::size_t max_group_size = 1;
    double budget = 0.0;        // upper bound on expected total tests

    friend bool operator==(const DesignConfig&, const DesignConfig&) = default;
};

inline void validate_design_config(const DesignConfig& cfg) {
    if (!(cfg.lambda >= 0.0 && cfg.lambda <= 1.0))
        throw Error("lambda " + std::to_string(cfg.lambda) + " outside [0, 1]");
    if (cfg.max_group_size < 1)
        throw Error("max_group_size must be at least 1");
    if (!(cfg.budget >= 0.0))  // also rejects NaN
        throw Error("budget must be non-negative");
}

// One group of a design: a contiguous run of the sorted population,
// identified by its 1-based start index, plus a copy of the member
// subjects so the group remains valid independently of the population
// object it came from.
struct Group {
    std::size_t start_index = 0;  // 1-based position of the first member
    std::size_t size = 0;
    std::vector<Subject> members;

    friend bool operator==(const Group&, const Group&) = default;
};

// Aggregate quality of a full partition under a given test and lambda.
struct PartitionMetrics {
    double expected_fn = 0.0;     // expected false negatives over all groups
    double expected_fp = 0.0;     // expected false positives over all groups
    double expected_tests = 0.0;  // expected total number of tests
    double objective = 0.0;       // lambda * fn + (1 - lambda) * fp

    friend bool operator==(const PartitionMetrics&, const PartitionMetrics&) = default;
};

// An ordered partition of the population into contiguous groups, in
// population order, together with its evaluated metrics.
struct Partition {
    std::vector<Group> groups;
    PartitionMetrics metrics;

    std::size_t subject_count() const noexcept {
        std::size_t n = 0;
        for (const Group& g : groups) n += g.size;
        return n;
    }

    friend bool operator==(const Partition&, const Partition&) = default;
};

}  // namespace pooltest
