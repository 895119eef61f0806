#pragma once

// Independent brute-force references for validating the solver and the
// structural assumptions of the design problem on small instances. These
// deliberately share no code path with the solver: ordered partitions are
// enumerated as bitmask compositions, arbitrary set partitions via
// restricted-growth strings, and group expectations can be recomputed from
// the exact probability tree instead of the closed forms.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "pooltest/metrics.hpp"
#include "pooltest/model.hpp"
#include "pooltest/solver.hpp"  // kBudgetTolerance, shared feasibility rule

namespace pooltest {

class InstanceTooLargeError : public Error {
public:
    InstanceTooLargeError(const std::string& op, std::size_t n, std::size_t cap)
        : Error(op + " supports at most " + std::to_string(cap) + " subjects, got " +
                std::to_string(n)) {}
};

struct OracleReport {
    // Minimum objective over the enumerated space; +infinity when no
    // candidate satisfies the constraints.
    double best_objective = std::numeric_limits<double>::infinity();
    // First enumerated optimum, as 1-based subject indices per group. For
    // the all-partitions enumerator groups need not be contiguous.
    std::vector<std::vector<std::size_t>> best_grouping;
    // The optimum as a model partition; filled when best_grouping consists
    // of contiguous runs in population order (always, for the ordered
    // enumerator), left empty otherwise.
    Partition best_partition;
    // Size-feasible candidates evaluated (budget-infeasible ones included).
    std::uint64_t candidates_examined = 0;
    // Feasible candidates with objective within 1e-9 of the optimum.
    std::uint64_t ties = 0;
    bool feasible = false;
};

namespace detail {

struct CandidateMetrics {
    double objective = 0.0;
    double expected_tests = 0.0;
};

// Evaluates a grouping given as index lists, mirroring partition_metrics'
// accumulation order so totals are bit-identical with the solver's.
inline CandidateMetrics evaluate_grouping(const Population& pop,
                                          const std::vector<std::vector<std::size_t>>& groups,
                                          const TestCharacteristics& tc, double lambda) {
    CandidateMetrics total;
    double fn = 0.0, fp = 0.0;
    for (const std::vector<std::size_t>& g : groups) {
        GroupAccumulator acc;
        for (std::size_t idx : g) acc.add(pop.subject(idx).risk);
        const GroupMetrics m = acc.evaluate(tc, lambda);
        fn += m.expected_fn;
        fp += m.expected_fp;
        total.expected_tests += m.expected_tests;
    }
    total.objective = lambda * fn + (1.0 - lambda) * fp;
    return total;
}

inline bool grouping_is_contiguous(const std::vector<std::vector<std::size_t>>& groups) {
    std::size_t expected = 1;
    for (const std::vector<std::size_t>& g : groups) {
        for (std::size_t idx : g)
            if (idx != expected++) return false;
    }
    return true;
}

inline Partition materialize_partition(const Population& pop,
                                       const std::vector<std::vector<std::size_t>>& groups,
                                       const TestCharacteristics& tc, double lambda) {
    Partition p;
    for (const std::vector<std::size_t>& g : groups) {
        Group grp;
        grp.start_index = g.front();
        grp.size = g.size();
        for (std::size_t idx : g) grp.members.push_back(pop.subject(idx));
        p.groups.push_back(std::move(grp));
    }
    p.metrics = partition_metrics(p.groups, tc, lambda);
    return p;
}

// Shared tail of both enumerators: scores one size-feasible candidate.
struct BestTracker {
    double best = std::numeric_limits<double>::infinity();
    std::vector<std::vector<std::size_t>> best_grouping;
    std::vector<double> feasible_objectives;

    void consider(const std::vector<std::vector<std::size_t>>& groups, double objective) {
        feasible_objectives.push_back(objective);
        if (objective < best) {
            best = objective;
            best_grouping = groups;
        }
    }
};

inline OracleReport finish_report(const Population& pop, const TestCharacteristics& tc,
                                  double lambda, std::uint64_t candidates, BestTracker&& tracker) {
    OracleReport report;
    report.candidates_examined = candidates;
    if (tracker.feasible_objectives.empty()) return report;  // feasible = false
    report.feasible = true;
    report.best_objective = tracker.best;
    report.best_grouping = std::move(tracker.best_grouping);
    for (double obj : tracker.feasible_objectives)
        if (obj <= tracker.best + 1e-9) ++report.ties;
    if (grouping_is_contiguous(report.best_grouping))
        report.best_partition = materialize_partition(pop, report.best_grouping, tc, lambda);
    return report;
}

}  // namespace detail

// Exact optimum over all ordered partitions (contiguous groups) under the
// size cap and budget, by enumerating the 2^(N-1) compositions of cut
// points. Exponential: capped at N <= 20.
inline OracleReport enumerate_ordered_optimum(const Population& pop,
                                              const TestCharacteristics& tc,
                                              const DesignConfig& cfg) {
    validate_test_characteristics(tc);
    validate_design_config(cfg);
    const std::size_t n = pop.size();
    if (n > 20) throw InstanceTooLargeError("enumerate_ordered_optimum", n, 20);

    const double budget = cfg.budget + kBudgetTolerance;
    const std::uint64_t masks = std::uint64_t{1} << (n - 1);
    std::uint64_t candidates = 0;
    detail::BestTracker tracker;
    std::vector<std::vector<std::size_t>> groups;

    for (std::uint64_t mask = 0; mask < masks; ++mask) {
        // Bit k-1 set means a cut between subjects k and k+1. Check the
        // size cap before evaluating any metrics.
        bool size_ok = true;
        std::size_t run = 1;
        for (std::size_t k = 1; k < n && size_ok; ++k) {
            if (mask & (std::uint64_t{1} << (k - 1)))
                run = 1;
            else if (++run > cfg.max_group_size)
                size_ok = false;
        }
        if (!size_ok || run > cfg.max_group_size) continue;
        ++candidates;

        groups.clear();
        groups.emplace_back();
        for (std::size_t k = 1; k <= n; ++k) {
            if (k > 1 && (mask & (std::uint64_t{1} << (k - 2)))) groups.emplace_back();
            groups.back().push_back(k);
        }
        const detail::CandidateMetrics m =
            detail::evaluate_grouping(pop, groups, tc, cfg.lambda);
        if (m.expected_tests > budget) continue;
        tracker.consider(groups, m.objective);
    }
    return detail::finish_report(pop, tc, cfg.lambda, candidates, std::move(tracker));
}

// Exact optimum over ALL set partitions (groups need not be contiguous)
// under the same constraints, enumerated via restricted-growth strings.
// Bell-number growth: capped at N <= 10.
inline OracleReport enumerate_all_partitions_optimum(const Population& pop,
                                                     const TestCharacteristics& tc,
                                                     const DesignConfig& cfg) {
    validate_test_characteristics(tc);
    validate_design_config(cfg);
    const std::size_t n = pop.size();
    if (n > 10) throw InstanceTooLargeError("enumerate_all_partitions_optimum", n, 10);

    const double budget = cfg.budget + kBudgetTolerance;
    std::uint64_t candidates = 0;
    detail::BestTracker tracker;

    // rgs[k] is the 0-based group of subject k+1; rgs[k] <= 1 + max of the
    // preceding entries, which enumerates every set partition exactly once.
    std::vector<std::size_t> rgs(n, 0);
    std::vector<std::vector<std::size_t>> groups;
    auto evaluate_current = [&](std::size_t group_count) {
        groups.assign(group_count, {});
        for (std::size_t k = 0; k < n; ++k) groups[rgs[k]].push_back(k + 1);
        for (const std::vector<std::size_t>& g : groups)
            if (g.size() > cfg.max_group_size) return;
        ++candidates;
        const detail::CandidateMetrics m =
            detail::evaluate_grouping(pop, groups, tc, cfg.lambda);
        if (m.expected_tests > budget) return;
        tracker.consider(groups, m.objective);
    };

    auto recurse = [&](auto&& self, std::size_t k, std::size_t next_group) -> void {
        if (k == n) {
            evaluate_current(next_group);
            return;
        }
        for (std::size_t g = 0; g <= next_group; ++g) {
            rgs[k] = g;
            self(self, k + 1, g == next_group ? next_group + 1 : next_group);
        }
    };
    recurse(recurse, 0, 0);
    return detail::finish_report(pop, tc, cfg.lambda, candidates, std::move(tracker));
}

struct ExactGroupExpectations {
    double fn = 0.0;
    double fp = 0.0;
    double tests = 0.0;
};

// Ground-truth group expectations from the full probability tree: sum over
// all 2^n true-status vectors, weighting each by its probability, with the
// two-stage protocol's conditional outcome distribution expanded exactly.
// Independent of the closed forms in metrics.hpp by construction.
inline ExactGroupExpectations exact_group_expectations(const Group& group,
                                                       const TestCharacteristics& tc) {
    const std::size_t n = group.members.size();
    if (n == 0) throw Error("group must be non-empty");
    if (n > 12) throw InstanceTooLargeError("exact_group_expectations", n, 12);
    const double se = tc.sensitivity;
    const double sp = tc.specificity;

    ExactGroupExpectations total;
    for (std::uint64_t status = 0; status < (std::uint64_t{1} << n); ++status) {
        double prob = 1.0;
        std::size_t infected = 0;
        for (std::size_t k = 0; k < n; ++k) {
            const double p = group.members[k].risk;
            if (status & (std::uint64_t{1} << k)) {
                prob *= p;
                ++infected;
            } else {
                prob *= 1.0 - p;
            }
        }
        if (prob == 0.0) continue;

        double fn, fp, tests;
        if (n == 1) {
            // Single subject: one individual test, no pooling stage.
            fn = infected ? 1.0 - se : 0.0;
            fp = infected ? 0.0 : 1.0 - sp;
            tests = 1.0;
        } else {
            // Pool test is positive with probability Se if any member is
            // infected, 1-Sp otherwise. On a positive pool every member is
            // retested; retests are conditionally independent given the
            // true statuses.
            const double pool_pos = infected ? se : 1.0 - sp;
            const double k = static_cast<double>(infected);
            const double healthy = static_cast<double>(n - infected);
            // Infected member missed if the pool tested negative, or the
            // pool fired and the retest missed.
            fn = k * ((1.0 - pool_pos) + pool_pos * (1.0 - se));
            // Healthy member flagged only when the pool fired and the
            // retest false-alarmed.
            fp = pool_pos * healthy * (1.0 - sp);
            tests = 1.0 + pool_pos * static_cast<double>(n);
        }
        total.fn += prob * fn;
        total.fp += prob * fp;
        total.tests += prob * tests;
    }
    return total;
}

}  // namespace pooltest
