#pragma once

// Closed-form expectations for two-stage (Dorfman) pooled testing with an
// imperfect assay. A group of size one is tested individually; a group of
// size two or more receives one pooled test and, if the pool is positive,
// one confirmatory test per member. Sensitivity and specificity apply to
// every test and errors are independent across tests.
//
// For a group with risks p_1..p_n, writing q = prod(1 - p_k):
//
//   n == 1:  E[FN] = (1 - Se) p            E[FP] = (1 - Sp)(1 - p)
//            E[T]  = 1
//   n >= 2:  E[FN] = (1 - Se^2) sum(p_k)
//            E[FP] = (1 - Sp) Se sum(1 - p_k) - n (1 - Sp)(Se + Sp - 1) q
//            E[T]  = 1 + n (Se - (Se + Sp - 1) q)
//
// A subject is a false negative if infected but not reported positive
// (pool missed, or pool hit and the individual test missed), and a false
// positive if healthy but reported positive (pool flagged, by a true or a
// false alarm, and the individual test also false-alarmed).

#include <cstddef>

#include "pooltest/model.hpp"

namespace pooltest {

// Expected false negatives, false positives, tests for one group, and the
// group's contribution to the design objective.
struct GroupMetrics {
    double expected_fn = 0.0;
    double expected_fp = 0.0;
    double expected_tests = 0.0;
    double cost = 0.0;  // lambda * expected_fn + (1 - lambda) * expected_fp

    friend bool operator==(const GroupMetrics&, const GroupMetrics&) = default;
};

// Running aggregates over a group's risks. Both the direct evaluators and
// the solver's incremental arc extension feed risks through this same
// accumulator in population order, so the two paths produce bit-identical
// floating-point results.
class GroupAccumulator {
public:
    void add(double risk) noexcept {
        ++n_;
        sum_p_ += risk;
        sum_q_ += 1.0 - risk;
        prod_q_ *= 1.0 - risk;
    }

    std::size_t size() const noexcept { return n_; }

    GroupMetrics evaluate(const TestCharacteristics& tc, double lambda) const noexcept {
        const double se = tc.sensitivity;
        const double sp = tc.specificity;
        GroupMetrics m;
        if (n_ == 1) {
            m.expected_fn = (1.0 - se) * sum_p_;
            m.expected_fp = (1.0 - sp) * sum_q_;
            m.expected_tests = 1.0;
        } else {
            m.expected_fn = (1.0 - se * se) * sum_p_;
            m.expected_fp = (1.0 - sp) * se * sum_q_ -
                            static_cast<double>(n_) * (1.0 - sp) * (se + sp - 1.0) * prod_q_;
            m.expected_tests =
                1.0 + static_cast<double>(n_) * (se - (se + sp - 1.0) * prod_q_);
        }
        m.cost = lambda * m.expected_fn + (1.0 - lambda) * m.expected_fp;
        return m;
    }

private:
    std::size_t n_ = 0;
    double sum_p_ = 0.0;
    double sum_q_ = 0.0;
    double prod_q_ = 1.0;
};

namespace detail {

inline GroupAccumulator accumulate_group(const Group& group) {
    GroupAccumulator acc;
    for (const Subject& s : group.members) acc.add(s.risk);
    return acc;
}

}  // namespace detail

// Per-group expectations. Groups must be non-empty.
inline double expected_fn_group(const Group& group, const TestCharacteristics& tc) {
    if (group.members.empty()) throw Error("group must be non-empty");
    return detail::accumulate_group(group).evaluate(tc, 0.0).expected_fn;
}

inline double expected_fp_group(const Group& group, const TestCharacteristics& tc) {
    if (group.members.empty()) throw Error("group must be non-empty");
    return detail::accumulate_group(group).evaluate(tc, 0.0).expected_fp;
}

inline double expected_tests_group(const Group& group, const TestCharacteristics& tc) {
    if (group.members.empty()) throw Error("group must be non-empty");
    return detail::accumulate_group(group).evaluate(tc, 0.0).expected_tests;
}

// All four quantities at once; cheaper than three separate calls and the
// form the solver and reports use.
inline GroupMetrics group_metrics(const Group& group, const TestCharacteristics& tc,
                                  double lambda) {
    if (group.members.empty()) throw Error("group must be non-empty");
    return detail::accumulate_group(group).evaluate(tc, lambda);
}

// Metrics of the group {S_i, ..., S_{j-1}} of the sorted population, the
// "arc" (i, j) of the graph formulation. Indices are 1-based with
// 1 <= i < j <= N + 1; j == N + 1 closes the final group at S_N.
inline GroupMetrics arc_metrics(const Population& pop, std::size_t i, std::size_t j,
                                const TestCharacteristics& tc, double lambda) {
    const std::size_t n = pop.size();
    if (i < 1 || j <= i || j > n + 1)
        throw IndexOutOfRangeError("arc (" + std::to_string(i) + ", " + std::to_string(j) +
                                   ") invalid for population of size " + std::to_string(n));
    GroupAccumulator acc;
    for (std::size_t k = i; k < j; ++k) acc.add(pop.subject(k).risk);
    return acc.evaluate(tc, lambda);
}

// Expected false negatives / positives / tests and objective for a whole
// partition: sums of the per-group closed forms.
inline PartitionMetrics partition_metrics(const std::vector<Group>& groups,
                                          const TestCharacteristics& tc, double lambda) {
    PartitionMetrics total;
    for (const Group& g : groups) {
        const GroupMetrics m = group_metrics(g, tc, lambda);
        total.expected_fn += m.expected_fn;
        total.expected_fp += m.expected_fp;
        total.expected_tests += m.expected_tests;
    }
    total.objective = lambda * total.expected_fn + (1.0 - lambda) * total.expected_fp;
    return total;
}

inline PartitionMetrics partition_metrics(const Partition& partition,
                                          const TestCharacteristics& tc, double lambda) {
    return partition_metrics(partition.groups, tc, lambda);
}

// Expected tests if the whole population were pooled into one group,
// ignoring the size cap: 1 + N (Se - (Se + Sp - 1) prod(1 - p_k)), or
// exactly 1 for a single subject. Used as the starting point of the
// minimum-budget search.
inline double single_group_budget_estimate(const Population& pop,
                                           const TestCharacteristics& tc) {
    GroupAccumulator acc;
    for (const Subject& s : pop) acc.add(s.risk);
    return acc.evaluate(tc, 0.0).expected_tests;
}

}  // namespace pooltest
