#pragma once

// Exact solver for the pooled-testing design problem. An optimal design is
// known to exist among ordered partitions of the risk-sorted population,
// so the search space is the DAG whose nodes are subject positions 1..N+1
// (N+1 is an artificial sink) and whose arc (i, j) is the contiguous group
// {S_i, ..., S_{j-1}}. Each arc carries a cost (the group's weighted
// FN/FP objective) and a resource (its expected number of tests); a path
// from 1 to N+1 is a partition. The budget constraint makes this a
// resource-constrained shortest path, solved by label correcting with
// Pareto dominance: at each node we keep only (cost, resource) pairs not
// dominated by another label, processed in topological order.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "pooltest/metrics.hpp"
#include "pooltest/model.hpp"

namespace pooltest {

class CorruptChainError : public Error {
public:
    explicit CorruptChainError(const std::string& what) : Error(what) {}
};

class NoFeasibleBudgetError : public Error {
public:
    explicit NoFeasibleBudgetError(std::size_t n)
        : Error("no feasible design exists even at budget " + std::to_string(n - 1) +
                " (population of " + std::to_string(n) + ")") {}
};

// Absorbs accumulated floating-point rounding in the budget comparison so
// a path whose resource equals the budget analytically is not rejected.
inline constexpr double kBudgetTolerance = 1e-9;

// One state of the label-correcting search: the best-known ways to cover
// subjects 1..node-1. `pred` points at the label this one extends (null
// for the root at node 1); predecessor frontiers are final when their
// labels are extended, so the pointers stay valid for the whole solve.
struct Label {
    const Label* pred = nullptr;
    std::size_t node = 1;    // 1-based position; N+1 is the sink
    double cost = 0.0;       // accumulated objective
    double resource = 0.0;   // accumulated expected tests
};

// A node's Pareto frontier: labels sorted by strictly increasing cost and,
// equivalently, strictly decreasing resource.
using LabelList = std::vector<Label>;

inline bool is_pareto_frontier(const LabelList& frontier) {
    for (std::size_t k = 1; k < frontier.size(); ++k) {
        if (!(frontier[k - 1].cost < frontier[k].cost)) return false;
        if (!(frontier[k - 1].resource > frontier[k].resource)) return false;
    }
    return true;
}

// Inserts `cand` into a Pareto frontier: discarded if an incumbent
// dominates it (cost <= and resource <=, so exact ties favour the
// incumbent), otherwise inserted in cost order with every incumbent it
// dominates removed. Returns whether the candidate was inserted.
inline bool extend_and_dominance(LabelList& frontier, const Label& cand) {
    auto pos = std::lower_bound(frontier.begin(), frontier.end(), cand.cost,
                                [](const Label& l, double c) { return l.cost < c; });
    // Labels before pos have strictly smaller cost; in a Pareto frontier
    // the nearest of them carries their minimum resource.
    if (pos != frontier.begin() && std::prev(pos)->resource <= cand.resource) return false;
    if (pos != frontier.end() && pos->cost == cand.cost && pos->resource <= cand.resource)
        return false;
    // Labels dominated by the candidate (cost >= and resource >=) form a
    // contiguous run starting at pos, because resource decreases along the
    // list.
    auto last = pos;
    while (last != frontier.end() && last->resource >= cand.resource) ++last;
    pos = frontier.erase(pos, last);
    frontier.insert(pos, cand);
    return true;
}

struct SolveResult {
    Partition partition;                    // empty when infeasible
    PartitionMetrics metrics;               // zeroed when infeasible
    std::vector<std::size_t> label_counts;  // frontier size per node, [k] = node k+1
    bool feasible = false;
};

struct SolveOptions {
    // Re-verify the Pareto invariant after every frontier update and the
    // cost/resource bookkeeping against a full recomputation. Expensive;
    // meant for validation runs, not production solves.
    bool check_invariants = false;
};

// Rebuilds the partition encoded by a sink label's predecessor chain. The
// chain's node sequence gives the group boundaries: consecutive nodes
// (i, j) delimit the group {S_i, ..., S_{j-1}}. Throws CorruptChainError
// if the chain does not walk from node N+1 back to the root at node 1.
inline Partition recover_partition(const Population& pop, const Label& sink_label) {
    const std::size_t n = pop.size();
    std::vector<std::size_t> boundaries;
    const Label* cur = &sink_label;
    while (cur != nullptr) {
        if (boundaries.size() > n + 1)
            throw CorruptChainError("predecessor chain longer than any valid path");
        boundaries.push_back(cur->node);
        cur = cur->pred;
    }
    std::reverse(boundaries.begin(), boundaries.end());
    if (boundaries.front() != 1 || boundaries.back() != n + 1)
        throw CorruptChainError("predecessor chain does not span node 1 to node " +
                                std::to_string(n + 1));
    for (std::size_t k = 1; k < boundaries.size(); ++k)
        if (boundaries[k] <= boundaries[k - 1])
            throw CorruptChainError("predecessor chain nodes are not strictly increasing");

    Partition result;
    for (std::size_t k = 1; k < boundaries.size(); ++k) {
        Group g;
        g.start_index = boundaries[k - 1];
        g.size = boundaries[k] - boundaries[k - 1];
        g.members.reserve(g.size);
        for (std::size_t s = boundaries[k - 1]; s < boundaries[k]; ++s)
            g.members.push_back(pop.subject(s));
        result.groups.push_back(std::move(g));
    }
    return result;
}

// Finds a minimum-objective ordered partition subject to the group-size
// cap and the expected-test budget. Infeasibility (no partition fits the
// budget) is reported through SolveResult::feasible, not an exception,
// because the budget search probes infeasible budgets deliberately.
inline SolveResult solve(const Population& pop, const TestCharacteristics& tc,
                         const DesignConfig& cfg, const SolveOptions& opts = {}) {
    validate_test_characteristics(tc);
    validate_design_config(cfg);

    const std::size_t n = pop.size();
    const std::size_t cap = cfg.max_group_size;
    const double budget = cfg.budget + kBudgetTolerance;

    // frontiers[i] is node i's Pareto frontier; index 0 unused. A node's
    // frontier is final before any arc leaving it is relaxed, so labels
    // may hold pointers into earlier frontiers.
    std::vector<LabelList> frontiers(n + 2);
    frontiers[1].push_back(Label{nullptr, 1, 0.0, 0.0});

    // A group's expected tests grow as it absorbs subjects whenever the
    // test is informative (Se + Sp >= 1); only then may the arc scan stop
    // early once the budget alone is exceeded.
    const bool tests_monotone = tc.sensitivity + tc.specificity >= 1.0;

    for (std::size_t i = 1; i <= n; ++i) {
        const LabelList& from = frontiers[i];
        if (from.empty()) continue;
        // Grow the group {S_i, ..., S_{j-1}} one subject at a time so each
        // arc's metrics are O(1) updates of the running aggregates.
        GroupAccumulator acc;
        const std::size_t j_max = std::min(i + cap, n + 1);
        for (std::size_t j = i + 1; j <= j_max; ++j) {
            acc.add(pop.subject(j - 1).risk);
            const GroupMetrics arc = acc.evaluate(tc, cfg.lambda);
            if (arc.expected_tests > budget) {
                if (tests_monotone) break;  // no later arc from i fits either
                continue;
            }
            for (const Label& l : from) {
                const double resource = l.resource + arc.expected_tests;
                if (resource > budget) continue;
                extend_and_dominance(frontiers[j],
                                     Label{&l, j, l.cost + arc.cost, resource});
                if (opts.check_invariants && !is_pareto_frontier(frontiers[j]))
                    throw Error("internal error: frontier lost the Pareto invariant");
            }
        }
    }

    SolveResult result;
    result.label_counts.reserve(n + 1);
    for (std::size_t i = 1; i <= n + 1; ++i) result.label_counts.push_back(frontiers[i].size());
    if (frontiers[n + 1].empty()) return result;  // feasible = false

    // Lowest cost first in a Pareto list; ties cannot occur.
    const Label& best = frontiers[n + 1].front();
    result.feasible = true;
    result.partition = recover_partition(pop, best);
    result.metrics = partition_metrics(result.partition.groups, tc, cfg.lambda);
    result.partition.metrics = result.metrics;

    if (opts.check_invariants) {
        if (std::abs(best.cost - result.metrics.objective) > 1e-9 ||
            std::abs(best.resource - result.metrics.expected_tests) > 1e-9)
            throw Error("internal error: label bookkeeping disagrees with recomputation");
        for (const Group& g : result.partition.groups)
            if (g.size > cap) throw Error("internal error: group exceeds size cap");
    }
    return result;
}

enum class BudgetSearchMode {
    binary_search,  // bisect on feasibility (monotone in the budget)
    linear_scan     // decrement from N-1 until infeasible
};

struct MinBudgetResult {
    long b_min = 0;
    SolveResult result;  // the solve at b_min
};

namespace detail {

inline SolveResult solve_at_budget(const Population& pop, const TestCharacteristics& tc,
                                   double lambda, std::size_t max_group_size, double budget) {
    return solve(pop, tc, DesignConfig{lambda, max_group_size, budget});
}

}  // namespace detail

// Smallest integer budget at which a feasible design exists, plus the
// solve at that budget. Feasibility is monotone in the budget, so binary
// search and the linear scan agree; the scan exists to mirror the
// decrement-until-failure procedure exactly. Throws NoFeasibleBudgetError
// when even B = N-1 admits no design (possible, e.g., with L = 1, where
// the only partition needs N expected tests).
inline MinBudgetResult minimum_feasible_budget(
    const Population& pop, const TestCharacteristics& tc, double lambda,
    std::size_t max_group_size, BudgetSearchMode mode = BudgetSearchMode::binary_search) {
    const std::size_t n = pop.size();
    if (n < 2) throw Error("minimum_feasible_budget requires at least two subjects");
    if (max_group_size < 1) throw Error("max_group_size must be at least 1");

    const long cap = static_cast<long>(n) - 1;
    MinBudgetResult best;
    best.b_min = -1;
    auto probe = [&](long b) {
        SolveResult r = detail::solve_at_budget(pop, tc, lambda, max_group_size,
                                                static_cast<double>(b));
        if (r.feasible && (best.b_min < 0 || b < best.b_min)) {
            best.b_min = b;
            best.result = std::move(r);
            return true;
        }
        return r.feasible;
    };

    if (mode == BudgetSearchMode::linear_scan) {
        if (!probe(cap)) throw NoFeasibleBudgetError(n);
        long b = cap;
        while (b > 1 && probe(b - 1)) --b;
        return best;
    }

    // Expected tests of any design is at least the group count, so no
    // budget below ceil(N / L) can be feasible.
    long lo = static_cast<long>((n + max_group_size - 1) / max_group_size);
    long start = std::min(cap, static_cast<long>(std::ceil(single_group_budget_estimate(pop, tc))));
    if (start < lo) start = std::min(cap, lo);

    long hi;
    if (probe(start)) {
        hi = start;
    } else if (start == cap || !probe(cap)) {
        throw NoFeasibleBudgetError(n);
    } else {
        hi = cap;
        lo = start + 1;
    }
    while (lo < hi) {
        const long mid = lo + (hi - lo) / 2;
        if (probe(mid))
            hi = mid;
        else
            lo = mid + 1;
    }
    return best;  // best.b_min == hi: every decrease of hi came from a feasible probe
}

// Saving of a pooled design over individual screening, in percent: testing
// everyone individually uses n tests, the pooled design b_min.
inline double expected_gain_percent(long n, long b_min) {
    if (b_min < 1 || b_min > n)
        throw Error("expected_gain_percent requires 1 <= b_min <= n");
    return 100.0 * static_cast<double>(n - b_min) / static_cast<double>(n);
}

}  // namespace pooltest
