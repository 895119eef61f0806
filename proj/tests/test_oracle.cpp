#include <catch2/catch_amalgamated.hpp>

#include <pooltest/metrics.hpp>
#include <pooltest/oracle.hpp>
#include <pooltest/solver.hpp>

#include <limits>
#include <random>

using namespace pooltest;
using Catch::Matchers::WithinAbs;

namespace {

Population ladder(std::size_t n, double lo, double step) {
    std::vector<Subject> s;
    for (std::size_t i = 0; i < n; ++i)
        s.push_back({"s" + std::to_string(i + 1), lo + step * static_cast<double>(i)});
    return validate_population(s);
}

Group group_of(std::initializer_list<double> risks) {
    Group g;
    g.start_index = 1;
    g.size = risks.size();
    std::size_t i = 0;
    for (double r : risks) g.members.push_back({"g" + std::to_string(++i), r});
    return g;
}

Population random_population(std::mt19937_64& rng, std::size_t n, bool distinct) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Subject> s;
    for (std::size_t i = 0; i < n; ++i) {
        double r = 0.5 * unit(rng);
        if (distinct) r = 0.01 + 0.9 * (static_cast<double>(i) + unit(rng) * 0.9) /
                              static_cast<double>(n + 1);
        s.push_back({"r" + std::to_string(i + 1), r});
    }
    return validate_population(s);
}

}  // namespace

TEST_CASE("exact expectations match hand computations for a singleton") {
    const auto e = exact_group_expectations(group_of({0.05}), {0.7, 0.95});
    CHECK_THAT(e.fn, WithinAbs(0.015, 1e-12));
    CHECK_THAT(e.fp, WithinAbs(0.0475, 1e-12));
    CHECK_THAT(e.tests, WithinAbs(1.0, 1e-12));
}

TEST_CASE("exact expectations match the closed forms on a three-subject group") {
    const auto e = exact_group_expectations(group_of({0.06, 0.07, 0.08}), {0.75, 0.75});
    CHECK_THAT(e.fn, WithinAbs(0.091875, 1e-9));
    CHECK_THAT(e.fp, WithinAbs(0.221526, 1e-6));
    CHECK_THAT(e.tests, WithinAbs(2.043604, 1e-6));
}

TEST_CASE("exhaustive ordered-partition search on the eight-subject ladder") {
    const Population pop = ladder(8, 0.01, 0.01);
    const auto rep =
        enumerate_ordered_optimum(pop, {0.75, 0.75}, {0.6, 8, 6.0});
    REQUIRE(rep.feasible);
    CHECK_THAT(rep.best_objective, WithinAbs(0.3119499520, 1e-9));
    // Cut points between 8 subjects: 2^7 compositions examined.
    CHECK(rep.candidates_examined == 128);
    CHECK(rep.ties == 1);
    REQUIRE(rep.best_grouping.size() == 3);
    CHECK(rep.best_grouping[0] == std::vector<std::size_t>{1, 2, 3, 4});
    CHECK(rep.best_grouping[1] == std::vector<std::size_t>{5, 6});
    CHECK(rep.best_grouping[2] == std::vector<std::size_t>{7, 8});
    REQUIRE(rep.best_partition.groups.size() == 3);
    CHECK(rep.best_partition.groups[0].size == 4);
}

TEST_CASE("a size cap of one admits exactly one composition") {
    const Population pop = ladder(3, 0.1, 0.1);
    const auto rep = enumerate_ordered_optimum(pop, {0.7, 1.0}, {1.0, 1, 3.0});
    REQUIRE(rep.feasible);
    CHECK(rep.candidates_examined == 1);
    CHECK(rep.ties == 1);
    // Three forced singletons at lambda = 1: objective = (1 - se) * sum(p).
    CHECK_THAT(rep.best_objective, WithinAbs(0.3 * 0.6, 1e-12));
}

TEST_CASE("exhaustive search and the solver agree on random instances") {
    std::mt19937_64 rng(4242);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 2 + rng() % 7;
        const Population pop = random_population(rng, n, false);
        const TestCharacteristics tc{0.6 + 0.4 * unit(rng), 0.6 + 0.4 * unit(rng)};
        const std::size_t cap = 1 + rng() % n;
        const double budget = std::ceil(static_cast<double>(n) / static_cast<double>(cap)) +
                              unit(rng) * static_cast<double>(n);
        const DesignConfig cfg{unit(rng), cap, budget};
        const auto oracle = enumerate_ordered_optimum(pop, tc, cfg);
        const auto solved = solve(pop, tc, cfg, SolveOptions{true});
        REQUIRE(oracle.feasible == solved.feasible);
        if (oracle.feasible)
            CHECK_THAT(solved.metrics.objective, WithinAbs(oracle.best_objective, 1e-9));
    }
}

TEST_CASE("unordered partitions cannot beat ordered ones") {
    const Population pop = ladder(4, 0.05, 0.07);
    const TestCharacteristics tc{0.8, 0.9};
    const DesignConfig cfg{0.5, 4, 4.0};
    const auto ordered = enumerate_ordered_optimum(pop, tc, cfg);
    const auto all = enumerate_all_partitions_optimum(pop, tc, cfg);
    REQUIRE(ordered.feasible);
    REQUIRE(all.feasible);
    // Bell(4) = 15 set partitions.
    CHECK(all.candidates_examined == 15);
    CHECK_THAT(all.best_objective, WithinAbs(ordered.best_objective, 1e-12));
    CHECK_THAT(all.best_objective, WithinAbs(0.146322, 1e-9));
}

TEST_CASE("contiguity of the unordered optimum holds on random distinct-risk instances") {
    std::mt19937_64 rng(555);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 15; ++trial) {
        const std::size_t n = 3 + rng() % 6;
        const Population pop = random_population(rng, n, true);
        const TestCharacteristics tc{0.65 + 0.35 * unit(rng), 0.65 + 0.35 * unit(rng)};
        const std::size_t cap = 2 + rng() % n;
        const double budget = 1.0 + unit(rng) * static_cast<double>(n);
        const DesignConfig cfg{unit(rng), cap, budget};
        const auto all = enumerate_all_partitions_optimum(pop, tc, cfg);
        const auto ordered = enumerate_ordered_optimum(pop, tc, cfg);
        REQUIRE(all.feasible == ordered.feasible);
        if (all.feasible)
            CHECK_THAT(all.best_objective, WithinAbs(ordered.best_objective, 1e-9));
    }
}

TEST_CASE("a one-subject population has a single trivial design") {
    const Population pop = validate_population({{"only", 0.2}});
    const auto rep = enumerate_ordered_optimum(pop, {0.7, 0.95}, {0.5, 8, 1.0});
    REQUIRE(rep.feasible);
    CHECK(rep.candidates_examined == 1);
    CHECK(rep.best_grouping == std::vector<std::vector<std::size_t>>{{1}});
}

TEST_CASE("infeasible budgets are reported as such") {
    const Population pop = ladder(5, 0.1, 0.05);
    const auto rep = enumerate_ordered_optimum(pop, {0.7, 0.95}, {0.5, 1, 4.0});
    CHECK_FALSE(rep.feasible);
    CHECK(rep.best_partition.groups.empty());
    CHECK(rep.best_objective == std::numeric_limits<double>::infinity());
}

TEST_CASE("enumeration size caps are enforced") {
    const Population big = ladder(21, 0.01, 0.01);
    CHECK_THROWS_AS(enumerate_ordered_optimum(big, {0.7, 0.95}, {0.5, 8, 21.0}),
                    InstanceTooLargeError);
    const Population mid = ladder(11, 0.01, 0.01);
    CHECK_THROWS_AS(enumerate_all_partitions_optimum(mid, {0.7, 0.95}, {0.5, 8, 11.0}),
                    InstanceTooLargeError);
    Group wide;
    wide.start_index = 1;
    wide.size = 13;
    for (int i = 0; i < 13; ++i) wide.members.push_back({"w" + std::to_string(i), 0.1});
    CHECK_THROWS_AS(exact_group_expectations(wide, {0.7, 0.95}), InstanceTooLargeError);
    CHECK_THROWS_WITH(enumerate_ordered_optimum(big, {0.7, 0.95}, {0.5, 8, 21.0}),
                      Catch::Matchers::ContainsSubstring("at most 20"));
}

TEST_CASE("ties are counted within tolerance") {
    // Two identical subjects, cap 1: the two singletons are forced; exactly one
    // composition is feasible at budget 2, so exactly one optimum.
    const Population pop = validate_population({{"a", 0.3}, {"b", 0.3}});
    const auto rep = enumerate_ordered_optimum(pop, {0.7, 0.95}, {0.5, 1, 2.0});
    REQUIRE(rep.feasible);
    CHECK(rep.ties == 1);

    // With the cap lifted and a generous budget both {ab} and {a}{b} are
    // examined; they differ in objective, so the optimum is still unique.
    const auto rep2 = enumerate_ordered_optimum(pop, {0.7, 0.95}, {0.5, 2, 2.0});
    REQUIRE(rep2.feasible);
    CHECK(rep2.candidates_examined == 2);
    CHECK(rep2.ties == 1);
}
