#pragma once

// Command-line front end: solving, budget search, Monte Carlo validation,
// randomized oracle verification, benchmark-table reproduction, and the
// chi-square utility, with human-readable tables or machine-readable JSON
// (schema "pooltest-report/1"). Exit codes: 0 success, 1 usage error,
// 2 input/parse error, 3 infeasible, 4 verification failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pooltest/instances.hpp"
#include "pooltest/metrics.hpp"
#include "pooltest/model.hpp"
#include "pooltest/oracle.hpp"
#include "pooltest/simulator.hpp"
#include "pooltest/solver.hpp"

namespace pooltest::cli {

inline constexpr const char* kReportSchema = "pooltest-report/1";

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInput = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitVerification = 4;

struct ResolvedInstance {
    std::string name;
    Population population;
    TestCharacteristics tc;
    double lambda = 0.8;
    std::optional<std::string> warning;
};

// Resolves --instance: an existing .csv/.json file by extension, else a
// builtin name (inst1..inst6). File- or builtin-provided test parameters
// apply first; explicit flags override them; otherwise the benchmark
// defaults se=0.7, sp=0.95, lambda=0.8.
inline ResolvedInstance resolve_instance(const std::string& ref, std::optional<double> se,
                                         std::optional<double> sp,
                                         std::optional<double> lambda) {
    TestCharacteristics tc{0.7, 0.95};
    double lam = 0.8;
    std::string name = ref;
    std::optional<Population> pop;

    const std::filesystem::path path(ref);
    if (std::filesystem::exists(path)) {
        const std::string ext = path.extension().string();
        if (ext == ".csv") {
            pop = load_population_csv(path);
            name = path.stem().string();
        } else if (ext == ".json") {
            const InstanceSpec spec = load_instance_json(path);
            tc = spec.tc;
            lam = spec.lambda;
            name = spec.name;
            pop = disaggregate(spec);
        } else {
            throw Error("unsupported instance file extension '" + ext +
                        "' (expected .csv or .json)");
        }
    } else if (std::optional<InstanceSpec> builtin = find_builtin_instance(ref)) {
        tc = builtin->tc;
        lam = builtin->lambda;
        pop = disaggregate(*builtin);
    } else {
        throw Error("unknown instance '" + ref +
                    "': not a builtin name (inst1..inst6) and no such file");
    }

    if (se) tc.sensitivity = *se;
    if (sp) tc.specificity = *sp;
    if (lambda) lam = *lambda;
    ResolvedInstance resolved{std::move(name), std::move(*pop), tc, lam,
                              validate_test_characteristics(tc)};
    return resolved;
}

namespace detail {

inline double elapsed_seconds(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Stable report portion first; wall-clock time lives in the volatile
// "timing" envelope so identical invocations stay bit-identical elsewhere.
inline nlohmann::json report_document(const std::string& command, const ResolvedInstance& inst,
                                      const DesignConfig& cfg, const SolveResult& res,
                                      double wall_seconds) {
    nlohmann::json doc;
    doc["schema"] = kReportSchema;
    doc["command"] = command;
    doc["instance"] = inst.name;
    doc["parameters"] = {{"se", inst.tc.sensitivity},
                         {"sp", inst.tc.specificity},
                         {"lambda", inst.lambda},
                         {"max_group_size", cfg.max_group_size},
                         {"budget", cfg.budget}};
    doc["population"] = inst.population.size();
    doc["feasible"] = res.feasible;
    if (res.feasible) {
        doc["objective"] = res.metrics.objective;
        doc["expected_fn"] = res.metrics.expected_fn;
        doc["expected_fp"] = res.metrics.expected_fp;
        doc["expected_tests"] = res.metrics.expected_tests;
        doc["group_count"] = res.partition.groups.size();
        std::size_t smallest = inst.population.size(), largest = 0;
        nlohmann::json groups = nlohmann::json::array();
        for (const Group& g : res.partition.groups) {
            smallest = std::min(smallest, g.size);
            largest = std::max(largest, g.size);
            const GroupMetrics m = group_metrics(g, inst.tc, inst.lambda);
            nlohmann::json ids = nlohmann::json::array();
            for (const Subject& s : g.members) ids.push_back(s.id);
            groups.push_back({{"start_index", g.start_index},
                              {"size", g.size},
                              {"ids", std::move(ids)},
                              {"expected_fn", m.expected_fn},
                              {"expected_fp", m.expected_fp},
                              {"expected_tests", m.expected_tests},
                              {"cost", m.cost}});
        }
        doc["smallest_group"] = smallest;
        doc["largest_group"] = largest;
        doc["groups"] = std::move(groups);
    }
    doc["timing"] = {{"wall_seconds", wall_seconds}};
    return doc;
}

inline void print_solve_table(std::ostream& out, const ResolvedInstance& inst,
                              const DesignConfig& cfg, const SolveResult& res,
                              double wall_seconds) {
    out << "instance: " << inst.name << "  (" << inst.population.size() << " subjects)\n";
    out << std::fixed;
    out << "parameters: se=" << std::setprecision(3) << inst.tc.sensitivity
        << " sp=" << inst.tc.specificity << " lambda=" << inst.lambda
        << " L=" << cfg.max_group_size << " B=" << std::setprecision(4) << cfg.budget << "\n";
    if (!res.feasible) {
        out << "feasible: no (no partition meets the budget)\n";
        return;
    }
    out << "feasible: yes\n";
    out << std::setprecision(6) << "objective: " << res.metrics.objective
        << "  expected_fn: " << res.metrics.expected_fn
        << "  expected_fp: " << res.metrics.expected_fp
        << "  expected_tests: " << res.metrics.expected_tests << "\n";
    std::size_t smallest = inst.population.size(), largest = 0;
    for (const Group& g : res.partition.groups) {
        smallest = std::min(smallest, g.size);
        largest = std::max(largest, g.size);
    }
    out << "groups: " << res.partition.groups.size() << "  (sizes " << smallest << ".."
        << largest << ")\n";
    int idx = 0;
    for (const Group& g : res.partition.groups) {
        const GroupMetrics m = group_metrics(g, inst.tc, inst.lambda);
        out << "  " << std::setw(3) << ++idx << "  start=" << std::setw(3) << g.start_index
            << " size=" << std::setw(2) << g.size << "  cost=" << std::setprecision(6)
            << m.cost << " tests=" << m.expected_tests << "  ids=";
        for (std::size_t k = 0; k < g.members.size(); ++k)
            out << (k ? "," : "") << g.members[k].id;
        out << "\n";
    }
    out << std::setprecision(3) << "wall_seconds: " << wall_seconds << "\n";
}

struct SubcommandFlags {
    std::string instance;
    std::optional<double> se;
    std::optional<double> sp;
    std::optional<double> lambda;
    std::size_t max_group_size = 8;
    double budget = 0.0;
    std::string format = "table";
};

inline void add_common_options(CLI::App* sub, SubcommandFlags& flags, bool with_budget) {
    sub->add_option("--instance", flags.instance,
                    "builtin instance name (inst1..inst6) or path to a .csv/.json file")
        ->required();
    sub->add_option("--se", flags.se, "test sensitivity in [0,1]")->check(CLI::Range(0.0, 1.0));
    sub->add_option("--sp", flags.sp, "test specificity in [0,1]")->check(CLI::Range(0.0, 1.0));
    sub->add_option("--lambda", flags.lambda, "weight on expected false negatives in [0,1]")
        ->check(CLI::Range(0.0, 1.0));
    sub->add_option("--max-group-size", flags.max_group_size, "pool size cap L")
        ->check(CLI::Range(std::size_t{1}, std::size_t{100000}))
        ->capture_default_str();
    if (with_budget)
        sub->add_option("--budget", flags.budget, "expected total test budget B")
            ->required()
            ->check(CLI::NonNegativeNumber);
    sub->add_option("--format", flags.format, "output format")
        ->check(CLI::IsMember({"table", "json"}))
        ->capture_default_str();
}

}  // namespace detail

// Randomized cross-validation: the solver against exhaustive ordered
// enumeration on every trial, and against the all-set-partitions optimum
// on small distinct-risk trials (the ordered-optimality structure check).
// Draws come from the library's own generator, so a seed reproduces the
// exact trial sequence on any platform.
inline int run_verify(std::size_t max_n, std::uint64_t trials, std::uint64_t seed,
                      std::ostream& out, std::ostream& err) {
    pooltest::detail::SplitMix64 rng(seed);
    auto uniform_int = [&](std::size_t lo, std::size_t hi) {
        return lo + static_cast<std::size_t>(rng.next() % (hi - lo + 1));
    };
    auto uniform_real = [&](double lo, double hi) {
        return lo + rng.next_double() * (hi - lo);
    };

    std::uint64_t mismatches = 0;
    std::uint64_t structure_checked = 0;
    for (std::uint64_t t = 0; t < trials; ++t) {
        const std::size_t n = uniform_int(2, max_n);
        std::vector<Subject> subjects;
        subjects.reserve(n);
        for (std::size_t k = 1; k <= n; ++k)
            subjects.push_back(Subject{"s" + std::to_string(k), uniform_real(0.0, 0.5)});
        const Population pop = validate_population(std::move(subjects));
        const TestCharacteristics tc{uniform_real(0.6, 1.0), uniform_real(0.6, 1.0)};
        const double lambda = uniform_real(0.0, 1.0);
        const std::size_t cap = uniform_int(1, n);
        const std::size_t b_lo = (n + cap - 1) / cap;
        const DesignConfig cfg{lambda, cap, static_cast<double>(uniform_int(b_lo, n))};

        const SolveResult res = solve(pop, tc, cfg, SolveOptions{true});
        const OracleReport ordered = enumerate_ordered_optimum(pop, tc, cfg);

        std::string failure;
        if (res.feasible != ordered.feasible)
            failure = "solver and ordered enumeration disagree on feasibility";
        else if (res.feasible &&
                 std::abs(res.metrics.objective - ordered.best_objective) > 1e-9)
            failure = "solver objective differs from ordered enumeration";

        bool distinct = true;
        for (std::size_t k = 1; k < n && distinct; ++k)
            distinct = pop[k - 1].risk != pop[k].risk;
        if (failure.empty() && n <= 8 && distinct) {
            ++structure_checked;
            const OracleReport all = enumerate_all_partitions_optimum(pop, tc, cfg);
            if (all.feasible != ordered.feasible)
                failure = "ordered and unrestricted enumeration disagree on feasibility";
            else if (all.feasible &&
                     std::abs(all.best_objective - ordered.best_objective) > 1e-9)
                failure = "an unordered partition beats the ordered optimum";
        }

        if (!failure.empty()) {
            ++mismatches;
            err << "mismatch (trial " << t << "): " << failure << "\n  n=" << n
                << " se=" << tc.sensitivity << " sp=" << tc.specificity
                << " lambda=" << lambda << " L=" << cap << " B=" << cfg.budget << "\n  risks=";
            for (std::size_t k = 0; k < n; ++k) err << (k ? "," : "") << pop[k].risk;
            err << "\n  solver: feasible=" << res.feasible
                << " objective=" << res.metrics.objective
                << "  oracle: feasible=" << ordered.feasible
                << " objective=" << ordered.best_objective << "\n";
        }
    }
    out << "trials: " << trials << "  structure_checked: " << structure_checked
        << "  mismatches: " << mismatches << "\n";
    return mismatches == 0 ? kExitOk : kExitVerification;
}

// Reproduces the six-instance benchmark: minimum budgets and designs at
// L = 8 and L = 32, plus the fixed-budget comparison (both sizes at the
// L = 8 minimum budget).
inline int run_paper_tables(const std::string& format, std::ostream& out) {
    struct Cell {
        long b = 0;
        double objective = 0.0;
        std::size_t groups = 0, smallest = 0, largest = 0;
        double gain = 0.0, seconds = 0.0;
    };
    struct Row {
        std::string name;
        std::size_t n = 0;
        double min_risk = 0.0, max_risk = 0.0;
        Cell at[2];           // [0] -> L=8, [1] -> L=32
        Cell fixed32;         // L=32 at the L=8 minimum budget
    };
    const std::size_t cap_of[2] = {8, 32};

    std::vector<Row> rows;
    for (const InstanceSpec& spec : builtin_paper_instances()) {
        const Population pop = disaggregate(spec);
        Row row;
        row.name = spec.name;
        row.n = pop.size();
        row.min_risk = pop[0].risk;
        row.max_risk = pop[pop.size() - 1].risk;

        auto fill = [&](Cell& cell, const SolveResult& res) {
            cell.objective = res.metrics.objective;
            cell.groups = res.partition.groups.size();
            cell.smallest = pop.size();
            cell.largest = 0;
            for (const Group& g : res.partition.groups) {
                cell.smallest = std::min(cell.smallest, g.size);
                cell.largest = std::max(cell.largest, g.size);
            }
        };
        for (int li = 0; li < 2; ++li) {
            const auto start = std::chrono::steady_clock::now();
            const MinBudgetResult mb =
                minimum_feasible_budget(pop, spec.tc, spec.lambda, cap_of[li]);
            const double seconds = detail::elapsed_seconds(start);
            fill(row.at[li], mb.result);
            row.at[li].b = mb.b_min;
            row.at[li].gain = expected_gain_percent(static_cast<long>(pop.size()), mb.b_min);
            row.at[li].seconds = seconds;
        }
        {
            const auto start = std::chrono::steady_clock::now();
            const DesignConfig cfg{spec.lambda, 32, static_cast<double>(row.at[0].b)};
            const SolveResult res = solve(pop, spec.tc, cfg);
            fill(row.fixed32, res);
            row.fixed32.b = row.at[0].b;
            row.fixed32.gain = row.at[0].gain;
            row.fixed32.seconds = detail::elapsed_seconds(start);
        }
        rows.push_back(std::move(row));
    }

    if (format == "json") {
        nlohmann::json doc;
        doc["schema"] = kReportSchema;
        doc["command"] = "paper-tables";
        nlohmann::json items = nlohmann::json::array();
        for (const Row& row : rows) {
            auto cell_json = [](const Cell& c) {
                return nlohmann::json{{"b", c.b},
                                      {"objective", c.objective},
                                      {"groups", c.groups},
                                      {"smallest_group", c.smallest},
                                      {"largest_group", c.largest},
                                      {"gain_percent", c.gain}};
            };
            items.push_back({{"instance", row.name},
                             {"population", row.n},
                             {"min_risk", row.min_risk},
                             {"max_risk", row.max_risk},
                             {"l8", cell_json(row.at[0])},
                             {"l32", cell_json(row.at[1])},
                             {"l32_at_l8_budget", cell_json(row.fixed32)}});
        }
        doc["instances"] = std::move(items);
        out << doc.dump(2) << "\n";
        return kExitOk;
    }

    out << "Minimum-budget designs (L = 8 and L = 32)\n";
    out << std::left << std::setw(7) << "inst" << std::right << std::setw(5) << "N"
        << std::setw(9) << "minRisk" << std::setw(9) << "maxRisk" << std::setw(6) << "B8"
        << std::setw(6) << "B32" << std::setw(9) << "obj8" << std::setw(9) << "obj32"
        << std::setw(5) << "G8" << std::setw(5) << "G32" << std::setw(6) << "min8"
        << std::setw(6) << "min32" << std::setw(6) << "max8" << std::setw(7) << "max32"
        << std::setw(8) << "gain8" << std::setw(8) << "gain32" << std::setw(9) << "cpu(s)"
        << "\n";
    out << std::fixed;
    for (const Row& row : rows) {
        out << std::left << std::setw(7) << row.name << std::right << std::setw(5) << row.n
            << std::setprecision(3) << std::setw(9) << row.min_risk << std::setw(9)
            << row.max_risk << std::setw(6) << row.at[0].b << std::setw(6) << row.at[1].b
            << std::setprecision(2) << std::setw(9) << row.at[0].objective << std::setw(9)
            << row.at[1].objective << std::setw(5) << row.at[0].groups << std::setw(5)
            << row.at[1].groups << std::setw(6) << row.at[0].smallest << std::setw(6)
            << row.at[1].smallest << std::setw(6) << row.at[0].largest << std::setw(7)
            << row.at[1].largest << std::setw(8) << row.at[0].gain << std::setw(8)
            << row.at[1].gain << std::setprecision(3) << std::setw(9)
            << row.at[0].seconds + row.at[1].seconds << "\n";
    }
    out << "\nFixed budget (B = minimum at L = 8), L = 8 vs L = 32\n";
    out << std::left << std::setw(7) << "inst" << std::right << std::setw(5) << "B"
        << std::setw(9) << "obj8" << std::setw(9) << "obj32" << std::setw(5) << "G8"
        << std::setw(5) << "G32" << std::setw(8) << "gain" << "\n";
    for (const Row& row : rows) {
        out << std::left << std::setw(7) << row.name << std::right << std::setw(5)
            << row.fixed32.b << std::setprecision(2) << std::setw(9) << row.at[0].objective
            << std::setw(9) << row.fixed32.objective << std::setw(5) << row.at[0].groups
            << std::setw(5) << row.fixed32.groups << std::setw(8) << row.fixed32.gain << "\n";
    }
    return kExitOk;
}

// Parses and executes one invocation. `args` excludes the program name.
// All output goes to the provided streams, making the entry point
// embeddable in tests.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"pooled-testing design toolkit"};
    app.name("pooltest");
    app.require_subcommand(1);

    detail::SubcommandFlags solve_flags;
    CLI::App* solve_cmd =
        app.add_subcommand("solve", "solve one design problem at a fixed budget");
    detail::add_common_options(solve_cmd, solve_flags, /*with_budget=*/true);

    detail::SubcommandFlags minb_flags;
    bool linear_scan = false;
    CLI::App* minb_cmd = app.add_subcommand(
        "min-budget", "find the smallest feasible budget and solve at it");
    detail::add_common_options(minb_cmd, minb_flags, /*with_budget=*/false);
    minb_cmd->add_flag("--linear-scan", linear_scan,
                       "replicate the decrement-until-infeasible search instead of bisection");

    detail::SubcommandFlags sim_flags;
    std::uint64_t replications = 100000;
    std::uint64_t sim_seed = 42;
    double sim_z = 4.0;
    CLI::App* sim_cmd = app.add_subcommand(
        "simulate", "solve, then Monte Carlo validate the optimal design");
    detail::add_common_options(sim_cmd, sim_flags, /*with_budget=*/true);
    sim_cmd->add_option("--replications", replications, "number of replications")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sim_cmd->add_option("--seed", sim_seed, "simulation seed")->capture_default_str();
    sim_cmd->add_option("--z", sim_z, "acceptance threshold in standard errors")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    std::size_t verify_n = 12;
    std::uint64_t verify_trials = 200;
    std::uint64_t verify_seed = 20240801;
    CLI::App* verify_cmd = app.add_subcommand(
        "verify", "randomized solver-vs-oracle equivalence and structure checks");
    verify_cmd->add_option("--n", verify_n, "maximum instance size (at most 12)")
        ->check(CLI::Range(std::size_t{2}, std::size_t{12}))
        ->capture_default_str();
    verify_cmd->add_option("--trials", verify_trials, "number of randomized trials")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    verify_cmd->add_option("--seed", verify_seed, "randomization seed")->capture_default_str();

    std::string tables_format = "table";
    CLI::App* tables_cmd = app.add_subcommand(
        "paper-tables", "reproduce the six-instance benchmark tables at L=8 and L=32");
    tables_cmd->add_option("--format", tables_format, "output format")
        ->check(CLI::IsMember({"table", "json"}))
        ->capture_default_str();

    long a_pos = 0, a_tot = 0, b_pos = 0, b_tot = 0;
    std::string chisq_format = "table";
    CLI::App* chisq_cmd = app.add_subcommand(
        "chisq", "two-proportion chi-square test on positivity counts");
    chisq_cmd->add_option("--a-pos", a_pos, "positives in group A")->required();
    chisq_cmd->add_option("--a-tot", a_tot, "total tested in group A")->required();
    chisq_cmd->add_option("--b-pos", b_pos, "positives in group B")->required();
    chisq_cmd->add_option("--b-tot", b_tot, "total tested in group B")->required();
    chisq_cmd->add_option("--format", chisq_format, "output format")
        ->check(CLI::IsMember({"table", "json"}))
        ->capture_default_str();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (app.got_subcommand(solve_cmd)) {
            const ResolvedInstance inst = resolve_instance(solve_flags.instance, solve_flags.se,
                                                           solve_flags.sp, solve_flags.lambda);
            if (inst.warning) err << "warning: " << *inst.warning << "\n";
            const DesignConfig cfg{inst.lambda, solve_flags.max_group_size, solve_flags.budget};
            const auto start = std::chrono::steady_clock::now();
            const SolveResult res = solve(inst.population, inst.tc, cfg);
            const double seconds = detail::elapsed_seconds(start);
            if (solve_flags.format == "json")
                out << detail::report_document("solve", inst, cfg, res, seconds).dump(2) << "\n";
            else
                detail::print_solve_table(out, inst, cfg, res, seconds);
            return res.feasible ? kExitOk : kExitInfeasible;
        }

        if (app.got_subcommand(minb_cmd)) {
            const ResolvedInstance inst = resolve_instance(minb_flags.instance, minb_flags.se,
                                                           minb_flags.sp, minb_flags.lambda);
            if (inst.warning) err << "warning: " << *inst.warning << "\n";
            const auto start = std::chrono::steady_clock::now();
            const MinBudgetResult mb = minimum_feasible_budget(
                inst.population, inst.tc, inst.lambda, minb_flags.max_group_size,
                linear_scan ? BudgetSearchMode::linear_scan : BudgetSearchMode::binary_search);
            const double seconds = detail::elapsed_seconds(start);
            const double gain =
                expected_gain_percent(static_cast<long>(inst.population.size()), mb.b_min);
            const DesignConfig cfg{inst.lambda, minb_flags.max_group_size,
                                   static_cast<double>(mb.b_min)};
            if (minb_flags.format == "json") {
                nlohmann::json doc =
                    detail::report_document("min-budget", inst, cfg, mb.result, seconds);
                doc["b_min"] = mb.b_min;
                doc["gain_percent"] = gain;
                out << doc.dump(2) << "\n";
            } else {
                out << "b_min: " << mb.b_min << "  gain: " << std::fixed
                    << std::setprecision(2) << gain << "%\n";
                detail::print_solve_table(out, inst, cfg, mb.result, seconds);
            }
            return kExitOk;
        }

        if (app.got_subcommand(sim_cmd)) {
            const ResolvedInstance inst = resolve_instance(sim_flags.instance, sim_flags.se,
                                                           sim_flags.sp, sim_flags.lambda);
            if (inst.warning) err << "warning: " << *inst.warning << "\n";
            const DesignConfig cfg{inst.lambda, sim_flags.max_group_size, sim_flags.budget};
            const auto start = std::chrono::steady_clock::now();
            const SolveResult res = solve(inst.population, inst.tc, cfg);
            if (!res.feasible) {
                err << "error: no feasible design at budget " << cfg.budget << "\n";
                return kExitInfeasible;
            }
            const ComparisonResult cmp =
                compare_to_analytic(res.partition, inst.tc, replications, sim_seed, sim_z);
            const double seconds = detail::elapsed_seconds(start);
            if (sim_flags.format == "json") {
                nlohmann::json doc =
                    detail::report_document("simulate", inst, cfg, res, seconds);
                doc["simulation"] = {{"replications", cmp.report.replications},
                                     {"seed", cmp.report.seed},
                                     {"z", sim_z},
                                     {"mean_fn", cmp.report.mean_fn},
                                     {"mean_fp", cmp.report.mean_fp},
                                     {"mean_tests", cmp.report.mean_tests},
                                     {"stderr_fn", cmp.report.stderr_fn},
                                     {"stderr_fp", cmp.report.stderr_fp},
                                     {"stderr_tests", cmp.report.stderr_tests},
                                     {"within_z", cmp.within}};
                out << doc.dump(2) << "\n";
            } else {
                out << std::fixed << std::setprecision(6);
                out << "replications: " << cmp.report.replications << "  seed: "
                    << cmp.report.seed << "  z: " << std::setprecision(1) << sim_z << "\n"
                    << std::setprecision(6);
                out << "              analytic      empirical     stderr\n";
                out << "  fn        " << std::setw(12) << cmp.analytic.expected_fn << "  "
                    << std::setw(12) << cmp.report.mean_fn << "  " << std::setw(12)
                    << cmp.report.stderr_fn << "\n";
                out << "  fp        " << std::setw(12) << cmp.analytic.expected_fp << "  "
                    << std::setw(12) << cmp.report.mean_fp << "  " << std::setw(12)
                    << cmp.report.stderr_fp << "\n";
                out << "  tests     " << std::setw(12) << cmp.analytic.expected_tests << "  "
                    << std::setw(12) << cmp.report.mean_tests << "  " << std::setw(12)
                    << cmp.report.stderr_tests << "\n";
                out << "result: " << (cmp.within ? "PASS" : "FAIL")
                    << " (all means within z standard errors)\n";
            }
            return cmp.within ? kExitOk : kExitVerification;
        }

        if (app.got_subcommand(verify_cmd)) {
            return run_verify(verify_n, verify_trials, verify_seed, out, err);
        }

        if (app.got_subcommand(tables_cmd)) {
            return run_paper_tables(tables_format, out);
        }

        if (app.got_subcommand(chisq_cmd)) {
            const ChiSquareResult r = chi_square_two_proportions(a_pos, a_tot, b_pos, b_tot);
            if (chisq_format == "json") {
                nlohmann::json doc{{"schema", kReportSchema},
                                   {"command", "chisq"},
                                   {"a", {{"positives", a_pos}, {"total", a_tot}}},
                                   {"b", {{"positives", b_pos}, {"total", b_tot}}},
                                   {"statistic", r.statistic},
                                   {"p_value", r.p_value},
                                   {"significant_at_5pct", r.significant_at_5pct},
                                   {"degenerate", r.degenerate}};
                out << doc.dump(2) << "\n";
            } else {
                out << std::fixed << std::setprecision(6);
                out << "statistic: " << r.statistic << "\n";
                out << "p_value: " << r.p_value << "\n";
                out << "significant_at_5pct: " << (r.significant_at_5pct ? "yes" : "no") << "\n";
                if (r.degenerate)
                    out << "note: degenerate table (a zero margin); statistic undefined, "
                           "reported as non-significant\n";
            }
            return kExitOk;
        }
    } catch (const NoFeasibleBudgetError& e) {
        err << "error: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitUsage;  // unreachable: require_subcommand(1)
}

}  // namespace pooltest::cli
