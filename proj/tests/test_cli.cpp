#include <catch2/catch_amalgamated.hpp>

#include <pooltest/cli.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace pooltest;
using Catch::Matchers::ContainsSubstring;

namespace {

namespace fs = std::filesystem;

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

RunResult invoke(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    RunResult r;
    r.exit_code = cli::run(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

nlohmann::json parse_report(const RunResult& r) {
    INFO("stdout: " << r.out);
    INFO("stderr: " << r.err);
    return nlohmann::json::parse(r.out);
}

class TempFile {
public:
    TempFile(const std::string& stem, const std::string& content)
        : path_(fs::temp_directory_path() / stem) {
        std::ofstream f(path_, std::ios::binary);
        f << content;
    }
    ~TempFile() { std::error_code ec; fs::remove(path_, ec); }
    std::string str() const { return path_.string(); }

private:
    fs::path path_;
};

}  // namespace

TEST_CASE("solve on a builtin instance emits a machine-readable report") {
    const auto r = invoke({"solve", "--instance", "inst1", "--max-group-size", "8",
                           "--budget", "42", "--format", "json"});
    REQUIRE(r.exit_code == cli::kExitOk);
    const auto doc = parse_report(r);
    CHECK(doc.at("schema") == cli::kReportSchema);
    CHECK(doc.at("command") == "solve");
    CHECK(doc.at("instance") == "inst1");
    CHECK(doc.at("population") == 54);
    CHECK(doc.at("feasible") == true);
    CHECK(doc.at("group_count") == 14);
    CHECK(std::abs(doc.at("objective").get<double>() - 6.2986791954) < 1e-6);
    CHECK(doc.at("expected_tests").get<double>() <= 42.0 + 1e-9);
    CHECK(doc.at("parameters").at("se") == 0.7);
    CHECK(doc.at("parameters").at("sp") == 0.95);
    CHECK(doc.at("parameters").at("lambda") == 0.8);
    CHECK(doc.at("groups").size() == 14);
    // Every group row carries ids and its own expectations.
    const auto& g0 = doc.at("groups").at(0);
    CHECK(g0.contains("ids"));
    CHECK(g0.contains("expected_tests"));
    CHECK(doc.at("timing").contains("wall_seconds"));
}

TEST_CASE("solve table output mentions the design summary") {
    const auto r = invoke({"solve", "--instance", "inst1", "--max-group-size", "8",
                           "--budget", "42"});
    REQUIRE(r.exit_code == cli::kExitOk);
    CHECK_FALSE(r.out.empty());
    CHECK_THAT(r.out, ContainsSubstring("objective"));
}

TEST_CASE("identical solve invocations agree outside the timing envelope") {
    const std::vector<std::string> args{"solve", "--instance", "inst3",
                                        "--max-group-size", "8", "--budget", "104",
                                        "--format", "json"};
    auto a = parse_report(invoke(args));
    auto b = parse_report(invoke(args));
    a.erase("timing");
    b.erase("timing");
    CHECK(a.dump() == b.dump());
}

TEST_CASE("min-budget reports the smallest feasible budget and the gain") {
    const auto r = invoke({"min-budget", "--instance", "inst6", "--max-group-size", "8",
                           "--format", "json"});
    REQUIRE(r.exit_code == cli::kExitOk);
    const auto doc = parse_report(r);
    CHECK(doc.at("b_min") == 66);
    CHECK(std::abs(doc.at("gain_percent").get<double>() - 34.0) < 1e-9);
    CHECK(doc.at("feasible") == true);

    const auto linear = invoke({"min-budget", "--instance", "inst6", "--max-group-size",
                                "8", "--format", "json", "--linear-scan"});
    REQUIRE(linear.exit_code == cli::kExitOk);
    CHECK(parse_report(linear).at("b_min") == 66);
}

TEST_CASE("an infeasible budget exits with the infeasibility code") {
    TempFile csv("pooltest_cli_two.csv", "id,risk\na,0.1\nb,0.2\n");
    const auto r = invoke({"solve", "--instance", csv.str(), "--budget", "0.5"});
    CHECK(r.exit_code == cli::kExitInfeasible);

    const auto json = invoke({"solve", "--instance", csv.str(), "--budget", "0.5",
                              "--format", "json"});
    CHECK(json.exit_code == cli::kExitInfeasible);
    CHECK(parse_report(json).at("feasible") == false);
}

TEST_CASE("min-budget surfaces populations with no feasible integer budget") {
    TempFile csv("pooltest_cli_nofeas.csv", "id,risk\na,0.1\nb,0.2\n");
    const auto r = invoke({"min-budget", "--instance", csv.str(),
                           "--max-group-size", "1"});
    CHECK(r.exit_code == cli::kExitInfeasible);
    CHECK_THAT(r.err, ContainsSubstring("error"));
}

TEST_CASE("usage problems exit with the usage code") {
    CHECK(invoke({"frobnicate"}).exit_code == cli::kExitUsage);
    CHECK(invoke({}).exit_code == cli::kExitUsage);
    // --budget is required for solve.
    CHECK(invoke({"solve", "--instance", "inst1"}).exit_code == cli::kExitUsage);
    // se outside (0, 1].
    CHECK(invoke({"solve", "--instance", "inst1", "--budget", "40", "--se", "1.7"})
              .exit_code == cli::kExitUsage);
    const auto help = invoke({"--help"});
    CHECK(help.exit_code == cli::kExitOk);
    CHECK_THAT(help.out, ContainsSubstring("solve"));
}

TEST_CASE("input problems exit with the input code") {
    const auto missing = invoke({"solve", "--instance", "no-such-thing",
                                 "--budget", "10"});
    CHECK(missing.exit_code == cli::kExitInput);
    CHECK_THAT(missing.err, ContainsSubstring("unknown instance"));

    TempFile bad("pooltest_cli_bad.csv", "id,risk\nx,not-a-number\n");
    const auto malformed = invoke({"solve", "--instance", bad.str(), "--budget", "10"});
    CHECK(malformed.exit_code == cli::kExitInput);

    const auto chisq_bad = invoke({"chisq", "--a-pos", "5", "--a-tot", "0",
                                   "--b-pos", "1", "--b-tot", "10"});
    CHECK(chisq_bad.exit_code == cli::kExitInput);
}

TEST_CASE("explicit flags override instance-provided parameters") {
    const auto r = invoke({"solve", "--instance", "inst1", "--budget", "54",
                           "--se", "0.99", "--lambda", "0.5", "--format", "json"});
    REQUIRE(r.exit_code == cli::kExitOk);
    const auto doc = parse_report(r);
    CHECK(doc.at("parameters").at("se") == 0.99);
    CHECK(doc.at("parameters").at("lambda") == 0.5);
    CHECK(doc.at("parameters").at("sp") == 0.95);
}

TEST_CASE("chisq reports the two-proportion comparison") {
    const auto r = invoke({"chisq", "--a-pos", "10", "--a-tot", "100", "--b-pos", "30",
                           "--b-tot", "100", "--format", "json"});
    REQUIRE(r.exit_code == cli::kExitOk);
    const auto doc = parse_report(r);
    CHECK(std::abs(doc.at("statistic").get<double>() - 12.5) < 1e-12);
    CHECK(doc.at("significant_at_5pct") == true);
    CHECK(doc.at("degenerate") == false);

    const auto degen = invoke({"chisq", "--a-pos", "0", "--a-tot", "10", "--b-pos", "0",
                               "--b-tot", "10"});
    CHECK(degen.exit_code == cli::kExitOk);
    CHECK_THAT(degen.out, ContainsSubstring("degenerate"));
}

TEST_CASE("simulate validates the solved design against its own expectations") {
    TempFile csv("pooltest_cli_sim.csv",
                 "id,risk\na,0.05\nb,0.10\nc,0.15\nd,0.20\ne,0.25\nf,0.30\n");
    const auto r = invoke({"simulate", "--instance", csv.str(), "--budget", "6",
                           "--max-group-size", "3", "--replications", "20000",
                           "--seed", "7", "--format", "json"});
    REQUIRE(r.exit_code == cli::kExitOk);
    const auto doc = parse_report(r);
    CHECK(doc.at("simulation").at("replications") == 20000);
    CHECK(doc.at("simulation").at("within_z") == true);
    CHECK(doc.at("simulation").at("seed") == 7);

    const auto infeasible = invoke({"simulate", "--instance", csv.str(), "--budget",
                                    "0.5", "--replications", "100"});
    CHECK(infeasible.exit_code == cli::kExitInfeasible);
}

TEST_CASE("verify runs randomized equivalence trials clean") {
    const auto r = invoke({"verify", "--n", "6", "--trials", "25", "--seed", "11"});
    REQUIRE(r.exit_code == cli::kExitOk);
    CHECK_THAT(r.out, ContainsSubstring("trials: 25"));
    CHECK_THAT(r.out, ContainsSubstring("mismatches: 0"));
    CHECK(r.err.empty());
}

TEST_CASE("paper-tables reproduces the six-instance benchmark summary") {
    const auto r = invoke({"paper-tables", "--format", "json"});
    REQUIRE(r.exit_code == cli::kExitOk);
    const auto doc = parse_report(r);
    REQUIRE(doc.at("instances").size() == 6);
    const auto& first = doc.at("instances").at(0);
    CHECK(first.at("instance") == "inst1");
    CHECK(first.at("population") == 54);
    CHECK(first.at("l8").at("b") == 42);
    CHECK(first.at("l32").at("b") == 40);
    CHECK(first.at("l32_at_l8_budget").at("b") == 42);
    CHECK(std::abs(first.at("l8").at("gain_percent").get<double>() - 100.0 * 12 / 54) <
          1e-9);

    const auto table = invoke({"paper-tables"});
    REQUIRE(table.exit_code == cli::kExitOk);
    CHECK_THAT(table.out, ContainsSubstring("inst6"));
    CHECK_THAT(table.out, ContainsSubstring("Fixed budget"));
}
