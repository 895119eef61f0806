#pragma once

// Monte Carlo replication of the two-stage testing protocol: each group of
// size >= 2 receives one pool test (positive with probability Se if any
// member is truly infected, 1-Sp otherwise) and, when the pool fires, one
// retest per member; singleton groups are tested individually. Used to
// validate the analytic expectations empirically.

#include <cmath>
#include <cstdint>
#include <cstddef>

#include "pooltest/metrics.hpp"
#include "pooltest/model.hpp"

namespace pooltest {

namespace detail {

// SplitMix64: tiny, seedable, and with a closed-form jump (the state is a
// counter), so per-replication streams can be derived independently and
// replications partitioned across workers without coordination.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    // The output finalizer; a bijection on 64-bit values.
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ull;
        return mix(state_);
    }

    // Uniform double in [0, 1), identical across platforms (no dependence
    // on implementation-defined std::uniform_real_distribution).
    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return next_double() < p; }

private:
    std::uint64_t state_;
};

inline SplitMix64 replication_stream(std::uint64_t seed, std::uint64_t replication) {
    // Key the stream by replication index, then scramble the start state
    // through the finalizer. Without the scramble, starts spaced one
    // golden-ratio stride apart would make consecutive replications read
    // almost the same window of outputs (each draw advances by the same
    // stride), silently correlating replications.
    return SplitMix64(SplitMix64::mix(seed + (replication + 1) * 0x9E3779B97F4A7C15ull));
}

}  // namespace detail

struct SimulationReport {
    std::uint64_t replications = 0;
    double mean_fn = 0.0;
    double mean_fp = 0.0;
    double mean_tests = 0.0;
    double stderr_fn = 0.0;     // sample standard deviation / sqrt(replications)
    double stderr_fp = 0.0;
    double stderr_tests = 0.0;
    std::uint64_t seed = 0;
};

// Simulates the protocol over `replications` independent replications.
// Deterministic given the seed: replication r draws, in order, every
// member's true status (population order), then per group the pool test
// and, if positive, the member retests.
inline SimulationReport simulate_partition(const Partition& partition,
                                           const TestCharacteristics& tc,
                                           std::uint64_t replications, std::uint64_t seed) {
    if (replications < 1) throw Error("replications must be at least 1");
    validate_test_characteristics(tc);
    const double se = tc.sensitivity;
    const double sp = tc.specificity;

    double sum_fn = 0.0, sum_fp = 0.0, sum_tests = 0.0;
    double sumsq_fn = 0.0, sumsq_fp = 0.0, sumsq_tests = 0.0;

    std::vector<char> status;
    for (std::uint64_t rep = 0; rep < replications; ++rep) {
        detail::SplitMix64 rng = detail::replication_stream(seed, rep);
        std::uint64_t fn = 0, fp = 0, tests = 0;
        for (const Group& g : partition.groups) {
            status.resize(g.members.size());
            bool any_infected = false;
            for (std::size_t k = 0; k < g.members.size(); ++k) {
                status[k] = rng.bernoulli(g.members[k].risk) ? 1 : 0;
                any_infected |= status[k] != 0;
            }
            if (g.members.size() == 1) {
                ++tests;
                const bool reported = rng.bernoulli(status[0] ? se : 1.0 - sp);
                if (status[0] && !reported) ++fn;
                if (!status[0] && reported) ++fp;
                continue;
            }
            ++tests;
            const bool pool_positive = rng.bernoulli(any_infected ? se : 1.0 - sp);
            if (!pool_positive) {
                // Whole pool cleared: every infected member is missed.
                for (char s : status) fn += s;
                continue;
            }
            tests += g.members.size();
            for (char s : status) {
                const bool reported = rng.bernoulli(s ? se : 1.0 - sp);
                if (s && !reported) ++fn;
                if (!s && reported) ++fp;
            }
        }
        const double dfn = static_cast<double>(fn);
        const double dfp = static_cast<double>(fp);
        const double dt = static_cast<double>(tests);
        sum_fn += dfn;
        sum_fp += dfp;
        sum_tests += dt;
        sumsq_fn += dfn * dfn;
        sumsq_fp += dfp * dfp;
        sumsq_tests += dt * dt;
    }

    const double r = static_cast<double>(replications);
    auto std_error = [&](double sum, double sumsq) {
        if (replications < 2) return 0.0;
        const double mean = sum / r;
        double variance = (sumsq - r * mean * mean) / (r - 1.0);
        if (variance < 0.0) variance = 0.0;  // rounding at zero variance
        return std::sqrt(variance / r);
    };

    SimulationReport report;
    report.replications = replications;
    report.seed = seed;
    report.mean_fn = sum_fn / r;
    report.mean_fp = sum_fp / r;
    report.mean_tests = sum_tests / r;
    report.stderr_fn = std_error(sum_fn, sumsq_fn);
    report.stderr_fp = std_error(sum_fp, sumsq_fp);
    report.stderr_tests = std_error(sum_tests, sumsq_tests);
    return report;
}

// True iff every empirical mean is within z standard errors of the given
// reference value. With zero standard error the mean must match exactly.
inline bool within_z(const SimulationReport& report, double fn, double fp, double tests,
                     double z) {
    if (!(z > 0.0)) throw Error("z must be positive");
    return std::abs(report.mean_fn - fn) <= z * report.stderr_fn &&
           std::abs(report.mean_fp - fp) <= z * report.stderr_fp &&
           std::abs(report.mean_tests - tests) <= z * report.stderr_tests;
}

struct ComparisonResult {
    bool within = false;
    SimulationReport report;
    PartitionMetrics analytic;
};

// Simulates the partition and checks the empirical means against the
// closed-form expectations.
inline ComparisonResult compare_to_analytic(const Partition& partition,
                                            const TestCharacteristics& tc,
                                            std::uint64_t replications, std::uint64_t seed,
                                            double z = 4.0) {
    if (!(z > 0.0)) throw Error("z must be positive");
    ComparisonResult result;
    result.analytic = partition_metrics(partition.groups, tc, 0.5);
    result.report = simulate_partition(partition, tc, replications, seed);
    result.within = within_z(result.report, result.analytic.expected_fn,
                             result.analytic.expected_fp, result.analytic.expected_tests, z);
    return result;
}

}  // namespace pooltest
