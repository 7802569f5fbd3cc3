#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ofz/oracle.hpp"
#include "ofz/rng.hpp"
#include "ofz/tracer.hpp"
#include "ofz/vm.hpp"

namespace ofz {

struct TestCase {
    std::vector<uint8_t> bytes;
    uint64_t id = 0;
    std::optional<uint64_t> parent;
    std::string mutation;  // operator tag, "seed" for initial entries
};

// A queued mutation basis. cov_tag mirrors the +cov marker: set iff the
// entry added new blocks when it was admitted.
struct SeedEntry {
    TestCase testcase;
    uint32_t new_blocks = 0;
    bool cov_tag = false;
};

enum class ModeKind : uint8_t { Baseline, TraceAll, OracleFirst, Hybrid };

const char* mode_kind_name(ModeKind k);
ModeKind mode_kind_from_name(const std::string& name);

// Hybrid switches per test case on the rolling rate of coverage-increasing
// results over the last `window` executions: below `threshold` it runs the
// oracle path, at or above it traces everything.
struct TracingMode {
    ModeKind kind = ModeKind::OracleFirst;
    double threshold = 0.02;
    uint64_t window = 1000;

    static TracingMode baseline() { return {ModeKind::Baseline, 0, 1}; }
    static TracingMode trace_all() { return {ModeKind::TraceAll, 0, 1}; }
    static TracingMode oracle_first() { return {ModeKind::OracleFirst, 0, 1}; }
    static TracingMode hybrid(double threshold, uint64_t window = 1000) {
        return {ModeKind::Hybrid, threshold, window};
    }
};

struct FuzzStats {
    uint64_t executed = 0;
    uint64_t coverage_increasing = 0;
    uint64_t crashes_total = 0;
    uint64_t crashes_unique = 0;
    uint64_t timeouts = 0;
    uint64_t covered_blocks = 0;
    // Per-mode timing accumulators, nanoseconds.
    uint64_t exec_ns = 0;
    uint64_t trace_ns = 0;
    uint64_t stop_ns = 0;
    uint64_t unmodify_ns = 0;
    uint64_t start_ns = 0;
};

struct FuzzConfig {
    TracingMode mode;
    uint64_t rng_seed = 1;
    ExecBudget budget;
    uint64_t stop_n = 0;        // stop after this many executed test cases
    double stop_seconds = 0;    // or after this much wall time (0 = unused)
    std::string out_dir;        // corpus directory; empty = in-memory only
    std::set<uint32_t> excluded;  // blocks the oracle must not trap
};

struct FuzzResult {
    FuzzStats stats;
    std::vector<SeedEntry> queue;
    GlobalCoverage coverage;
    std::vector<uint64_t> flagged_ids;  // coverage-increasing ids, in order
    std::map<uint64_t, std::vector<uint64_t>> crash_buckets;
};

// Mutation operators, exposed for direct testing. All of them preserve the
// never-empty / never-over-max-length invariants.
namespace mut {
std::vector<uint8_t> bit_flip(std::span<const uint8_t> s, size_t pos, int bit);
std::vector<uint8_t> byte_replace(std::span<const uint8_t> s, size_t pos,
                                  uint8_t v);
std::vector<uint8_t> byte_insert(std::span<const uint8_t> s, size_t pos,
                                 uint8_t v, size_t max_len);
std::vector<uint8_t> byte_delete(std::span<const uint8_t> s, size_t pos);
std::vector<uint8_t> arith16(std::span<const uint8_t> s, size_t pos,
                             int delta);
std::vector<uint8_t> block_dup(std::span<const uint8_t> s, size_t pos,
                               size_t n, size_t at, size_t max_len);
std::vector<uint8_t> splice(std::span<const uint8_t> a,
                            std::span<const uint8_t> b, size_t cut_a,
                            size_t cut_b, size_t max_len);
}  // namespace mut

// Draws one mutation of `seed`. Deterministic in the rng state and the
// queue contents (splice picks a random queue entry).
TestCase mutate(std::span<const uint8_t> seed, Rng& rng,
                const std::vector<SeedEntry>& queue, uint32_t max_len);

// Stable dedupe key for a crashing execution: hash of the visited block set.
uint64_t crash_bucket(const TraceLog& trace);

// Traces `input` and returns its crash bucket. Throws NotACrash if the run
// does not crash.
uint64_t triage_crash(const TracerImage& tracer, std::span<const uint8_t> input,
                      ExecBudget budget = {});

// The main fuzzing loop. Seeds are validated against the pristine image
// (InvalidSeed on timeout or trap), executed as the first test cases, and
// always queued; generated test cases are queued only when they add
// coverage and exit cleanly. `sink`, when set, sees every test case in
// generation order (used for dataset recording).
FuzzResult fuzz_loop(const ProgramImage& image,
                     const std::vector<std::vector<uint8_t>>& seeds,
                     const FuzzConfig& config,
                     const std::function<void(const TestCase&)>& sink = {});

}  // namespace ofz
