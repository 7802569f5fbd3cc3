#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ofz/dataset.hpp"
#include "ofz/fuzzer.hpp"
#include "ofz/stats.hpp"

namespace ofz {

// Per-test-case timing of one replay. Component times exist only for
// coverage-increasing test cases handled through the oracle path, and their
// sum is bounded by total_ns.
struct TimingRecord {
    uint32_t trial = 0;
    uint64_t testcase_id = 0;
    ModeKind mode = ModeKind::Baseline;
    std::optional<VerdictKind> verdict;  // absent under baseline
    uint64_t total_ns = 0;
    bool has_components = false;
    uint64_t trace_ns = 0;
    uint64_t stop_ns = 0;
    uint64_t unmodify_ns = 0;
    uint64_t start_ns = 0;
};

struct ReplayResult {
    std::vector<TimingRecord> records;   // trials * records rows
    std::vector<VerdictKind> verdicts;   // verdict stream (identical per trial)
    std::set<uint32_t> final_coverage;   // covered blocks at end of a trial
};

// Replays every dataset record under `mode`, `trials` times, timing each
// test case. Throws ChecksumMismatch if the dataset was recorded against a
// different image.
ReplayResult replay(const Dataset& ds, const ProgramImage& image,
                    TracingMode mode, uint32_t trials,
                    ExecBudget budget = {});

// Mean after dropping floor(trim * n) samples at each end of the sorted
// list. trim must be in [0, 0.5); throws EmptySamples.
double trimmed_mean(std::vector<double> samples, double trim);

// Cumulative coverage-increasing rate sampled every `stride` test cases
// (the final index is always included).
std::vector<std::pair<uint64_t, double>> rate_curve(
    std::span<const VerdictKind> verdicts, uint64_t stride = 1);

// Linear expected-cost model: a test case costs t_base if not
// coverage-increasing and t_base + c_extra if it is, versus a flat t_trace
// under trace-all.
struct CrossoverModel {
    double t_base = 0;
    double t_trace = 0;
    double c_extra = 0;
};

// Rate r* at which the oracle-first expected cost equals trace-all:
// (t_trace - t_base) / c_extra, clamped to [0, 1]. Throws NonPositiveModel.
double crossover_rate(const CrossoverModel& model);

struct ModeReport {
    ModeKind mode = ModeKind::Baseline;
    double relative_time = 1.0;  // vs baseline, after per-test-case trimming
    std::optional<double> rate;  // coverage-increasing fraction
    bool has_fractions = false;  // component breakdown (oracle path)
    double trace_frac = 0;
    double stop_frac = 0;
    double unmodify_frac = 0;
    double start_frac = 0;
    // Rank statistics of the per-test-case times against baseline.
    std::optional<double> p_value;
    std::optional<double> a12;
    bool significant = false;   // p below the 0.05 reporting threshold
    bool large_effect = false;  // |A12 - 0.5| at or past the 0.71 convention
};

struct OverheadReport {
    std::vector<ModeReport> modes;  // baseline first
    const ModeReport* find(ModeKind k) const {
        for (const auto& m : modes)
            if (m.mode == k)
                return &m;
        return nullptr;
    }
};

// Aggregates replay records into relative execution times: per-test-case
// trimmed means across trials, averaged per mode, divided by the baseline
// mean. Every mode must cover the same test-case ids as the baseline
// (MismatchedDatasets otherwise).
OverheadReport report(const std::vector<std::vector<TimingRecord>>& mode_records,
                      const std::vector<TimingRecord>& baseline_records,
                      double trim = 0.33);

// CSV emission. Columns are fixed; absent fields stay empty.
//   timing: trial,testcase_id,mode,verdict,total_ns,trace_ns,stop_ns,unmodify_ns,start_ns
//   report: mode,relative_time,rate,trace_frac,stop_frac,unmodify_frac,start_frac
//   curve:  index,rate
std::string timing_to_csv(std::span<const TimingRecord> records);
std::vector<TimingRecord> parse_timing_csv(const std::string& text);
std::string report_to_csv(const OverheadReport& rep);
std::string rate_curve_to_csv(
    std::span<const std::pair<uint64_t, double>> curve);

}  // namespace ofz
