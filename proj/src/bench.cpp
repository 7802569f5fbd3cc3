#include "ofz/bench.hpp"

#include <algorithm>
#include <cassert>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

namespace ofz {

namespace {

uint64_t now_ns() {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

}  // namespace

ReplayResult replay(const Dataset& ds, const ProgramImage& image,
                    TracingMode mode, uint32_t trials, ExecBudget budget) {
    if (trials < 1)
        throw Error(ErrorCode::UsageError, "trials must be >= 1");
    if (ds.image_checksum != 0 && ds.image_checksum != image_checksum(image))
        throw Error(ErrorCode::ChecksumMismatch,
                    "dataset was recorded against a different image");

    const ControlFlowGraph cfg = discover_blocks(image);
    ReplayResult res;

    for (uint32_t trial = 0; trial < trials; ++trial) {
        const TracerImage tracer = build_tracer(image, cfg);
        std::optional<OracleImage> oracle;
        const bool wants_oracle = mode.kind == ModeKind::OracleFirst ||
                                  mode.kind == ModeKind::Hybrid;
        if (wants_oracle)
            oracle.emplace(build_oracle(image, cfg));
        GlobalCoverage global;
        uint64_t window_count = 0;
        std::vector<uint8_t> window_ring(std::max<uint64_t>(1, mode.window), 0);
        size_t window_next = 0;

        for (uint64_t id = 0; id < ds.records.size(); ++id) {
            const auto& input = ds.records[id];
            TimingRecord rec;
            rec.trial = trial;
            rec.testcase_id = id;
            rec.mode = mode.kind;

            ModeKind active = mode.kind;
            if (mode.kind == ModeKind::Hybrid) {
                const double rate = static_cast<double>(window_count) /
                                    static_cast<double>(window_ring.size());
                active = rate < mode.threshold ? ModeKind::OracleFirst
                                               : ModeKind::TraceAll;
            }

            bool flagged = false;
            switch (active) {
                case ModeKind::Baseline: {
                    const uint64_t t0 = now_ns();
                    const ExecOutcome out = execute(image, input, budget);
                    rec.total_ns = now_ns() - t0;
                    (void)out;
                    break;
                }
                case ModeKind::TraceAll: {
                    const uint64_t t0 = now_ns();
                    const TraceLog log = tracer.trace(input, budget);
                    rec.total_ns = now_ns() - t0;
                    uint32_t added = 0;
                    if (oracle) {
                        added = oracle->unmodify(global, log);
                    } else {
                        for (uint32_t b : log.blocks)
                            added += global.covered.insert(b).second ? 1 : 0;
                    }
                    flagged = added > 0;
                    rec.verdict = flagged ? VerdictKind::CoverageIncreasing
                                  : log.outcome == ExecKind::Crash
                                      ? VerdictKind::Crash
                                  : log.outcome == ExecKind::Timeout
                                      ? VerdictKind::Timeout
                                      : VerdictKind::NotInteresting;
                    break;
                }
                case ModeKind::OracleFirst: {
                    // The timed region is exactly the execution, the same
                    // code shape as the baseline arm; verdict mapping is
                    // harness bookkeeping and stays outside the clock.
                    const uint64_t t0 = now_ns();
                    const ExecOutcome out =
                        execute(oracle->image(), input, budget);
                    const uint64_t oracle_ns = now_ns() - t0;
                    rec.total_ns = oracle_ns;
                    switch (out.kind) {
                        case ExecKind::Trap:
                            rec.verdict = VerdictKind::CoverageIncreasing;
                            break;
                        case ExecKind::CleanExit:
                            rec.verdict = VerdictKind::NotInteresting;
                            break;
                        case ExecKind::Crash:
                            rec.verdict = VerdictKind::Crash;
                            break;
                        case ExecKind::Timeout:
                            rec.verdict = VerdictKind::Timeout;
                            break;
                    }
                    if (out.kind == ExecKind::Trap) {
                        flagged = true;
                        const uint64_t t1 = now_ns();
                        const TraceLog log = tracer.trace(input, budget);
                        rec.trace_ns = now_ns() - t1;
                        UnmodifyTiming ut;
                        oracle->unmodify(global, log, &ut);
                        rec.stop_ns = ut.stop_ns;
                        rec.unmodify_ns = ut.unmodify_ns;
                        rec.start_ns = ut.start_ns;
                        rec.has_components = true;
                        rec.total_ns = oracle_ns + rec.trace_ns + rec.stop_ns +
                                       rec.unmodify_ns + rec.start_ns;
                    }
                    break;
                }
                case ModeKind::Hybrid:
                    break;  // resolved above
            }

            window_count += (flagged ? 1 : 0) - window_ring[window_next];
            window_ring[window_next] = flagged ? 1 : 0;
            window_next = (window_next + 1) % window_ring.size();

            if (trial == 0 && rec.verdict)
                res.verdicts.push_back(*rec.verdict);
            res.records.push_back(rec);
        }
        if (trial == 0)
            res.final_coverage = global.covered;
    }
    return res;
}

double trimmed_mean(std::vector<double> samples, double trim) {
    if (samples.empty())
        throw Error(ErrorCode::EmptySamples, "trimmed_mean of nothing");
    if (trim < 0 || trim >= 0.5)
        throw Error(ErrorCode::UsageError, "trim fraction must be in [0, 0.5)");
    std::sort(samples.begin(), samples.end());
    const size_t k =
        static_cast<size_t>(std::floor(trim * static_cast<double>(samples.size())));
    double sum = 0;
    for (size_t i = k; i < samples.size() - k; ++i)
        sum += samples[i];
    return sum / static_cast<double>(samples.size() - 2 * k);
}

std::vector<std::pair<uint64_t, double>> rate_curve(
    std::span<const VerdictKind> verdicts, uint64_t stride) {
    if (verdicts.empty())
        throw Error(ErrorCode::EmptySamples, "rate_curve of nothing");
    if (stride < 1)
        stride = 1;
    std::vector<std::pair<uint64_t, double>> curve;
    uint64_t cov = 0;
    for (uint64_t i = 0; i < verdicts.size(); ++i) {
        if (verdicts[i] == VerdictKind::CoverageIncreasing)
            ++cov;
        const uint64_t n = i + 1;
        if (n % stride == 0 || n == verdicts.size())
            curve.emplace_back(n, static_cast<double>(cov) /
                                      static_cast<double>(n));
    }
    return curve;
}

double crossover_rate(const CrossoverModel& model) {
    if (model.t_base <= 0 || model.t_trace <= 0 || model.c_extra <= 0)
        throw Error(ErrorCode::NonPositiveModel,
                    "crossover model terms must be positive");
    const double r = (model.t_trace - model.t_base) / model.c_extra;
    return std::clamp(r, 0.0, 1.0);
}

namespace {

// testcase_id -> per-trial samples of a field.
using SampleMap = std::map<uint64_t, std::vector<double>>;

SampleMap collect(const std::vector<TimingRecord>& records,
                  uint64_t TimingRecord::*field) {
    SampleMap m;
    for (const auto& r : records)
        m[r.testcase_id].push_back(static_cast<double>(r.*field));
    return m;
}

}  // namespace

OverheadReport report(const std::vector<std::vector<TimingRecord>>& mode_records,
                      const std::vector<TimingRecord>& baseline_records,
                      double trim) {
    if (baseline_records.empty())
        throw Error(ErrorCode::EmptySamples, "no baseline records");

    const SampleMap base_samples = collect(baseline_records,
                                           &TimingRecord::total_ns);
    std::vector<double> base_means;
    base_means.reserve(base_samples.size());
    for (const auto& [id, s] : base_samples)
        base_means.push_back(trimmed_mean(s, trim));
    const double base_mean =
        std::accumulate(base_means.begin(), base_means.end(), 0.0) /
        static_cast<double>(base_means.size());

    OverheadReport rep;
    ModeReport base_row;
    base_row.mode = ModeKind::Baseline;
    base_row.relative_time = 1.0;
    rep.modes.push_back(base_row);

    for (const auto& records : mode_records) {
        if (records.empty())
            throw Error(ErrorCode::EmptySamples, "empty mode records");
        const SampleMap samples = collect(records, &TimingRecord::total_ns);
        if (samples.size() != base_samples.size())
            throw Error(ErrorCode::MismatchedDatasets,
                        "mode and baseline cover different test cases");
        ModeReport row;
        row.mode = records.front().mode;

        std::vector<double> means;
        means.reserve(samples.size());
        for (const auto& [id, s] : samples) {
            if (!base_samples.count(id))
                throw Error(ErrorCode::MismatchedDatasets,
                            "mode and baseline cover different test cases");
            means.push_back(trimmed_mean(s, trim));
        }
        const double mode_mean =
            std::accumulate(means.begin(), means.end(), 0.0) /
            static_cast<double>(means.size());
        row.relative_time = mode_mean / base_mean;

        // Coverage-increasing rate over one trial's verdicts.
        uint64_t with_verdict = 0, cov = 0;
        for (const auto& r : records) {
            if (r.trial != 0 || !r.verdict)
                continue;
            ++with_verdict;
            if (*r.verdict == VerdictKind::CoverageIncreasing)
                ++cov;
        }
        if (with_verdict > 0)
            row.rate = static_cast<double>(cov) /
                       static_cast<double>(with_verdict);

        // Component breakdown, averaged over coverage-increasing test cases.
        const SampleMap trace_s = collect(records, &TimingRecord::trace_ns);
        const SampleMap stop_s = collect(records, &TimingRecord::stop_ns);
        const SampleMap unmod_s = collect(records, &TimingRecord::unmodify_ns);
        const SampleMap start_s = collect(records, &TimingRecord::start_ns);
        std::set<uint64_t> component_ids;
        for (const auto& r : records)
            if (r.has_components)
                component_ids.insert(r.testcase_id);
        if (!component_ids.empty()) {
            double tf = 0, sf = 0, uf = 0, stf = 0;
            for (uint64_t id : component_ids) {
                const double t = trimmed_mean(trace_s.at(id), trim);
                const double s = trimmed_mean(stop_s.at(id), trim);
                const double u = trimmed_mean(unmod_s.at(id), trim);
                const double st = trimmed_mean(start_s.at(id), trim);
                const double total = t + s + u + st;
                if (total <= 0)
                    continue;
                tf += t / total;
                sf += s / total;
                uf += u / total;
                stf += st / total;
            }
            const double n = static_cast<double>(component_ids.size());
            row.has_fractions = true;
            row.trace_frac = tf / n;
            row.stop_frac = sf / n;
            row.unmodify_frac = uf / n;
            row.start_frac = stf / n;
        }

        // Rank statistics of per-test-case times against baseline.
        const MannWhitneyResult mw = mann_whitney_u(means, base_means);
        row.p_value = mw.p;
        row.significant = mw.p < kSignificanceLevel;
        const double a12 = vargha_delaney_a12(means, base_means);
        row.a12 = a12;
        row.large_effect = std::max(a12, 1.0 - a12) >= kLargeEffectA12;

        rep.modes.push_back(row);
    }
    return rep;
}

std::string timing_to_csv(std::span<const TimingRecord> records) {
    std::string out =
        "trial,testcase_id,mode,verdict,total_ns,trace_ns,stop_ns,"
        "unmodify_ns,start_ns\n";
    char buf[256];
    for (const auto& r : records) {
        snprintf(buf, sizeof buf, "%u,%llu,%s,%s,%llu", r.trial,
                 static_cast<unsigned long long>(r.testcase_id),
                 mode_kind_name(r.mode),
                 r.verdict ? verdict_kind_name(*r.verdict) : "",
                 static_cast<unsigned long long>(r.total_ns));
        out += buf;
        if (r.has_components) {
            snprintf(buf, sizeof buf, ",%llu,%llu,%llu,%llu\n",
                     static_cast<unsigned long long>(r.trace_ns),
                     static_cast<unsigned long long>(r.stop_ns),
                     static_cast<unsigned long long>(r.unmodify_ns),
                     static_cast<unsigned long long>(r.start_ns));
            out += buf;
        } else {
            out += ",,,,\n";
        }
    }
    return out;
}

std::vector<TimingRecord> parse_timing_csv(const std::string& text) {
    std::vector<TimingRecord> records;
    size_t pos = text.find('\n');  // skip header
    if (pos == std::string::npos)
        throw Error(ErrorCode::IoError, "not a timing csv");
    ++pos;
    auto next_field = [&text](size_t& at) {
        size_t end = at;
        while (end < text.size() && text[end] != ',' && text[end] != '\n')
            ++end;
        std::string f = text.substr(at, end - at);
        at = end < text.size() ? end + 1 : end;
        return f;
    };
    while (pos < text.size()) {
        TimingRecord r;
        r.trial = static_cast<uint32_t>(strtoul(next_field(pos).c_str(), nullptr, 10));
        r.testcase_id = strtoull(next_field(pos).c_str(), nullptr, 10);
        r.mode = mode_kind_from_name(next_field(pos));
        const std::string verdict = next_field(pos);
        if (verdict == "coverage-increasing")
            r.verdict = VerdictKind::CoverageIncreasing;
        else if (verdict == "not-interesting")
            r.verdict = VerdictKind::NotInteresting;
        else if (verdict == "crash")
            r.verdict = VerdictKind::Crash;
        else if (verdict == "timeout")
            r.verdict = VerdictKind::Timeout;
        r.total_ns = strtoull(next_field(pos).c_str(), nullptr, 10);
        const std::string t = next_field(pos), s = next_field(pos),
                          u = next_field(pos), st = next_field(pos);
        if (!t.empty()) {
            r.has_components = true;
            r.trace_ns = strtoull(t.c_str(), nullptr, 10);
            r.stop_ns = strtoull(s.c_str(), nullptr, 10);
            r.unmodify_ns = strtoull(u.c_str(), nullptr, 10);
            r.start_ns = strtoull(st.c_str(), nullptr, 10);
        }
        records.push_back(r);
    }
    return records;
}

std::string report_to_csv(const OverheadReport& rep) {
    std::string out =
        "mode,relative_time,rate,trace_frac,stop_frac,unmodify_frac,"
        "start_frac\n";
    char buf[256];
    for (const auto& m : rep.modes) {
        snprintf(buf, sizeof buf, "%s,%.6f", mode_kind_name(m.mode),
                 m.relative_time);
        out += buf;
        if (m.rate) {
            snprintf(buf, sizeof buf, ",%.9f", *m.rate);
            out += buf;
        } else {
            out += ',';
        }
        if (m.has_fractions) {
            snprintf(buf, sizeof buf, ",%.6f,%.6f,%.6f,%.6f\n", m.trace_frac,
                     m.stop_frac, m.unmodify_frac, m.start_frac);
            out += buf;
        } else {
            out += ",,,,\n";
        }
    }
    return out;
}

std::string rate_curve_to_csv(
    std::span<const std::pair<uint64_t, double>> curve) {
    std::string out = "index,rate\n";
    char buf[64];
    for (const auto& [i, r] : curve) {
        snprintf(buf, sizeof buf, "%llu,%.9f\n",
                 static_cast<unsigned long long>(i), r);
        out += buf;
    }
    return out;
}

}  // namespace ofz
