#include "ofz/fuzzer.hpp"

#include <algorithm>
#include <cassert>
#include <chrono>
#include <cstdio>
#include <filesystem>

#include "ofz/util.hpp"

namespace ofz {

const char* mode_kind_name(ModeKind k) {
    switch (k) {
        case ModeKind::Baseline: return "baseline";
        case ModeKind::TraceAll: return "trace-all";
        case ModeKind::OracleFirst: return "oracle";
        case ModeKind::Hybrid: return "hybrid";
    }
    return "?";
}

ModeKind mode_kind_from_name(const std::string& name) {
    if (name == "baseline") return ModeKind::Baseline;
    if (name == "trace-all") return ModeKind::TraceAll;
    if (name == "oracle") return ModeKind::OracleFirst;
    if (name == "hybrid") return ModeKind::Hybrid;
    throw Error(ErrorCode::UsageError, "unknown mode: " + name);
}

namespace mut {

std::vector<uint8_t> bit_flip(std::span<const uint8_t> s, size_t pos,
                              int bit) {
    std::vector<uint8_t> out(s.begin(), s.end());
    out[pos] ^= static_cast<uint8_t>(1u << bit);
    return out;
}

std::vector<uint8_t> byte_replace(std::span<const uint8_t> s, size_t pos,
                                  uint8_t v) {
    std::vector<uint8_t> out(s.begin(), s.end());
    out[pos] = v;
    return out;
}

std::vector<uint8_t> byte_insert(std::span<const uint8_t> s, size_t pos,
                                 uint8_t v, size_t max_len) {
    if (s.size() >= max_len)
        return byte_replace(s, pos < s.size() ? pos : s.size() - 1, v);
    std::vector<uint8_t> out(s.begin(), s.end());
    out.insert(out.begin() + pos, v);
    return out;
}

std::vector<uint8_t> byte_delete(std::span<const uint8_t> s, size_t pos) {
    std::vector<uint8_t> out(s.begin(), s.end());
    out.erase(out.begin() + pos);
    return out;
}

std::vector<uint8_t> arith16(std::span<const uint8_t> s, size_t pos,
                             int delta) {
    std::vector<uint8_t> out(s.begin(), s.end());
    if (pos + 1 < out.size()) {
        uint16_t w = static_cast<uint16_t>(out[pos]) |
                     (static_cast<uint16_t>(out[pos + 1]) << 8);
        w = static_cast<uint16_t>(w + delta);
        out[pos] = static_cast<uint8_t>(w & 0xff);
        out[pos + 1] = static_cast<uint8_t>(w >> 8);
    } else {
        out[pos] = static_cast<uint8_t>(out[pos] + delta);
    }
    return out;
}

std::vector<uint8_t> block_dup(std::span<const uint8_t> s, size_t pos,
                               size_t n, size_t at, size_t max_len) {
    std::vector<uint8_t> out(s.begin(), s.end());
    n = std::min(n, s.size() - pos);
    n = std::min(n, max_len - std::min(out.size(), max_len));
    if (n == 0)
        return out;
    std::vector<uint8_t> chunk(s.begin() + pos, s.begin() + pos + n);
    out.insert(out.begin() + std::min(at, out.size()), chunk.begin(),
               chunk.end());
    return out;
}

std::vector<uint8_t> splice(std::span<const uint8_t> a,
                            std::span<const uint8_t> b, size_t cut_a,
                            size_t cut_b, size_t max_len) {
    std::vector<uint8_t> out(a.begin(), a.begin() + std::min(cut_a, a.size()));
    if (cut_b < b.size())
        out.insert(out.end(), b.begin() + cut_b, b.end());
    if (out.empty())
        out.assign(a.begin(), a.end());  // degenerate cuts: keep the seed
    if (out.size() > max_len)
        out.resize(max_len);
    return out;
}

}  // namespace mut

TestCase mutate(std::span<const uint8_t> seed, Rng& rng,
                const std::vector<SeedEntry>& queue, uint32_t max_len) {
    const size_t len = seed.size();
    TestCase tc;
    switch (rng.bounded(7)) {
        case 0: {
            const size_t pos = rng.bounded(len);
            const int bit = static_cast<int>(rng.bounded(8));
            tc.bytes = mut::bit_flip(seed, pos, bit);
            tc.mutation = "bitflip";
            break;
        }
        case 1: {
            const size_t pos = rng.bounded(len);
            tc.bytes = mut::byte_replace(seed, pos, rng.byte());
            tc.mutation = "replace";
            break;
        }
        case 2: {
            const size_t pos = rng.bounded(len + 1);
            tc.bytes = mut::byte_insert(seed, pos, rng.byte(), max_len);
            tc.mutation = "insert";
            break;
        }
        case 3: {
            // Deleting from a length-1 seed would produce an empty input;
            // fall back to an insert instead.
            if (len <= 1) {
                const size_t pos = rng.bounded(len + 1);
                tc.bytes = mut::byte_insert(seed, pos, rng.byte(), max_len);
                tc.mutation = "insert";
            } else {
                tc.bytes = mut::byte_delete(seed, rng.bounded(len));
                tc.mutation = "delete";
            }
            break;
        }
        case 4: {
            const size_t pos = rng.bounded(len >= 2 ? len - 1 : len);
            const int mag = static_cast<int>(1 + rng.bounded(35));
            const int delta = rng.bounded(2) ? mag : -mag;
            tc.bytes = mut::arith16(seed, pos, delta);
            tc.mutation = "arith16";
            break;
        }
        case 5: {
            const size_t n = 1 + rng.bounded(std::min<size_t>(16, len));
            const size_t pos = rng.bounded(len - n + 1);
            const size_t at = rng.bounded(len + 1);
            tc.bytes = mut::block_dup(seed, pos, n, at, max_len);
            tc.mutation = "dup";
            break;
        }
        case 6: {
            const SeedEntry& other = queue[rng.bounded(queue.size())];
            const auto& ob = other.testcase.bytes;
            const size_t cut_a = rng.bounded(len + 1);
            const size_t cut_b = rng.bounded(ob.size() + 1);
            tc.bytes = mut::splice(seed, ob, cut_a, cut_b, max_len);
            tc.mutation = "splice";
            break;
        }
    }
    return tc;
}

uint64_t crash_bucket(const TraceLog& trace) {
    std::set<uint32_t> blocks = trace.block_set();
    std::vector<uint8_t> buf;
    buf.reserve(blocks.size() * 4);
    for (uint32_t b : blocks)
        for (int i = 0; i < 4; ++i)
            buf.push_back(static_cast<uint8_t>(b >> (8 * i)));
    return fnv1a64(buf);
}

uint64_t triage_crash(const TracerImage& tracer, std::span<const uint8_t> input,
                      ExecBudget budget) {
    const TraceLog log = tracer.trace(input, budget);
    if (log.outcome != ExecKind::Crash)
        throw Error(ErrorCode::NotACrash, "test case does not crash");
    return crash_bucket(log);
}

namespace {

uint64_t now_ns() {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

// Rolling count of coverage-increasing results over the last `window`
// executions, for hybrid mode switching.
class RateWindow {
  public:
    explicit RateWindow(uint64_t window) : ring_(window, 0) {}

    double rate() const {
        return static_cast<double>(count_) / static_cast<double>(ring_.size());
    }

    void push(bool flagged) {
        count_ += (flagged ? 1 : 0) - ring_[next_];
        ring_[next_] = flagged ? 1 : 0;
        next_ = (next_ + 1) % ring_.size();
    }

  private:
    std::vector<uint8_t> ring_;
    size_t next_ = 0;
    uint64_t count_ = 0;
};

class CorpusWriter {
  public:
    explicit CorpusWriter(const std::string& dir) : dir_(dir) {
        if (dir_.empty())
            return;
        namespace fs = std::filesystem;
        fs::create_directories(fs::path(dir_) / "queue");
        fs::create_directories(fs::path(dir_) / "crashes");
    }

    void queued(const SeedEntry& e) const {
        if (dir_.empty())
            return;
        char name[64];
        snprintf(name, sizeof name, "queue/id_%06llu_%s",
                 static_cast<unsigned long long>(e.testcase.id),
                 e.cov_tag ? "+cov" : "");
        write_file(dir_ + "/" + name, e.testcase.bytes);
    }

    void crashed(uint64_t bucket, const TestCase& tc) const {
        if (dir_.empty())
            return;
        namespace fs = std::filesystem;
        char sub[64];
        snprintf(sub, sizeof sub, "crashes/bucket_%016llx",
                 static_cast<unsigned long long>(bucket));
        fs::create_directories(fs::path(dir_) / sub);
        char name[32];
        snprintf(name, sizeof name, "id_%06llu",
                 static_cast<unsigned long long>(tc.id));
        write_file(dir_ + "/" + sub + "/" + name, tc.bytes);
    }

    void finished(const GlobalCoverage& cov, const FuzzStats& st) const {
        if (dir_.empty())
            return;
        write_text_file(dir_ + "/coverage.csv", coverage_to_csv(cov));
        char buf[256];
        snprintf(buf, sizeof buf,
                 "executed=%llu\ncoverage_increasing=%llu\ncrashes_total=%llu\n"
                 "crashes_unique=%llu\ntimeouts=%llu\ncovered_blocks=%llu\n",
                 static_cast<unsigned long long>(st.executed),
                 static_cast<unsigned long long>(st.coverage_increasing),
                 static_cast<unsigned long long>(st.crashes_total),
                 static_cast<unsigned long long>(st.crashes_unique),
                 static_cast<unsigned long long>(st.timeouts),
                 static_cast<unsigned long long>(st.covered_blocks));
        write_text_file(dir_ + "/stats.txt", buf);
    }

  private:
    std::string dir_;
};

}  // namespace

FuzzResult fuzz_loop(const ProgramImage& image,
                     const std::vector<std::vector<uint8_t>>& seeds,
                     const FuzzConfig& config,
                     const std::function<void(const TestCase&)>& sink) {
    if (seeds.empty())
        throw Error(ErrorCode::InvalidSeed, "no seeds");
    if (config.stop_n == 0 && config.stop_seconds <= 0)
        throw Error(ErrorCode::UsageError, "no stop condition");

    const ControlFlowGraph cfg = discover_blocks(image);
    const TracerImage tracer = build_tracer(image, cfg);
    const ModeKind mode = config.mode.kind;
    const bool wants_oracle =
        mode == ModeKind::OracleFirst || mode == ModeKind::Hybrid;
    std::optional<OracleImage> oracle;
    if (wants_oracle)
        oracle.emplace(build_oracle(image, cfg, config.excluded));

    FuzzResult res;
    GlobalCoverage& global = res.coverage;
    FuzzStats& st = res.stats;
    Rng rng(config.rng_seed);
    RateWindow window(std::max<uint64_t>(1, config.mode.window));
    CorpusWriter corpus(config.out_dir);

    const uint64_t t_start = now_ns();
    auto stop_reached = [&] {
        if (config.stop_n != 0 && st.executed >= config.stop_n)
            return true;
        if (config.stop_seconds > 0 &&
            static_cast<double>(now_ns() - t_start) >=
                config.stop_seconds * 1e9)
            return true;
        return false;
    };

    auto record_crash = [&](const TestCase& tc, const TraceLog& log) {
        const uint64_t bucket = crash_bucket(log);
        st.crashes_total++;
        auto& ids = res.crash_buckets[bucket];
        if (ids.empty())
            st.crashes_unique++;
        ids.push_back(tc.id);
        corpus.crashed(bucket, tc);
    };

    auto enqueue = [&](const TestCase& tc, uint32_t new_blocks, bool cov) {
        SeedEntry e{tc, new_blocks, cov};
        corpus.queued(e);
        res.queue.push_back(std::move(e));
    };

    // Adds the still-uncovered blocks of `log` to global coverage. Routed
    // through the oracle when one exists so its patch map stays consistent
    // with global coverage regardless of which path found the blocks.
    auto absorb_coverage = [&](const TraceLog& log) -> uint32_t {
        if (oracle) {
            UnmodifyTiming ut;
            const uint32_t n = oracle->unmodify(global, log, &ut);
            st.stop_ns += ut.stop_ns;
            st.unmodify_ns += ut.unmodify_ns;
            st.start_ns += ut.start_ns;
            return n;
        }
        uint32_t added = 0;
        for (uint32_t b : log.blocks)
            added += global.covered.insert(b).second ? 1 : 0;
        return added;
    };

    // Runs one test case under the active tracing mode. Returns true if it
    // was flagged coverage-increasing.
    auto process = [&](const TestCase& tc, bool is_seed) -> bool {
        ModeKind active = mode;
        if (mode == ModeKind::Hybrid)
            active = window.rate() < config.mode.threshold
                         ? ModeKind::OracleFirst
                         : ModeKind::TraceAll;

        bool flagged = false;
        switch (active) {
            case ModeKind::Baseline: {
                const uint64_t t0 = now_ns();
                const ExecOutcome out = execute(image, tc.bytes, config.budget);
                st.exec_ns += now_ns() - t0;
                if (out.kind == ExecKind::Timeout)
                    st.timeouts++;
                else if (out.kind == ExecKind::Crash)
                    record_crash(tc, tracer.trace(tc.bytes, config.budget));
                break;
            }
            case ModeKind::TraceAll: {
                const uint64_t t0 = now_ns();
                const TraceLog log = tracer.trace(tc.bytes, config.budget);
                st.trace_ns += now_ns() - t0;
                const uint32_t added = absorb_coverage(log);
                if (added > 0) {
                    flagged = true;
                    st.coverage_increasing++;
                    res.flagged_ids.push_back(tc.id);
                }
                if (log.outcome == ExecKind::Timeout)
                    st.timeouts++;
                else if (log.outcome == ExecKind::Crash)
                    record_crash(tc, log);
                else if (!is_seed && added > 0)
                    enqueue(tc, added, true);
                break;
            }
            case ModeKind::OracleFirst: {
                const uint64_t t0 = now_ns();
                const InterestVerdict v =
                    oracle->check_interesting(tc.bytes, config.budget);
                st.exec_ns += now_ns() - t0;
                switch (v.kind) {
                    case VerdictKind::CoverageIncreasing: {
                        flagged = true;
                        st.coverage_increasing++;
                        res.flagged_ids.push_back(tc.id);
                        const uint64_t t1 = now_ns();
                        const TraceLog log =
                            tracer.trace(tc.bytes, config.budget);
                        st.trace_ns += now_ns() - t1;
                        const uint32_t added = absorb_coverage(log);
                        assert(added > 0 && "trap implies an uncovered block");
                        if (log.outcome == ExecKind::Timeout)
                            st.timeouts++;
                        else if (log.outcome == ExecKind::Crash)
                            record_crash(tc, log);
                        else if (!is_seed)
                            enqueue(tc, added, true);
                        break;
                    }
                    case VerdictKind::NotInteresting:
                        break;
                    case VerdictKind::Crash:
                        record_crash(tc, tracer.trace(tc.bytes, config.budget));
                        break;
                    case VerdictKind::Timeout:
                        st.timeouts++;
                        break;
                }
                break;
            }
            case ModeKind::Hybrid:
                break;  // unreachable; hybrid resolves to a concrete mode
        }
        st.executed++;
        window.push(flagged);
        return flagged;
    };

    // Seed phase: validate, execute through the normal pipeline, and queue
    // unconditionally (the initial queue is the mutation basis).
    uint64_t next_id = 0;
    for (const auto& bytes : seeds) {
        if (bytes.empty())
            throw Error(ErrorCode::InvalidSeed, "empty seed");
        if (bytes.size() > image.input_len_max)
            throw Error(ErrorCode::InvalidSeed, "seed exceeds input_len_max");
        const ExecOutcome out = execute(image, bytes, config.budget);
        if (out.kind == ExecKind::Timeout || out.kind == ExecKind::Trap)
            throw Error(ErrorCode::InvalidSeed,
                        std::string("seed outcome on pristine image: ") +
                            exec_kind_name(out.kind));
        if (stop_reached())
            break;
        TestCase tc;
        tc.bytes = bytes;
        tc.id = next_id++;
        tc.mutation = "seed";
        if (sink)
            sink(tc);
        const size_t cov_before = global.covered.size();
        process(tc, /*is_seed=*/true);
        const uint32_t added =
            static_cast<uint32_t>(global.covered.size() - cov_before);
        enqueue(tc, added, added > 0);
    }

    // Main loop: round-robin over the queue.
    size_t next_seed = 0;
    while (!stop_reached()) {
        const SeedEntry& basis = res.queue[next_seed];
        next_seed = (next_seed + 1) % res.queue.size();
        TestCase tc = mutate(basis.testcase.bytes, rng, res.queue,
                             image.input_len_max);
        tc.id = next_id++;
        tc.parent = basis.testcase.id;
        if (sink)
            sink(tc);
        process(tc, /*is_seed=*/false);
    }

    st.covered_blocks = global.covered.size();
    corpus.finished(global, st);
    return res;
}

}  // namespace ofz
