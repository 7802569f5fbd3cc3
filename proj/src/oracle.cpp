#include "ofz/oracle.hpp"

#include <chrono>
#include <cinttypes>
#include <cstdio>

namespace ofz {

namespace {

uint64_t now_ns() {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

}  // namespace

const char* verdict_kind_name(VerdictKind k) {
    switch (k) {
        case VerdictKind::CoverageIncreasing: return "coverage-increasing";
        case VerdictKind::NotInteresting: return "not-interesting";
        case VerdictKind::Crash: return "crash";
        case VerdictKind::Timeout: return "timeout";
    }
    return "?";
}

OracleImage::OracleImage(const ProgramImage& image,
                         const ControlFlowGraph& cfg,
                         std::set<uint32_t> excluded)
    : image_(image), excluded_(std::move(excluded)) {
    for (const auto& [start, bb] : cfg.blocks) {
        block_starts_.insert(start);
        if (!excluded_.count(start))
            patch_map_.emplace(start, patch_byte(image_, start, kTrapByte));
    }
    snapshot_ = take_snapshot(image_);
}

OracleImage build_oracle(const ProgramImage& image,
                         const ControlFlowGraph& cfg,
                         std::set<uint32_t> excluded) {
    return OracleImage(image, cfg, std::move(excluded));
}

InterestVerdict OracleImage::check_interesting(std::span<const uint8_t> input,
                                               ExecBudget budget) const {
    const ExecOutcome out = execute(image_, input, budget);
    switch (out.kind) {
        case ExecKind::Trap:
            return {VerdictKind::CoverageIncreasing, out.trap_addr};
        case ExecKind::CleanExit:
            return {VerdictKind::NotInteresting, std::nullopt};
        case ExecKind::Crash:
            return {VerdictKind::Crash, std::nullopt};
        case ExecKind::Timeout:
            return {VerdictKind::Timeout, std::nullopt};
    }
    return {};
}

uint32_t OracleImage::unmodify(GlobalCoverage& global, const TraceLog& trace,
                               UnmodifyTiming* timing) {
    for (uint32_t b : trace.blocks)
        if (!block_starts_.count(b)) {
            char buf[64];
            snprintf(buf, sizeof buf, "not a block start: 0x%" PRIx32, b);
            throw Error(ErrorCode::UnknownBlock, buf);
        }

    // Stop the forkserver before touching code bytes.
    const uint64_t t0 = now_ns();
    snapshot_.reset();
    const uint64_t t1 = now_ns();

    uint32_t restored = 0;
    for (uint32_t b : trace.blocks) {
        if (global.covered.count(b) || excluded_.count(b))
            continue;
        auto it = patch_map_.find(b);
        if (it == patch_map_.end())
            continue;  // already restored earlier this session
        image_.bytes[b] = it->second;
        patch_map_.erase(it);
        global.covered.insert(b);
        ++restored;
    }
    const uint64_t t2 = now_ns();

    snapshot_ = take_snapshot(image_);
    const uint64_t t3 = now_ns();

    if (timing) {
        timing->stop_ns = t1 - t0;
        timing->unmodify_ns = t2 - t1;
        timing->start_ns = t3 - t2;
    }
    return restored;
}

std::string coverage_to_csv(const GlobalCoverage& global) {
    std::string out;
    char buf[16];
    for (uint32_t b : global.covered) {
        snprintf(buf, sizeof buf, "%" PRIx32 "\n", b);
        out += buf;
    }
    return out;
}

}  // namespace ofz
