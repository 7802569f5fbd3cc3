#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ofz/cfg.hpp"
#include "ofz/vm.hpp"

namespace ofz {

// Full block coverage of one execution: every visited block once, in
// first-visit order, plus how the run ended.
struct TraceLog {
    std::vector<uint32_t> blocks;
    ExecKind outcome = ExecKind::CleanExit;

    std::set<uint32_t> block_set() const {
        return {blocks.begin(), blocks.end()};
    }
};

// Tracing configuration for one target. Tracing is interpreter-level (a
// callback on every block entry) and therefore side-effect-free: outcomes
// match the pristine image exactly.
class TracerImage {
  public:
    TracerImage(ProgramImage image, const ControlFlowGraph& cfg);

    // Uniquely-covered blocks in first-visit order. The per-run visited set
    // deliberately pays a hash lookup per block entry, mirroring per-block
    // instrumentation cost.
    TraceLog trace(std::span<const uint8_t> input, ExecBudget budget = {}) const;

    // Exact dynamic (src, dest) block transitions. Verification oracle for
    // infer_edge_coverage; not part of the fuzzing hot path.
    std::set<Edge> trace_edges(std::span<const uint8_t> input,
                               ExecBudget budget = {}) const;

    const ProgramImage& image() const { return image_; }
    const std::set<uint32_t>& block_starts() const { return block_starts_; }
    const Snapshot& snapshot() const { return snapshot_; }

  private:
    ProgramImage image_;
    std::set<uint32_t> block_starts_;
    std::vector<uint8_t> is_start_;  // flat lookup keyed by code offset
    Snapshot snapshot_;
};

TracerImage build_tracer(const ProgramImage& image,
                         const ControlFlowGraph& cfg);

// One hex block start per line, first-visit order.
std::string trace_to_csv(const TraceLog& log);

}  // namespace ofz
