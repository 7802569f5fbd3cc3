#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>

#include "ofz/cfg.hpp"
#include "ofz/tracer.hpp"
#include "ofz/vm.hpp"

namespace ofz {

// Accumulated coverage across a whole session. Filters repeat blocks out of
// the unmodify path: a block is restored at most once, ever.
struct GlobalCoverage {
    std::set<uint32_t> covered;
};

enum class VerdictKind : uint8_t {
    CoverageIncreasing,
    NotInteresting,
    Crash,
    Timeout,
};

const char* verdict_kind_name(VerdictKind k);

struct InterestVerdict {
    VerdictKind kind = VerdictKind::NotInteresting;
    std::optional<uint32_t> trap_addr;
};

// Nanosecond costs of the three phases of an unmodify step, for the
// component breakdown in bench mode.
struct UnmodifyTiming {
    uint64_t stop_ns = 0;      // dropping the snapshot
    uint64_t unmodify_ns = 0;  // restoring original bytes
    uint64_t start_ns = 0;     // retaking the snapshot
};

// The interest oracle: a copy of the target with the trap byte overwriting
// the first byte of every not-yet-covered block. Executions self-report
// coverage-increasing inputs by trapping; everything else runs at native
// speed because the executed bytes are identical to the pristine image.
class OracleImage {
  public:
    OracleImage(const ProgramImage& image, const ControlFlowGraph& cfg,
                std::set<uint32_t> excluded);

    // Runs one input against the oracle. Never mutates the oracle image.
    InterestVerdict check_interesting(std::span<const uint8_t> input,
                                      ExecBudget budget = {}) const;

    // Restores the original first byte of every block in `trace` that is not
    // yet globally covered (and not excluded), records it in `global`, and
    // cycles the snapshot around the patching. Returns the number of blocks
    // restored. Throws UnknownBlock for trace entries that are not block
    // starts.
    uint32_t unmodify(GlobalCoverage& global, const TraceLog& trace,
                      UnmodifyTiming* timing = nullptr);

    const ProgramImage& image() const { return image_; }
    const std::map<uint32_t, uint8_t>& patch_map() const { return patch_map_; }
    const std::set<uint32_t>& excluded() const { return excluded_; }
    const std::set<uint32_t>& block_starts() const { return block_starts_; }
    const Snapshot& snapshot() const { return *snapshot_; }

  private:
    ProgramImage image_;
    std::map<uint32_t, uint8_t> patch_map_;  // block start -> original byte
    std::set<uint32_t> excluded_;
    std::set<uint32_t> block_starts_;
    std::optional<Snapshot> snapshot_;
};

// Traps every non-excluded block of `image` and takes the initial snapshot.
OracleImage build_oracle(const ProgramImage& image,
                         const ControlFlowGraph& cfg,
                         std::set<uint32_t> excluded = {});

// Covered block starts in hex, one per line, ascending.
std::string coverage_to_csv(const GlobalCoverage& global);

}  // namespace ofz
