#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ofz/image.hpp"

namespace ofz {

enum class Terminator : uint8_t { Fallthrough, Jmp, CondJmp, Halt, Abort };

const char* terminator_name(Terminator t);

// A basic block: a maximal straight-line instruction run. successors holds
// the branch target first and the fall-through second for CondJmp blocks.
struct BasicBlock {
    uint32_t start = 0;
    uint32_t len = 0;
    Terminator terminator = Terminator::Halt;
    std::vector<uint32_t> successors;

    bool operator==(const BasicBlock&) const = default;
};

using Edge = std::pair<uint32_t, uint32_t>;

// Blocks and edges recovered from an image. Ordered containers keep exports
// and comparisons deterministic.
struct ControlFlowGraph {
    std::map<uint32_t, BasicBlock> blocks;  // keyed by start
    std::set<Edge> edges;
    uint32_t entry = 0;

    bool has_block(uint32_t start) const { return blocks.count(start) != 0; }
};

struct CriticalEdge {
    Edge edge;
    bool operator<(const CriticalEdge& o) const { return edge < o.edge; }
    bool operator==(const CriticalEdge&) const = default;
};

// Result of split_critical_edges. dummy_map records, for every appended
// forwarding block, the original edge it stands in for.
struct SplitResult {
    ProgramImage image;
    ControlFlowGraph cfg;
    std::map<uint32_t, Edge> dummy_map;
};

// Recovers the exact basic-block partition of the code reachable from the
// entry point. The ISA has no indirect control flow, so this is sound and
// complete. Throws MalformedImage on out-of-range or mid-instruction jump
// targets, illegal opcodes, trap bytes in reachable code, or straight-line
// code running past the image end.
ControlFlowGraph discover_blocks(const ProgramImage& image);

// Edges whose source has multiple distinct successors and whose destination
// has multiple incoming edges. The entry block counts one extra virtual
// in-edge (the program start), so a conditional branch back to the entry
// block is critical: its coverage is not forced by any single in-edge.
std::set<CriticalEdge> find_critical_edges(const ControlFlowGraph& cfg);

// Removes every critical edge by appending forwarding blocks at the image
// tail and retargeting the offending branch arm. A critical fall-through arm
// cannot be retargeted in place, so the whole conditional branch is relocated
// to the tail and its slot replaced with a jump. Semantics are preserved up
// to instruction count. Throws ImageTooLarge if a displacement overflows.
SplitResult split_critical_edges(const ProgramImage& image,
                                 const ControlFlowGraph& cfg);

// Reconstructs the dynamically executed edge set of a terminated run from
// its covered-block set. Exact on critical-edge-free graphs: an edge ran iff
// both ends are covered and either the source has a single successor or the
// destination has a single in-edge (the virtual entry in-edge included).
// Throws CriticalEdgesPresent otherwise.
std::set<Edge> infer_edge_coverage(const std::set<uint32_t>& covered_blocks,
                                   const ControlFlowGraph& cfg);

// Block-table export: header plus one row per block,
// start,len,terminator,succ1,succ2 with offsets in hex and absent successors
// left empty.
std::string blocks_to_csv(const ControlFlowGraph& cfg);

}  // namespace ofz
