#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "ofz/cfg.hpp"
#include "ofz/rng.hpp"

namespace ofz {

// A generated target plus everything the generator knows about it. `truth`
// is computed from the generator's own layout plan, independently of
// discover_blocks, so the two can be checked against each other.
struct GeneratedBenchmark {
    std::string kind;
    uint32_t size = 0;
    uint64_t rng_seed = 0;

    ProgramImage image;
    ControlFlowGraph truth;
    std::set<uint32_t> crash_sites;   // block starts of planted ABORTs
    uint32_t reachable_blocks = 0;    // graph search over truth edges
    std::vector<uint8_t> solution;    // input reaching the primary crash
    std::vector<uint8_t> secondary;   // input for the secondary crash, if any
};

// kind is one of "maze", "parser", "checksum"; size is the exact block
// count (>= 4, throws SizeTooSmall). Deterministic in (kind, size, rng_seed).
//
//   maze      byte-at-a-time key checks; wrong guesses share a reject block,
//             one mid-maze room diverts to a second ABORT (size >= 6).
//   parser    magic/type/field validation with a per-type body; one body
//             ends in a planted ABORT.
//   checksum  XOR accumulator over the input with bonus branches, crashing
//             when the sum hits the generator's target value.
GeneratedBenchmark generate_benchmark(const std::string& kind, uint32_t size,
                                      uint64_t rng_seed);

// Random forward-branching program of roughly `approx_blocks` blocks with
// input-dependent conditionals. Acyclic, so every execution terminates well
// under any sane budget. No ground truth; meant for differential testing.
ProgramImage random_program(Rng& rng, uint32_t approx_blocks);

}  // namespace ofz
