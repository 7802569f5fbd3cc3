#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ofz/fuzzer.hpp"
#include "ofz/image.hpp"

namespace ofz {

// A pre-generated test-case stream: the full sequence a fuzzing run would
// execute (seeds first, then mutants), replayable in order under any mode.
struct Dataset {
    std::vector<std::vector<uint8_t>> records;
    uint64_t image_checksum = 0;
    uint64_t rng_seed = 0;
    std::string generating_mode;
};

// Runs the fuzzer in trace-all mode for `n` test cases, dumping every
// generated test case in order. Deterministic in rng_seed.
Dataset record_dataset(const ProgramImage& image,
                       const std::vector<std::vector<uint8_t>>& seeds,
                       uint64_t rng_seed, uint64_t n, ExecBudget budget = {});

// Dataset file format, bit-exact:
//   magic "OFDS" | u32 LE record count | per record: u32 LE length + bytes
// The source metadata travels in a key=value sidecar next to the dataset
// (same path + ".meta"); the binary layout stays exactly as above.
void save_dataset_file(const Dataset& ds, const std::string& path);
Dataset load_dataset_file(const std::string& path);

}  // namespace ofz
