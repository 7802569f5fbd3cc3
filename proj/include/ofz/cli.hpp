#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ofz::cli {

// Everything that defines a command's outputs. Serialized into the run's
// metadata file so any run can be reproduced; the output directory itself is
// a destination, not an input, and is not recorded.
struct RunConfig {
    std::string command;
    std::string image_path;
    std::string dataset_path;
    std::string kind;  // genbench
    uint32_t size = 0;
    std::string mode = "oracle";
    uint64_t rng_seed = 1;
    uint64_t budget = 1'000'000;
    uint64_t stop_n = 0;
    double stop_seconds = 0;
    double trim = 0.33;
    double threshold = 0.02;
    uint64_t window = 1000;
    uint32_t trials = 1;
    uint32_t jobs = 1;
    std::vector<std::string> seed_hex;      // fuzz/record seeds
    std::vector<std::string> mode_csvs;     // report inputs
    std::string baseline_csv;               // report baseline input
    std::string out_dir;
};

std::string config_to_metadata(const RunConfig& cfg);
RunConfig config_from_metadata(const std::string& text);

// Dispatches on cfg.command, writes outputs plus a metadata.txt under the
// output directory (OFZ_OUT overrides cfg.out_dir when set), and prints one
// machine-readable summary line. Throws ofz::Error on failure.
void run_command(const RunConfig& cfg);

// Reconstructs the RunConfig from a previous run's metadata file and runs it
// into `out_dir`.
void run_from_metadata(const std::string& meta_path,
                       const std::string& out_dir);

// Maps an escaped error to the documented exit code: 1 usage, 2 data,
// 3 internal.
int exit_code_for(const std::exception& e);

}  // namespace ofz::cli
