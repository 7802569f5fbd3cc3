// ofz command line front end. All real work happens in ofz::cli; this file
// only maps flags onto a RunConfig.

#include <cstdio>
#include <exception>

#include <CLI11.hpp>

#include "ofz/cli.hpp"
#include "ofz/error.hpp"

namespace {

void add_common(CLI::App* cmd, ofz::cli::RunConfig& cfg) {
    cmd->add_option("--rng-seed", cfg.rng_seed, "deterministic run seed");
    cmd->add_option("--budget", cfg.budget, "instruction budget per execution");
    cmd->add_option("--out", cfg.out_dir, "output directory (env OFZ_OUT overrides)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ofz - coverage-guided tracing fuzzing testbed"};
    app.require_subcommand(1);

    ofz::cli::RunConfig cfg;

    auto* genbench = app.add_subcommand(
        "genbench", "generate a benchmark image with ground truth");
    genbench->add_option("--kind", cfg.kind, "maze | parser | checksum")
        ->required();
    genbench->add_option("--size", cfg.size, "exact block count (>= 4)")
        ->required();
    add_common(genbench, cfg);

    auto* analyze =
        app.add_subcommand("analyze", "recover blocks and edges from an image");
    analyze->add_option("--image", cfg.image_path)->required();
    add_common(analyze, cfg);

    auto* split =
        app.add_subcommand("split", "split critical edges of an image");
    split->add_option("--image", cfg.image_path)->required();
    add_common(split, cfg);

    auto* fuzz = app.add_subcommand("fuzz", "run the fuzzing loop");
    fuzz->add_option("--image", cfg.image_path)->required();
    fuzz->add_option("--mode", cfg.mode,
                     "baseline | trace-all | oracle | hybrid");
    fuzz->add_option("--stop-n", cfg.stop_n, "stop after N test cases");
    fuzz->add_option("--stop-secs", cfg.stop_seconds, "stop after S seconds");
    fuzz->add_option("--threshold", cfg.threshold, "hybrid switch threshold");
    fuzz->add_option("--window", cfg.window, "hybrid rate window");
    fuzz->add_option("--seed-hex", cfg.seed_hex,
                     "seed input as hex (repeatable; default 8 zero bytes)");
    add_common(fuzz, cfg);

    auto* record =
        app.add_subcommand("record", "record a test-case dataset (trace-all)");
    record->add_option("--image", cfg.image_path)->required();
    record->add_option("--stop-n", cfg.stop_n, "number of test cases")
        ->required();
    record->add_option("--seed-hex", cfg.seed_hex, "seed input as hex");
    add_common(record, cfg);

    auto* replay =
        app.add_subcommand("replay", "replay a dataset under one mode, timed");
    replay->add_option("--image", cfg.image_path)->required();
    replay->add_option("--dataset", cfg.dataset_path)->required();
    replay->add_option("--mode", cfg.mode,
                       "baseline | trace-all | oracle | hybrid");
    replay->add_option("--trials", cfg.trials, "independent timing trials");
    replay->add_option("--jobs", cfg.jobs, "parallel trial workers");
    replay->add_option("--threshold", cfg.threshold, "hybrid switch threshold");
    replay->add_option("--window", cfg.window, "hybrid rate window");
    add_common(replay, cfg);

    auto* report = app.add_subcommand(
        "report", "aggregate replay timing CSVs into relative execution times");
    report->add_option("--baseline", cfg.baseline_csv, "baseline timing csv")
        ->required();
    report->add_option("--mode-csv", cfg.mode_csvs,
                       "timing csv of a mode (repeatable)");
    report->add_option("--trim", cfg.trim, "trimmed-mean fraction per side");
    add_common(report, cfg);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;  // usage errors exit 1; --help exits 0
    }

    cfg.command = app.get_subcommands().front()->get_name();
    try {
        ofz::cli::run_command(cfg);
    } catch (const std::exception& e) {
        fprintf(stderr, "ofz %s: error: %s\n", cfg.command.c_str(), e.what());
        return ofz::cli::exit_code_for(e);
    }
    return 0;
}
