#include "ofz/cli.hpp"

#include <atomic>
#include <cinttypes>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <thread>

#include "ofz/bench.hpp"
#include "ofz/cfg.hpp"
#include "ofz/dataset.hpp"
#include "ofz/fuzzer.hpp"
#include "ofz/gen.hpp"
#include "ofz/util.hpp"

namespace ofz::cli {

namespace {

namespace fs = std::filesystem;

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

std::string out_root(const RunConfig& cfg) {
    const char* env = std::getenv("OFZ_OUT");
    std::string dir = env && *env ? env : cfg.out_dir;
    if (dir.empty())
        throw Error(ErrorCode::UsageError, "no output directory (--out or OFZ_OUT)");
    fs::create_directories(dir);
    return dir;
}

void write_metadata(const RunConfig& cfg, const std::string& dir) {
    write_text_file(dir + "/metadata.txt", config_to_metadata(cfg));
}

std::vector<std::vector<uint8_t>> seeds_from(const RunConfig& cfg) {
    std::vector<std::vector<uint8_t>> seeds;
    for (const auto& hex : cfg.seed_hex)
        seeds.push_back(from_hex(hex));
    if (seeds.empty())
        seeds.push_back(std::vector<uint8_t>(8, 0));  // default seed
    return seeds;
}

TracingMode mode_from(const RunConfig& cfg) {
    TracingMode m;
    m.kind = mode_kind_from_name(cfg.mode);
    m.threshold = cfg.threshold;
    m.window = cfg.window;
    return m;
}

void summary(const std::string& line) { printf("%s\n", line.c_str()); }

void cmd_genbench(const RunConfig& cfg, const std::string& dir) {
    const GeneratedBenchmark g =
        generate_benchmark(cfg.kind, cfg.size, cfg.rng_seed);
    const std::string base = fmt("%s_%u_%llu", g.kind.c_str(), g.size,
                                 static_cast<unsigned long long>(g.rng_seed));
    save_image_file(g.image, dir + "/" + base + ".img");
    write_text_file(dir + "/" + base + ".blocks.csv", blocks_to_csv(g.truth));
    std::string crashes;
    for (uint32_t c : g.crash_sites)
        crashes += fmt("%" PRIx32 "\n", c);
    write_text_file(dir + "/" + base + ".crashes.csv", crashes);
    write_text_file(
        dir + "/" + base + ".meta",
        fmt("kind=%s\nsize=%u\nrng_seed=%llu\nblocks=%zu\nreachable_blocks=%u\n"
            "crash_sites=%zu\nimage_checksum=%016llx\nsolution=%s\n"
            "secondary=%s\n",
            g.kind.c_str(), g.size,
            static_cast<unsigned long long>(g.rng_seed), g.truth.blocks.size(),
            g.reachable_blocks, g.crash_sites.size(),
            static_cast<unsigned long long>(image_checksum(g.image)),
            to_hex(g.solution).c_str(), to_hex(g.secondary).c_str()));
    summary(fmt("ofz genbench kind=%s size=%u rng_seed=%llu blocks=%zu "
                "crash_sites=%zu image=%s/%s.img",
                g.kind.c_str(), g.size,
                static_cast<unsigned long long>(g.rng_seed),
                g.truth.blocks.size(), g.crash_sites.size(), dir.c_str(),
                base.c_str()));
}

void cmd_analyze(const RunConfig& cfg, const std::string& dir) {
    const ProgramImage image = load_image_file(cfg.image_path);
    const ControlFlowGraph graph = discover_blocks(image);
    const auto critical = find_critical_edges(graph);
    write_text_file(dir + "/blocks.csv", blocks_to_csv(graph));
    std::string crit;
    for (const auto& ce : critical)
        crit += fmt("%" PRIx32 ",%" PRIx32 "\n", ce.edge.first, ce.edge.second);
    write_text_file(dir + "/critical_edges.csv", crit);
    summary(fmt("ofz analyze image=%s blocks=%zu edges=%zu critical=%zu",
                cfg.image_path.c_str(), graph.blocks.size(),
                graph.edges.size(), critical.size()));
}

void cmd_split(const RunConfig& cfg, const std::string& dir) {
    const ProgramImage image = load_image_file(cfg.image_path);
    const ControlFlowGraph graph = discover_blocks(image);
    const SplitResult split = split_critical_edges(image, graph);
    save_image_file(split.image, dir + "/split.img");
    write_text_file(dir + "/blocks.csv", blocks_to_csv(split.cfg));
    std::string dm = "dummy,src,dest\n";
    for (const auto& [dummy, edge] : split.dummy_map)
        dm += fmt("%" PRIx32 ",%" PRIx32 ",%" PRIx32 "\n", dummy, edge.first,
                  edge.second);
    write_text_file(dir + "/dummy_map.csv", dm);
    summary(fmt("ofz split image=%s dummies=%zu critical_after=%zu "
                "out=%s/split.img",
                cfg.image_path.c_str(), split.dummy_map.size(),
                find_critical_edges(split.cfg).size(), dir.c_str()));
}

void cmd_fuzz(const RunConfig& cfg, const std::string& dir) {
    const ProgramImage image = load_image_file(cfg.image_path);
    FuzzConfig fc;
    fc.mode = mode_from(cfg);
    fc.rng_seed = cfg.rng_seed;
    fc.budget = {cfg.budget};
    fc.stop_n = cfg.stop_n;
    fc.stop_seconds = cfg.stop_seconds;
    fc.out_dir = dir;
    const FuzzResult r = fuzz_loop(image, seeds_from(cfg), fc);
    summary(fmt("ofz fuzz mode=%s rng_seed=%llu executed=%llu cov=%llu "
                "crashes_unique=%llu timeouts=%llu covered=%llu queue=%zu",
                cfg.mode.c_str(), static_cast<unsigned long long>(cfg.rng_seed),
                static_cast<unsigned long long>(r.stats.executed),
                static_cast<unsigned long long>(r.stats.coverage_increasing),
                static_cast<unsigned long long>(r.stats.crashes_unique),
                static_cast<unsigned long long>(r.stats.timeouts),
                static_cast<unsigned long long>(r.stats.covered_blocks),
                r.queue.size()));
}

void cmd_record(const RunConfig& cfg, const std::string& dir) {
    const ProgramImage image = load_image_file(cfg.image_path);
    if (cfg.stop_n < 1)
        throw Error(ErrorCode::UsageError, "record needs --stop-n >= 1");
    const Dataset ds = record_dataset(image, seeds_from(cfg), cfg.rng_seed,
                                      cfg.stop_n, {cfg.budget});
    save_dataset_file(ds, dir + "/dataset.ofds");
    summary(fmt("ofz record image=%s rng_seed=%llu records=%zu "
                "out=%s/dataset.ofds",
                cfg.image_path.c_str(),
                static_cast<unsigned long long>(cfg.rng_seed),
                ds.records.size(), dir.c_str()));
}

void cmd_replay(const RunConfig& cfg, const std::string& dir) {
    const ProgramImage image = load_image_file(cfg.image_path);
    const Dataset ds = load_dataset_file(cfg.dataset_path);
    const TracingMode mode = mode_from(cfg);
    const ExecBudget budget{cfg.budget};

    ReplayResult merged;
    const uint32_t jobs = std::max<uint32_t>(1, cfg.jobs);
    if (jobs == 1 || cfg.trials <= 1) {
        merged = replay(ds, image, mode, cfg.trials, budget);
    } else {
        // Independent trial workers; records renumbered and merged in trial
        // order so the output layout does not depend on scheduling.
        std::vector<ReplayResult> parts(cfg.trials);
        std::vector<std::thread> pool;
        std::atomic<uint32_t> next{0};
        for (uint32_t w = 0; w < std::min(jobs, cfg.trials); ++w)
            pool.emplace_back([&] {
                for (uint32_t t; (t = next.fetch_add(1)) < cfg.trials;)
                    parts[t] = replay(ds, image, mode, 1, budget);
            });
        for (auto& th : pool)
            th.join();
        merged.verdicts = parts[0].verdicts;
        merged.final_coverage = parts[0].final_coverage;
        for (uint32_t t = 0; t < cfg.trials; ++t)
            for (TimingRecord r : parts[t].records) {
                r.trial = t;
                merged.records.push_back(r);
            }
    }

    const std::string mode_name = mode_kind_name(mode.kind);
    write_text_file(dir + "/timing_" + mode_name + ".csv",
                    timing_to_csv(merged.records));
    if (!merged.verdicts.empty()) {
        const uint64_t stride =
            std::max<uint64_t>(1, merged.verdicts.size() / 1000);
        write_text_file(dir + "/rate_" + mode_name + ".csv",
                        rate_curve_to_csv(rate_curve(merged.verdicts, stride)));
    }
    uint64_t cov = 0;
    for (VerdictKind v : merged.verdicts)
        if (v == VerdictKind::CoverageIncreasing)
            ++cov;
    summary(fmt("ofz replay mode=%s records=%zu trials=%u cov=%llu "
                "covered=%zu out=%s/timing_%s.csv",
                mode_name.c_str(), ds.records.size(), cfg.trials,
                static_cast<unsigned long long>(cov),
                merged.final_coverage.size(), dir.c_str(), mode_name.c_str()));
}

void cmd_report(const RunConfig& cfg, const std::string& dir) {
    if (cfg.baseline_csv.empty())
        throw Error(ErrorCode::UsageError, "report needs --baseline");
    const std::vector<TimingRecord> baseline =
        parse_timing_csv(read_text_file(cfg.baseline_csv));
    std::vector<std::vector<TimingRecord>> modes;
    for (const auto& path : cfg.mode_csvs)
        modes.push_back(parse_timing_csv(read_text_file(path)));
    const OverheadReport rep = report(modes, baseline, cfg.trim);
    write_text_file(dir + "/report.csv", report_to_csv(rep));
    std::string line = "ofz report";
    for (const auto& m : rep.modes) {
        line += fmt(" %s=%.4f", mode_kind_name(m.mode), m.relative_time);
        if (m.p_value)
            line += fmt(" %s_p=%.3g%s", mode_kind_name(m.mode), *m.p_value,
                        m.significant ? "(significant)" : "");
        if (m.a12)
            line += fmt(" %s_a12=%.4f%s", mode_kind_name(m.mode), *m.a12,
                        m.large_effect ? "(large)" : "");
    }
    line += " out=" + dir + "/report.csv";
    summary(line);
}

}  // namespace

std::string config_to_metadata(const RunConfig& cfg) {
    std::string out;
    out += "tool=ofz\n";
    out += "command=" + cfg.command + "\n";
    out += fmt("rng=%s-%s\n", Rng::kName, Rng::kVersion);
    if (!cfg.image_path.empty()) {
        out += "image=" + cfg.image_path + "\n";
        out += fmt("image_checksum=%016llx\n",
                   static_cast<unsigned long long>(
                       image_checksum(load_image_file(cfg.image_path))));
    }
    if (!cfg.dataset_path.empty())
        out += "dataset=" + cfg.dataset_path + "\n";
    if (!cfg.kind.empty())
        out += "kind=" + cfg.kind + "\n";
    if (cfg.size)
        out += fmt("size=%u\n", cfg.size);
    out += "mode=" + cfg.mode + "\n";
    out += fmt("rng_seed=%llu\n", static_cast<unsigned long long>(cfg.rng_seed));
    out += fmt("budget=%llu\n", static_cast<unsigned long long>(cfg.budget));
    out += fmt("stop_n=%llu\n", static_cast<unsigned long long>(cfg.stop_n));
    out += fmt("stop_seconds=%.17g\n", cfg.stop_seconds);
    out += fmt("trim=%.17g\n", cfg.trim);
    out += fmt("threshold=%.17g\n", cfg.threshold);
    out += fmt("window=%llu\n", static_cast<unsigned long long>(cfg.window));
    out += fmt("trials=%u\n", cfg.trials);
    out += fmt("jobs=%u\n", cfg.jobs);
    for (const auto& s : cfg.seed_hex)
        out += "seed=" + s + "\n";
    if (!cfg.baseline_csv.empty())
        out += "baseline=" + cfg.baseline_csv + "\n";
    for (const auto& p : cfg.mode_csvs)
        out += "input=" + p + "\n";
    return out;
}

RunConfig config_from_metadata(const std::string& text) {
    RunConfig cfg;
    cfg.mode.clear();
    for (size_t pos = 0; pos < text.size();) {
        const size_t eol = text.find('\n', pos);
        const std::string line =
            text.substr(pos, eol == std::string::npos ? eol : eol - pos);
        pos = eol == std::string::npos ? text.size() : eol + 1;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            continue;
        const std::string key = line.substr(0, eq);
        const std::string val = line.substr(eq + 1);
        if (key == "command") cfg.command = val;
        else if (key == "image") cfg.image_path = val;
        else if (key == "dataset") cfg.dataset_path = val;
        else if (key == "kind") cfg.kind = val;
        else if (key == "size") cfg.size = static_cast<uint32_t>(strtoul(val.c_str(), nullptr, 10));
        else if (key == "mode") cfg.mode = val;
        else if (key == "rng_seed") cfg.rng_seed = strtoull(val.c_str(), nullptr, 10);
        else if (key == "budget") cfg.budget = strtoull(val.c_str(), nullptr, 10);
        else if (key == "stop_n") cfg.stop_n = strtoull(val.c_str(), nullptr, 10);
        else if (key == "stop_seconds") cfg.stop_seconds = strtod(val.c_str(), nullptr);
        else if (key == "trim") cfg.trim = strtod(val.c_str(), nullptr);
        else if (key == "threshold") cfg.threshold = strtod(val.c_str(), nullptr);
        else if (key == "window") cfg.window = strtoull(val.c_str(), nullptr, 10);
        else if (key == "trials") cfg.trials = static_cast<uint32_t>(strtoul(val.c_str(), nullptr, 10));
        else if (key == "jobs") cfg.jobs = static_cast<uint32_t>(strtoul(val.c_str(), nullptr, 10));
        else if (key == "seed") cfg.seed_hex.push_back(val);
        else if (key == "baseline") cfg.baseline_csv = val;
        else if (key == "input") cfg.mode_csvs.push_back(val);
    }
    if (cfg.mode.empty())
        cfg.mode = "oracle";
    return cfg;
}

void run_command(const RunConfig& cfg) {
    const std::string dir = out_root(cfg);
    if (cfg.command == "genbench")
        cmd_genbench(cfg, dir);
    else if (cfg.command == "analyze")
        cmd_analyze(cfg, dir);
    else if (cfg.command == "split")
        cmd_split(cfg, dir);
    else if (cfg.command == "fuzz")
        cmd_fuzz(cfg, dir);
    else if (cfg.command == "record")
        cmd_record(cfg, dir);
    else if (cfg.command == "replay")
        cmd_replay(cfg, dir);
    else if (cfg.command == "report")
        cmd_report(cfg, dir);
    else
        throw Error(ErrorCode::UsageError, "unknown command: " + cfg.command);
    write_metadata(cfg, dir);
}

void run_from_metadata(const std::string& meta_path,
                       const std::string& out_dir) {
    RunConfig cfg = config_from_metadata(read_text_file(meta_path));
    if (cfg.command.empty())
        throw Error(ErrorCode::UsageError, "metadata has no command: " + meta_path);
    cfg.out_dir = out_dir;
    run_command(cfg);
}

int exit_code_for(const std::exception& e) {
    if (const auto* err = dynamic_cast<const Error*>(&e))
        return err->code() == ErrorCode::UsageError ? 1 : 2;
    return 3;
}

}  // namespace ofz::cli
