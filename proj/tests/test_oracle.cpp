#include <doctest.h>

#include "ofz/builder.hpp"
#include "ofz/gen.hpp"
#include "ofz/oracle.hpp"

using namespace ofz;

namespace {

std::vector<uint8_t> random_input(Rng& rng, size_t max_len = 20) {
    std::vector<uint8_t> in(rng.bounded(max_len));
    for (auto& b : in)
        b = rng.byte();
    return in;
}

}  // namespace

TEST_CASE("building the oracle patches every non-excluded block") {
    const ProgramImage one = load_image({OP_HALT}, 0);
    const ControlFlowGraph cfg1 = discover_blocks(one);
    const OracleImage o1 = build_oracle(one, cfg1);
    CHECK(o1.patch_map().size() == 1);
    CHECK(o1.image().bytes[0] == kTrapByte);

    // excluding every block leaves the image untouched
    std::set<uint32_t> all;
    const GeneratedBenchmark g = generate_benchmark("maze", 12, 2);
    for (const auto& [s, b] : g.truth.blocks)
        all.insert(s);
    const OracleImage noop = build_oracle(g.image, g.truth, all);
    CHECK(noop.image().bytes == g.image.bytes);
    CHECK(noop.patch_map().empty());
}

TEST_CASE("a fully patched maze traps on any input") {
    const GeneratedBenchmark g = generate_benchmark("maze", 64, 7);
    const OracleImage oracle = build_oracle(g.image, g.truth);
    CHECK(oracle.patch_map().size() == 64);
    Rng rng(1);
    for (int i = 0; i < 100; ++i) {
        const auto v = oracle.check_interesting(random_input(rng));
        REQUIRE(v.kind == VerdictKind::CoverageIncreasing);
        REQUIRE(v.trap_addr.has_value());
    }
}

TEST_CASE("check_interesting never mutates the oracle image") {
    const GeneratedBenchmark g = generate_benchmark("parser", 16, 3);
    const OracleImage oracle = build_oracle(g.image, g.truth);
    const std::vector<uint8_t> before = oracle.image().bytes;
    Rng rng(2);
    for (int i = 0; i < 50; ++i)
        oracle.check_interesting(random_input(rng));
    CHECK(oracle.image().bytes == before);
}

TEST_CASE("unmodify restores bytes once and filters via global coverage") {
    const GeneratedBenchmark g = generate_benchmark("maze", 8, 4);
    const ControlFlowGraph cfg = g.truth;
    OracleImage oracle = build_oracle(g.image, cfg);
    const TracerImage tracer = build_tracer(g.image, cfg);
    GlobalCoverage global;

    // first input covers the entry path; its blocks get restored
    const std::vector<uint8_t> input = {0};
    const TraceLog log = tracer.trace(input);
    const uint32_t restored = oracle.unmodify(global, log);
    CHECK(restored == log.blocks.size());
    CHECK(global.covered == log.block_set());
    for (uint32_t b : log.blocks)
        CHECK(oracle.image().bytes[b] == g.image.bytes[b]);

    // replaying the exact trace restores nothing further
    CHECK(oracle.unmodify(global, log) == 0);
    const std::vector<uint8_t> snap = oracle.image().bytes;
    CHECK(oracle.image().bytes == snap);

    // the same input is no longer coverage-increasing
    CHECK(oracle.check_interesting(input).kind == VerdictKind::NotInteresting);

    // unknown block starts are rejected
    TraceLog bogus;
    bogus.blocks = {3};  // mid-instruction address
    CHECK_THROWS_AS(oracle.unmodify(global, bogus), Error);
}

TEST_CASE("two-step replay: new branch arm stops being interesting") {
    const GeneratedBenchmark g = generate_benchmark("maze", 16, 5);
    OracleImage oracle = build_oracle(g.image, g.truth);
    const TracerImage tracer = build_tracer(g.image, g.truth);
    GlobalCoverage global;

    // wrong first byte: covers room 0 and the reject block
    const std::vector<uint8_t> miss = {0};
    REQUIRE(oracle.check_interesting(miss).kind ==
            VerdictKind::CoverageIncreasing);
    oracle.unmodify(global, tracer.trace(miss));
    REQUIRE(oracle.check_interesting(miss).kind ==
            VerdictKind::NotInteresting);

    // correct first byte reaches room 1: interesting exactly once
    const std::vector<uint8_t> hit = {g.solution[0]};
    REQUIRE(oracle.check_interesting(hit).kind ==
            VerdictKind::CoverageIncreasing);
    oracle.unmodify(global, tracer.trace(hit));
    CHECK(oracle.check_interesting(hit).kind == VerdictKind::NotInteresting);
}

TEST_CASE("crash and timeout verdicts pass through") {
    // guarded abort: crash iff input[0] == 0x42
    ProgramBuilder a;
    auto crash = a.make_label();
    a.loadin(0, 0);
    a.loadi(1, 0x42);
    a.cmp(0, 1);
    a.jz(crash);
    a.halt();
    a.bind(crash);
    a.abort();
    const ProgramImage im = a.finish(0);
    const ControlFlowGraph cfg = discover_blocks(im);
    OracleImage oracle = build_oracle(im, cfg);
    const TracerImage tracer = build_tracer(im, cfg);
    GlobalCoverage global;

    // crashing input first traps (abort block uncovered)...
    const std::vector<uint8_t> boom = {0x42};
    REQUIRE(oracle.check_interesting(boom).kind ==
            VerdictKind::CoverageIncreasing);
    oracle.unmodify(global, tracer.trace(boom));
    // ...and crashes once its whole path is covered
    CHECK(oracle.check_interesting(boom).kind == VerdictKind::Crash);

    // infinite loop with everything excluded behaves like the pristine image
    ProgramBuilder b;
    auto top = b.make_label();
    b.bind(top);
    b.loadi(0, 1);
    b.jmp(top);
    const ProgramImage spin = b.finish(0);
    const ControlFlowGraph spin_cfg = discover_blocks(spin);
    std::set<uint32_t> all;
    for (const auto& [s, blk] : spin_cfg.blocks)
        all.insert(s);
    const OracleImage noop = build_oracle(spin, spin_cfg, all);
    CHECK(noop.check_interesting({}, {1000}).kind == VerdictKind::Timeout);
}

TEST_CASE("oracle session keeps its accounting invariants") {
    const GeneratedBenchmark g = generate_benchmark("parser", 24, 6);
    OracleImage oracle = build_oracle(g.image, g.truth);
    const TracerImage tracer = build_tracer(g.image, g.truth);
    GlobalCoverage global;
    Rng rng(3);

    size_t prev_patches = oracle.patch_map().size();
    size_t prev_covered = 0;
    for (int i = 0; i < 2000; ++i) {
        std::vector<uint8_t> input = random_input(rng, 8);
        // bias towards the solution prefix so coverage actually grows
        for (size_t k = 0; k < input.size() && k < g.solution.size(); ++k)
            if (rng.chance(1, 2))
                input[k] = g.solution[k];
        const InterestVerdict v = oracle.check_interesting(input);
        if (v.kind == VerdictKind::CoverageIncreasing)
            oracle.unmodify(global, tracer.trace(input));
        else if (v.kind == VerdictKind::NotInteresting) {
            // native-speed property: identical instruction counts
            const ExecOutcome on_oracle = execute(oracle.image(), input);
            const ExecOutcome pristine = execute(g.image, input);
            REQUIRE(on_oracle.instructions_executed ==
                    pristine.instructions_executed);
        }

        // monotonicity
        REQUIRE(oracle.patch_map().size() <= prev_patches);
        REQUIRE(global.covered.size() >= prev_covered);
        prev_patches = oracle.patch_map().size();
        prev_covered = global.covered.size();

        // partition of the block set, with disjointness
        for (uint32_t c : global.covered) {
            REQUIRE(!oracle.patch_map().count(c));
            REQUIRE(oracle.image().bytes[c] == g.image.bytes[c]);
        }
        REQUIRE(global.covered.size() + oracle.patch_map().size() ==
                oracle.block_starts().size());
    }
    CHECK(global.covered.size() > 2);  // the session did make progress
}

TEST_CASE("coverage export is sorted ascending hex") {
    GlobalCoverage g;
    g.covered = {0x10, 0x2, 0xff};
    CHECK(coverage_to_csv(g) == "2\n10\nff\n");
}
