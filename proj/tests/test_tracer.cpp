#include <doctest.h>

#include "ofz/builder.hpp"
#include "ofz/gen.hpp"
#include "ofz/tracer.hpp"

using namespace ofz;

namespace {

// B1 doubles 250 to 1000, B2 counts down to zero (self loop), B3 halts.
ProgramImage count_down_loop() {
    ProgramBuilder a;
    auto l_loop = a.make_label();
    a.loadi(0, 250);
    a.loadi(1, 1);
    a.add(0, 0);
    a.add(0, 0);
    a.bind(l_loop);
    a.sub(0, 1);
    a.jnz(l_loop);
    a.halt();
    return a.finish(0);
}

// Three blocks chained by explicit jumps.
ProgramImage straight_three() {
    ProgramBuilder a;
    auto l2 = a.make_label();
    auto l3 = a.make_label();
    a.loadi(0, 1);
    a.jmp(l2);
    a.bind(l2);
    a.loadi(0, 2);
    a.jmp(l3);
    a.bind(l3);
    a.halt();
    return a.finish(0);
}

// Dispatch on input[0] over `arms` values; every block is reachable with
// some single-byte input.
ProgramImage byte_dispatcher(uint32_t arms) {
    ProgramBuilder a;
    auto l_done = a.make_label();
    auto l_fallout = a.make_label();
    std::vector<ProgramBuilder::Label> l_arm(arms);
    for (auto& l : l_arm)
        l = a.make_label();
    for (uint32_t i = 0; i < arms; ++i) {
        a.loadin(0, 0);
        a.loadi(1, static_cast<uint8_t>(i));
        a.cmp(0, 1);
        if (i + 1 < arms)
            a.jz(l_arm[i]);
        else
            a.jnz(l_fallout);  // last check falls into its own arm
    }
    for (uint32_t i = arms; i-- > 0;) {
        a.bind(l_arm[i]);
        a.loadi(2, static_cast<uint8_t>(i));
        a.jmp(l_done);
    }
    a.bind(l_done);
    a.halt();
    a.bind(l_fallout);
    a.halt();
    return a.finish(0);
}

}  // namespace

TEST_CASE("tracer knows the block set and does not disturb outcomes") {
    const ProgramImage one = load_image({OP_HALT}, 0);
    const TracerImage t1 = build_tracer(one, discover_blocks(one));
    CHECK(t1.block_starts().size() == 1);

    Rng rng(0x7ace);
    for (int p = 0; p < 100; ++p) {
        const ProgramImage im = random_program(rng, 4 + rng.bounded(30));
        const TracerImage tracer = build_tracer(im, discover_blocks(im));
        for (int i = 0; i < 10; ++i) {
            std::vector<uint8_t> input(rng.bounded(12));
            for (auto& b : input)
                b = rng.byte();
            REQUIRE(tracer.trace(input).outcome == execute(im, input).kind);
        }
    }
}

TEST_CASE("trace lists blocks once in first-visit order") {
    const ProgramImage im = straight_three();
    const ControlFlowGraph cfg = discover_blocks(im);
    REQUIRE(cfg.blocks.size() == 3);
    const TracerImage tracer = build_tracer(im, cfg);
    const TraceLog log = tracer.trace({});
    std::vector<uint32_t> starts;
    for (const auto& [s, b] : cfg.blocks)
        starts.push_back(s);
    CHECK(log.blocks == starts);
}

TEST_CASE("a block executing 1000 times is recorded once") {
    const ProgramImage im = count_down_loop();
    const ControlFlowGraph cfg = discover_blocks(im);
    REQUIRE(cfg.blocks.size() == 3);
    const TracerImage tracer = build_tracer(im, cfg);
    const TraceLog log = tracer.trace({});
    CHECK(log.outcome == ExecKind::CleanExit);
    CHECK(log.blocks.size() == 3);
    // the countdown block really ran 1000 times
    CHECK(execute(im, {}).instructions_executed == 4 + 2 * 1000 + 1);
}

TEST_CASE("diamond trace holds exactly one arm") {
    ProgramBuilder a;
    auto l_else = a.make_label();
    auto l_join = a.make_label();
    a.loadin(0, 0);
    a.loadi(1, 1);
    a.cmp(0, 1);
    a.jz(l_else);
    a.loadi(2, 2);
    a.jmp(l_join);
    a.bind(l_else);
    a.loadi(2, 3);
    a.bind(l_join);
    a.halt();
    const ProgramImage im = a.finish(0);
    const ControlFlowGraph cfg = discover_blocks(im);
    const TracerImage tracer = build_tracer(im, cfg);

    const BasicBlock& b1 = cfg.blocks.at(0);
    const uint32_t arm_else = b1.successors[0];
    const uint32_t arm_then = b1.successors[1];

    const std::vector<uint8_t> take_else = {1};
    const std::vector<uint8_t> take_then = {0};
    const auto else_set = tracer.trace(take_else).block_set();
    const auto then_set = tracer.trace(take_then).block_set();
    CHECK(else_set.count(arm_else));
    CHECK(!else_set.count(arm_then));
    CHECK(then_set.count(arm_then));
    CHECK(!then_set.count(arm_else));
}

TEST_CASE("trace is pure") {
    Rng rng(99);
    const ProgramImage im = random_program(rng, 20);
    const TracerImage tracer = build_tracer(im, discover_blocks(im));
    const std::vector<uint8_t> input = {9, 9, 9};
    const TraceLog first = tracer.trace(input);
    for (int i = 0; i < 100; ++i) {
        const TraceLog again = tracer.trace(input);
        REQUIRE(again.blocks == first.blocks);
        REQUIRE(again.outcome == first.outcome);
    }
}

TEST_CASE("dynamic edges of straight and looping programs") {
    const ProgramImage chain = straight_three();
    const ControlFlowGraph ccfg = discover_blocks(chain);
    const TracerImage ct = build_tracer(chain, ccfg);
    CHECK(ct.trace_edges({}) == ccfg.edges);

    const ProgramImage loop = count_down_loop();
    const ControlFlowGraph lcfg = discover_blocks(loop);
    const TracerImage lt = build_tracer(loop, lcfg);
    const std::set<Edge> edges = lt.trace_edges({});
    // the countdown block is its own successor
    uint32_t loop_block = 0;
    for (const auto& [s, b] : lcfg.blocks)
        if (b.terminator == Terminator::CondJmp)
            loop_block = s;
    CHECK(edges.count({loop_block, loop_block}));
}

TEST_CASE("exhaustive one-byte inputs cover exactly the reachable set") {
    const ProgramImage im = byte_dispatcher(31);
    const ControlFlowGraph cfg = discover_blocks(im);
    REQUIRE(cfg.blocks.size() == 64);
    const TracerImage tracer = build_tracer(im, cfg);

    std::set<uint32_t> covered;
    for (int b = 0; b < 256; ++b) {
        const std::vector<uint8_t> input = {static_cast<uint8_t>(b)};
        for (uint32_t blk : tracer.trace(input).blocks)
            covered.insert(blk);
    }

    // reachability by graph search over the discovered edges
    std::set<uint32_t> reach = {cfg.entry};
    std::vector<uint32_t> work = {cfg.entry};
    while (!work.empty()) {
        const uint32_t b = work.back();
        work.pop_back();
        for (uint32_t s : cfg.blocks.at(b).successors)
            if (reach.insert(s).second)
                work.push_back(s);
    }
    CHECK(covered == reach);
}

TEST_CASE("trace blocks equal the instruction-level visited set") {
    // cross-check the per-block filter against a raw log of every executed
    // address
    Rng rng(0x1c);
    for (int p = 0; p < 100; ++p) {
        const ProgramImage im = random_program(rng, 4 + rng.bounded(24));
        const ControlFlowGraph cfg = discover_blocks(im);
        const TracerImage tracer = build_tracer(im, cfg);
        for (int i = 0; i < 10; ++i) {
            std::vector<uint8_t> input(rng.bounded(12));
            for (auto& b : input)
                b = rng.byte();
            std::set<uint32_t> visited;
            detail::run_vm(im, input, {}, [&](uint32_t pc) {
                if (cfg.blocks.count(pc))
                    visited.insert(pc);
            });
            REQUIRE(tracer.trace(input).block_set() == visited);
        }
    }
}

TEST_CASE("trace export is one hex block start per line") {
    const ProgramImage im = straight_three();
    const TracerImage tracer = build_tracer(im, discover_blocks(im));
    const TraceLog log = tracer.trace({});
    CHECK(trace_to_csv(log) == "0\n6\nc\n");
}
