#include <doctest.h>

#include <algorithm>

#include "ofz/builder.hpp"
#include "ofz/cfg.hpp"
#include "ofz/gen.hpp"
#include "ofz/tracer.hpp"

using namespace ofz;

namespace {

// Brute-force restatement of the critical-edge definition, including the
// virtual in-edge at the entry block.
std::set<Edge> critical_by_definition(const ControlFlowGraph& cfg) {
    std::set<Edge> crit;
    for (const Edge& e : cfg.edges) {
        int out = 0, in = 0;
        for (const Edge& o : cfg.edges) {
            if (o.first == e.first)
                ++out;
            if (o.second == e.second)
                ++in;
        }
        if (e.second == cfg.entry)
            ++in;
        if (out >= 2 && in >= 2)
            crit.insert(e);
    }
    return crit;
}

std::set<Edge> as_edges(const std::set<CriticalEdge>& ce) {
    std::set<Edge> out;
    for (const auto& c : ce)
        out.insert(c.edge);
    return out;
}

// if/else/join diamond: B1 -> {B2, B3}, B2 -> B4, B3 -> B4.
ProgramImage diamond() {
    ProgramBuilder a;
    auto l_else = a.make_label();
    auto l_join = a.make_label();
    a.loadin(0, 0);
    a.loadi(1, 1);
    a.cmp(0, 1);
    a.jz(l_else);
    a.loadi(2, 2);  // then arm
    a.jmp(l_join);
    a.bind(l_else);
    a.loadi(2, 3);  // else arm, falls into join
    a.bind(l_join);
    a.halt();
    return a.finish(0);
}

// The two-arm shape with a critical edge: B1 -> {B2, B3}, B2 -> B3.
ProgramImage two_arm_join() {
    ProgramBuilder a;
    auto l_b3 = a.make_label();
    a.loadin(0, 0);
    a.loadi(1, 5);
    a.cmp(0, 1);
    a.jz(l_b3);
    a.loadi(2, 1);  // B2, falls into B3
    a.bind(l_b3);
    a.halt();
    return a.finish(0);
}

std::vector<uint8_t> random_input(Rng& rng) {
    std::vector<uint8_t> in(rng.bounded(20));
    for (auto& b : in)
        b = rng.byte();
    return in;
}

}  // namespace

TEST_CASE("straight-line code is a single block") {
    const ProgramImage im = load_image({OP_LOADI, 0, 7, OP_HALT}, 0);
    const ControlFlowGraph cfg = discover_blocks(im);
    CHECK(cfg.blocks.size() == 1);
    CHECK(cfg.blocks.at(0).len == 4);
    CHECK(cfg.blocks.at(0).terminator == Terminator::Halt);
    CHECK(cfg.edges.empty());
}

TEST_CASE("diamond discovers four blocks and four edges") {
    const ControlFlowGraph cfg = discover_blocks(diamond());
    CHECK(cfg.blocks.size() == 4);
    CHECK(cfg.edges.size() == 4);
    CHECK(find_critical_edges(cfg).empty());

    const BasicBlock& b1 = cfg.blocks.at(0);
    CHECK(b1.terminator == Terminator::CondJmp);
    REQUIRE(b1.successors.size() == 2);
}

TEST_CASE("generated benchmarks match their own ground-truth block table") {
    for (const char* kind : {"maze", "parser", "checksum"}) {
        for (uint32_t size : {4u, 5u, 6u, 7u, 12u, 64u}) {
            const GeneratedBenchmark g = generate_benchmark(kind, size, 9);
            const ControlFlowGraph got = discover_blocks(g.image);
            REQUIRE(got.blocks.size() == g.truth.blocks.size());
            REQUIRE(got.blocks == g.truth.blocks);
            REQUIRE(got.edges == g.truth.edges);
            REQUIRE(got.entry == g.truth.entry);
        }
    }
}

TEST_CASE("critical edge detection matches the definition") {
    CHECK(find_critical_edges(discover_blocks(diamond())).empty());

    const ControlFlowGraph fig = discover_blocks(two_arm_join());
    const std::set<CriticalEdge> crit = find_critical_edges(fig);
    REQUIRE(crit.size() == 1);
    const Edge e = crit.begin()->edge;
    CHECK(e.first == 0);                // B1
    CHECK(fig.blocks.count(e.second));  // B3
    CHECK(fig.blocks.at(e.second).terminator == Terminator::Halt);

    Rng rng(0xce11);
    for (int p = 0; p < 200; ++p) {
        const ProgramImage im = random_program(rng, 4 + rng.bounded(40));
        const ControlFlowGraph cfg = discover_blocks(im);
        REQUIRE(as_edges(find_critical_edges(cfg)) ==
                critical_by_definition(cfg));
    }
}

TEST_CASE("splitting the two-arm join inserts one forwarding block") {
    const ProgramImage im = two_arm_join();
    const ControlFlowGraph cfg = discover_blocks(im);
    const SplitResult split = split_critical_edges(im, cfg);

    REQUIRE(split.dummy_map.size() == 1);
    const auto& [dummy, edge] = *split.dummy_map.begin();
    CHECK(edge.first == 0);
    CHECK(split.cfg.edges.count({0, dummy}));            // B1 -> B4
    CHECK(split.cfg.edges.count({dummy, edge.second}));  // B4 -> B3
    CHECK(!split.cfg.edges.count(edge));                 // old B1 -> B3 gone
    CHECK(find_critical_edges(split.cfg).empty());
    CHECK(split.cfg.blocks.size() == cfg.blocks.size() + 1);
}

TEST_CASE("splitting a critical-edge-free graph is the identity") {
    const ProgramImage im = diamond();
    const SplitResult split = split_critical_edges(im, discover_blocks(im));
    CHECK(split.image.bytes == im.bytes);
    CHECK(split.dummy_map.empty());
}

TEST_CASE("split preserves execution outcomes and is idempotent") {
    Rng rng(0x511);
    for (int p = 0; p < 150; ++p) {
        const ProgramImage im = random_program(rng, 4 + rng.bounded(40));
        const ControlFlowGraph cfg = discover_blocks(im);
        const SplitResult split = split_critical_edges(im, cfg);
        REQUIRE(find_critical_edges(split.cfg).empty());

        const SplitResult again = split_critical_edges(split.image, split.cfg);
        REQUIRE(again.image.bytes == split.image.bytes);
        REQUIRE(again.dummy_map.empty());

        for (int i = 0; i < 20; ++i) {
            const std::vector<uint8_t> input = random_input(rng);
            REQUIRE(execute(im, input).kind ==
                    execute(split.image, input).kind);
        }
    }
}

TEST_CASE("conditional back-edges to the entry block are critical") {
    // E counts to 2 then halts; B branches back to E on a magic byte. The
    // edge B -> E cannot be inferred from block coverage because E is also
    // covered by program start, so it must be split.
    ProgramBuilder a;
    auto l_halt = a.make_label();
    auto l_entry = a.make_label();
    a.bind(l_entry);
    a.loadi(1, 1);
    a.add(2, 1);
    a.loadi(4, 2);
    a.cmp(2, 4);
    a.jz(l_halt);
    a.loadin(0, 0);
    a.loadi(3, 7);
    a.cmp(0, 3);
    a.jz(l_entry);
    a.halt();
    a.bind(l_halt);
    a.halt();
    const ProgramImage im = a.finish(0);

    const ControlFlowGraph cfg = discover_blocks(im);
    const std::set<Edge> crit = as_edges(find_critical_edges(cfg));
    REQUIRE(crit.size() == 1);
    CHECK(crit.begin()->second == cfg.entry);

    const SplitResult split = split_critical_edges(im, cfg);
    CHECK(find_critical_edges(split.cfg).empty());
    const std::vector<uint8_t> loop_input = {7};
    CHECK(execute(im, loop_input).kind ==
          execute(split.image, loop_input).kind);

    // After the split, block coverage pins down the dynamic edges exactly.
    const TracerImage tracer = build_tracer(split.image, split.cfg);
    const TraceLog log = tracer.trace(loop_input);
    CHECK(infer_edge_coverage(log.block_set(), split.cfg) ==
          tracer.trace_edges(loop_input));
}

TEST_CASE("edge inference on a straight three-block chain") {
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
    const ProgramImage im = a.finish(0);
    const ControlFlowGraph cfg = discover_blocks(im);
    REQUIRE(cfg.blocks.size() == 3);

    std::set<uint32_t> covered;
    for (const auto& [s, b] : cfg.blocks)
        covered.insert(s);
    CHECK(infer_edge_coverage(covered, cfg) == cfg.edges);
}

TEST_CASE("edge inference requires a split graph") {
    const ProgramImage im = two_arm_join();
    const ControlFlowGraph cfg = discover_blocks(im);
    CHECK_THROWS_AS(infer_edge_coverage({0}, cfg), Error);
}

TEST_CASE("inferred edges equal dynamically traced edges after splitting") {
    Rng rng(0xed6e);
    for (int p = 0; p < 150; ++p) {
        const ProgramImage im = random_program(rng, 4 + rng.bounded(30));
        const SplitResult split = split_critical_edges(im, discover_blocks(im));
        const TracerImage tracer = build_tracer(split.image, split.cfg);
        for (int i = 0; i < 20; ++i) {
            const std::vector<uint8_t> input = random_input(rng);
            const TraceLog log = tracer.trace(input);
            REQUIRE(infer_edge_coverage(log.block_set(), split.cfg) ==
                    tracer.trace_edges(input));
        }
    }
}

TEST_CASE("blocks partition reachable code") {
    Rng rng(0xa11);
    for (int p = 0; p < 100; ++p) {
        const ProgramImage im = random_program(rng, 4 + rng.bounded(30));
        const ControlFlowGraph cfg = discover_blocks(im);
        uint32_t prev_end = 0;
        for (const auto& [start, bb] : cfg.blocks) {
            REQUIRE(start >= prev_end);
            REQUIRE(start + bb.len <= im.size());
            prev_end = start + bb.len;
        }
        for (const auto& [start, bb] : cfg.blocks) {
            const size_t n = bb.successors.size();
            switch (bb.terminator) {
                case Terminator::CondJmp: REQUIRE(n == 2); break;
                case Terminator::Jmp:
                case Terminator::Fallthrough: REQUIRE(n == 1); break;
                default: REQUIRE(n == 0);
            }
            for (uint32_t s : bb.successors)
                REQUIRE(cfg.blocks.count(s));
        }
        // every traced block address is a known block
        const std::vector<uint8_t> input = random_input(rng);
        const TracerImage tracer = build_tracer(im, cfg);
        for (uint32_t b : tracer.trace(input).blocks)
            REQUIRE(cfg.blocks.count(b));
    }
}

TEST_CASE("malformed images are rejected") {
    // jump target out of range
    CHECK_THROWS_AS(discover_blocks(load_image({OP_JMP, 100, 0}, 0)), Error);
    // conditional jump into the middle of a decoded instruction
    CHECK_THROWS_AS(
        discover_blocks(load_image({OP_JZ, 1, 0, OP_LOADI, 0, 0, OP_HALT}, 0)),
        Error);
    // trap byte in reachable code is not analyzable
    CHECK_THROWS_AS(
        discover_blocks(load_image({OP_JMP, 0, 0, kTrapByte}, 0)), Error);
    // straight-line run off the end of the image
    CHECK_THROWS_AS(discover_blocks(load_image({OP_LOADI, 0, 0}, 0)), Error);
}

TEST_CASE("inference tells the branch arms apart through the dummy") {
    const ProgramImage im = two_arm_join();
    const SplitResult split = split_critical_edges(im, discover_blocks(im));
    const uint32_t dummy = split.dummy_map.begin()->first;
    const uint32_t b2 = 0xc;  // fall-through arm
    const TracerImage tracer = build_tracer(split.image, split.cfg);

    // taken arm: the dummy is covered, the fall-through arm is not
    const std::vector<uint8_t> take = {5};
    const auto take_set = tracer.trace(take).block_set();
    REQUIRE(take_set.count(dummy));
    const auto take_edges = infer_edge_coverage(take_set, split.cfg);
    CHECK(take_edges.count({0, dummy}));
    CHECK(!take_edges.count({0, b2}));

    // fall-through arm: the reverse
    const std::vector<uint8_t> fall = {6};
    const auto fall_set = tracer.trace(fall).block_set();
    REQUIRE(!fall_set.count(dummy));
    const auto fall_edges = infer_edge_coverage(fall_set, split.cfg);
    CHECK(fall_edges.count({0, b2}));
    CHECK(!fall_edges.count({0, dummy}));
}

TEST_CASE("displacement overflow is reported, not truncated") {
    // every original branch stays in rel16 range, but a forwarding block
    // appended at the tail would not be reachable from the first branch
    ProgramBuilder a;
    auto l_b3 = a.make_label();
    auto l_b4 = a.make_label();
    auto l_end = a.make_label();
    a.loadin(0, 0);
    a.loadi(1, 5);
    a.cmp(0, 1);
    a.jz(l_b3);
    for (int i = 0; i < 10830; ++i)
        a.loadi(2, 1);  // giant fall-through arm
    a.cmp(0, 1);
    a.jz(l_b4);
    a.bind(l_b3);  // two in-edges, so (B1, B3) is critical
    a.loadi(3, 1);
    a.jmp(l_end);
    a.bind(l_b4);
    for (int i = 0; i < 200; ++i)
        a.loadi(4, 1);  // pushes the tail out of B1's reach
    a.jmp(l_end);
    a.bind(l_end);
    a.halt();
    const ProgramImage im = a.finish(0);
    REQUIRE(im.size() > 33000);
    const ControlFlowGraph cfg = discover_blocks(im);
    REQUIRE(!find_critical_edges(cfg).empty());
    try {
        split_critical_edges(im, cfg);
        FAIL("expected ImageTooLarge");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ImageTooLarge);
    }

    // the builder reports the same condition at assembly time
    CHECK_THROWS_AS(generate_benchmark("maze", 3000, 1), Error);
}

TEST_CASE("block table export is deterministic csv") {
    const ControlFlowGraph cfg = discover_blocks(two_arm_join());
    const std::string csv = blocks_to_csv(cfg);
    CHECK(csv ==
          "start,len,terminator,succ1,succ2\n"
          "0,12,condjmp,f,c\n"
          "c,3,fallthrough,f,\n"
          "f,1,halt,,\n");
}
