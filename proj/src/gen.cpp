#include "ofz/gen.hpp"

#include <cassert>
#include <deque>

#include "ofz/builder.hpp"

namespace ofz {

namespace {

// Layout plan: block lengths are fixed per flavor, so all starts are known
// before a single byte is emitted. The emitters assert against the plan.
struct Plan {
    std::vector<uint32_t> starts;
    explicit Plan(const std::vector<uint32_t>& lens) {
        uint32_t at = 0;
        for (uint32_t l : lens) {
            starts.push_back(at);
            at += l;
        }
    }
};

void add_truth_block(ControlFlowGraph& cfg, uint32_t start, uint32_t len,
                     Terminator t, std::vector<uint32_t> succs) {
    BasicBlock bb;
    bb.start = start;
    bb.len = len;
    bb.terminator = t;
    bb.successors = std::move(succs);
    for (uint32_t s : bb.successors)
        cfg.edges.insert({start, s});
    cfg.blocks.emplace(start, std::move(bb));
}

uint32_t count_reachable(const ControlFlowGraph& cfg) {
    std::set<uint32_t> seen = {cfg.entry};
    std::deque<uint32_t> work = {cfg.entry};
    while (!work.empty()) {
        const uint32_t b = work.front();
        work.pop_front();
        for (uint32_t s : cfg.blocks.at(b).successors)
            if (seen.insert(s).second)
                work.push_back(s);
    }
    return static_cast<uint32_t>(seen.size());
}

GeneratedBenchmark gen_maze(uint32_t size, uint64_t seed) {
    Rng rng(seed);
    const bool has_trap = size >= 6;
    const uint32_t rooms = size - (has_trap ? 3 : 2);
    const uint32_t trap_room = has_trap ? rooms / 2 : 0;

    std::vector<uint8_t> keys(rooms);
    for (auto& k : keys)
        k = static_cast<uint8_t>(1 + rng.bounded(255));

    // Layout: rooms (12 bytes each), treasure, reject, trap.
    std::vector<uint32_t> lens(rooms, 12);
    lens.push_back(1);  // treasure (ABORT)
    lens.push_back(1);  // reject (HALT)
    if (has_trap)
        lens.push_back(1);  // trap (ABORT)
    const Plan plan(lens);
    const uint32_t treasure = plan.starts[rooms];
    const uint32_t reject = plan.starts[rooms + 1];
    const uint32_t trap = has_trap ? plan.starts[rooms + 2] : 0;

    GeneratedBenchmark g;
    g.kind = "maze";
    g.size = size;
    g.rng_seed = seed;

    ProgramBuilder a;
    auto lbl_reject = a.make_label();
    auto lbl_trap = a.make_label();
    for (uint32_t i = 0; i < rooms; ++i) {
        assert(a.here() == plan.starts[i]);
        a.loadin(0, static_cast<uint8_t>(i));
        a.loadi(1, keys[i]);
        a.cmp(0, 1);
        const bool to_trap = has_trap && i == trap_room;
        if (to_trap)
            a.jnz(lbl_trap);
        else
            a.jnz(lbl_reject);
        const uint32_t wrong = to_trap ? trap : reject;
        const uint32_t next = (i + 1 < rooms) ? plan.starts[i + 1] : treasure;
        add_truth_block(g.truth, plan.starts[i], 12, Terminator::CondJmp,
                        {wrong, next});
    }
    assert(a.here() == treasure);
    a.abort();
    add_truth_block(g.truth, treasure, 1, Terminator::Abort, {});
    a.bind(lbl_reject);
    assert(a.here() == reject);
    a.halt();
    add_truth_block(g.truth, reject, 1, Terminator::Halt, {});
    if (has_trap) {
        a.bind(lbl_trap);
        assert(a.here() == trap);
        a.abort();
        add_truth_block(g.truth, trap, 1, Terminator::Abort, {});
    }

    g.image = a.finish(0);
    g.truth.entry = 0;
    g.crash_sites.insert(treasure);
    if (has_trap)
        g.crash_sites.insert(trap);
    g.reachable_blocks = count_reachable(g.truth);
    g.solution.assign(keys.begin(), keys.end());
    if (has_trap) {
        g.secondary.assign(keys.begin(), keys.begin() + trap_room);
        g.secondary.push_back(static_cast<uint8_t>(keys[trap_room] ^ 0xff));
    }
    return g;
}

GeneratedBenchmark gen_parser(uint32_t size, uint64_t seed) {
    Rng rng(seed);
    GeneratedBenchmark g;
    g.kind = "parser";
    g.size = size;
    g.rng_seed = seed;

    // Fixed blocks: header checks, accept, reject. The remainder is split
    // between dispatch blocks and per-type bodies, each a chain of field
    // checks ending in a jump to accept. When there is room, body 0 gains a
    // crash guard whose taken arm is a planted ABORT block; a leftover
    // single block becomes a third header check.
    const uint32_t remaining = size - 4;
    const bool extra_header = remaining == 1;
    const bool has_crash = remaining >= 4;
    uint32_t variants = 0;
    std::vector<uint32_t> body_blocks;
    if (remaining >= 2) {
        const uint32_t pool = remaining - (has_crash ? 1 : 0);
        variants = std::max<uint32_t>(1, std::min<uint32_t>(4, pool / 4));
        if (2 * variants > pool)
            variants = pool / 2;
        body_blocks.assign(variants, 0);
        const uint32_t for_bodies = pool - variants;
        for (uint32_t k = 0; k < variants; ++k)
            body_blocks[k] = for_bodies / variants;
        body_blocks[0] += for_bodies % variants;
        assert(body_blocks[variants - 1] >= 1);
        assert(!has_crash || body_blocks[0] >= 2);
    }
    auto nfields_of = [&](uint32_t k) -> uint32_t {
        // body 0 spends one block on the crash guard when present
        return body_blocks[k] - 1 - (k == 0 && has_crash ? 1 : 0);
    };

    std::vector<uint8_t> magic(extra_header ? 3 : 2);
    for (auto& m : magic)
        m = static_cast<uint8_t>(1 + rng.bounded(255));
    std::vector<uint8_t> type_tags(variants);
    for (auto& t : type_tags)
        t = static_cast<uint8_t>(1 + rng.bounded(255));
    std::vector<std::vector<uint8_t>> fields(variants);
    for (uint32_t k = 0; k < variants; ++k)
        for (uint32_t j = 0; j < nfields_of(k); ++j)
            fields[k].push_back(static_cast<uint8_t>(1 + rng.bounded(255)));
    const uint8_t guard_byte = static_cast<uint8_t>(1 + rng.bounded(255));

    // Layout: h0 h1 [h2] d_0..d_{V-1} body_{V-1} .. body_0 [abort] accept
    // reject.
    struct Piece {
        enum What { Header, Dispatch, Field, Guard, TerminalJmp, AbortBlock,
                    Accept, Reject } what;
        uint32_t variant = 0;
        uint32_t index = 0;
        uint32_t len = 0;
    };
    const uint32_t headers = extra_header ? 3 : 2;
    std::vector<Piece> pieces;
    for (uint32_t h = 0; h < headers; ++h)
        pieces.push_back({Piece::Header, 0, h, 12});
    for (uint32_t k = 0; k < variants; ++k)
        pieces.push_back({Piece::Dispatch, k, 0, k == 0 ? 12u : 9u});
    for (uint32_t k = variants; k-- > 0;) {
        for (uint32_t j = 0; j < nfields_of(k); ++j)
            pieces.push_back({Piece::Field, k, j, 12});
        if (k == 0 && has_crash)
            pieces.push_back({Piece::Guard, k, 0, 12});
        pieces.push_back({Piece::TerminalJmp, k, 0, 3});
    }
    if (has_crash)
        pieces.push_back({Piece::AbortBlock, 0, 0, 1});
    pieces.push_back({Piece::Accept, 0, 0, 1});
    pieces.push_back({Piece::Reject, 0, 0, 1});

    std::vector<uint32_t> lens;
    for (const auto& p : pieces)
        lens.push_back(p.len);
    const Plan plan(lens);

    auto start_of = [&](Piece::What w, uint32_t variant) -> uint32_t {
        for (size_t i = 0; i < pieces.size(); ++i)
            if (pieces[i].what == w && pieces[i].variant == variant)
                return plan.starts[i];
        assert(false && "piece not found");
        return 0;
    };
    auto body_start = [&](uint32_t k) -> uint32_t {
        if (nfields_of(k) > 0) {
            for (size_t i = 0; i < pieces.size(); ++i)
                if (pieces[i].what == Piece::Field && pieces[i].variant == k &&
                    pieces[i].index == 0)
                    return plan.starts[i];
        }
        if (k == 0 && has_crash)
            return start_of(Piece::Guard, 0);
        return start_of(Piece::TerminalJmp, k);
    };

    const uint32_t accept = start_of(Piece::Accept, 0);
    const uint32_t reject = start_of(Piece::Reject, 0);

    ProgramBuilder a;
    auto lbl_accept = a.make_label();
    auto lbl_reject = a.make_label();
    auto lbl_abort = a.make_label();
    std::vector<ProgramBuilder::Label> lbl_body(variants);
    for (uint32_t k = 0; k < variants; ++k)
        lbl_body[k] = a.make_label();

    for (size_t i = 0; i < pieces.size(); ++i) {
        const Piece& p = pieces[i];
        assert(a.here() == plan.starts[i]);
        const uint32_t here = plan.starts[i];
        const uint32_t next = here + p.len;
        const uint32_t k = p.variant;
        switch (p.what) {
            case Piece::Header:
                a.loadin(0, static_cast<uint8_t>(p.index));
                a.loadi(1, magic[p.index]);
                a.cmp(0, 1);
                a.jnz(lbl_reject);
                add_truth_block(g.truth, here, 12, Terminator::CondJmp,
                                {reject, next});
                break;
            case Piece::Dispatch:
                if (k == 0)
                    a.loadin(2, 2);
                a.loadi(1, type_tags[k]);
                a.cmp(2, 1);
                if (k + 1 < variants) {
                    a.jz(lbl_body[k]);
                    add_truth_block(g.truth, here, p.len, Terminator::CondJmp,
                                    {body_start(k), next});
                } else {
                    // last dispatch: mismatch rejects, match falls through
                    // into its body (laid out right after)
                    a.jnz(lbl_reject);
                    add_truth_block(g.truth, here, p.len, Terminator::CondJmp,
                                    {reject, next});
                }
                break;
            case Piece::Field:
                if (p.index == 0)
                    a.bind(lbl_body[k]);
                a.loadin(0, static_cast<uint8_t>(3 + p.index));
                a.loadi(1, fields[k][p.index]);
                a.cmp(0, 1);
                a.jnz(lbl_reject);
                add_truth_block(g.truth, here, 12, Terminator::CondJmp,
                                {reject, next});
                break;
            case Piece::Guard:
                if (nfields_of(0) == 0)
                    a.bind(lbl_body[0]);
                a.loadin(0, static_cast<uint8_t>(3 + nfields_of(0)));
                a.loadi(1, guard_byte);
                a.cmp(0, 1);
                a.jz(lbl_abort);
                add_truth_block(g.truth, here, 12, Terminator::CondJmp,
                                {start_of(Piece::AbortBlock, 0), next});
                break;
            case Piece::TerminalJmp:
                if (body_blocks[k] == 1)
                    a.bind(lbl_body[k]);
                a.jmp(lbl_accept);
                add_truth_block(g.truth, here, 3, Terminator::Jmp, {accept});
                break;
            case Piece::AbortBlock:
                a.bind(lbl_abort);
                a.abort();
                add_truth_block(g.truth, here, 1, Terminator::Abort, {});
                g.crash_sites.insert(here);
                break;
            case Piece::Accept:
                a.bind(lbl_accept);
                a.halt();
                add_truth_block(g.truth, here, 1, Terminator::Halt, {});
                break;
            case Piece::Reject:
                a.bind(lbl_reject);
                a.halt();
                add_truth_block(g.truth, here, 1, Terminator::Halt, {});
                break;
        }
    }

    g.image = a.finish(0);
    g.truth.entry = 0;
    g.reachable_blocks = count_reachable(g.truth);
    g.solution = magic;
    if (variants > 0) {
        g.solution.push_back(type_tags[0]);
        for (uint8_t f : fields[0])
            g.solution.push_back(f);
        if (has_crash)
            g.solution.push_back(guard_byte);
    }
    return g;
}

GeneratedBenchmark gen_checksum(uint32_t size, uint64_t seed) {
    Rng rng(seed);
    GeneratedBenchmark g;
    g.kind = "checksum";
    g.size = size;
    g.rng_seed = seed;

    // Fixed blocks: final compare, good (HALT), crash (ABORT). Stages either
    // plain (XOR one input byte, 1 block) or bonus (an extra branch-and-jump
    // pair, 2 blocks). Bonus fall-through edges are critical by design.
    const uint32_t remaining = size - 3;
    const uint32_t bonuses = std::min<uint32_t>(3, remaining / 2);
    const uint32_t plains = remaining - 2 * bonuses;
    const uint32_t stages = bonuses + plains;

    std::vector<uint8_t> bonus_tag(bonuses);
    for (auto& b : bonus_tag)
        b = static_cast<uint8_t>(1 + rng.bounded(255));

    // Layout: stage_0..stage_{S-1}, final, good, crash, bonus blocks.
    struct Piece {
        enum What { BonusStage, PlainStage, Final, Good, Crash, Bonus } what;
        uint32_t index = 0;
        uint32_t len = 0;
    };
    std::vector<Piece> pieces;
    for (uint32_t j = 0; j < stages; ++j) {
        if (j < bonuses)
            pieces.push_back({Piece::BonusStage, j, 15});
        else
            pieces.push_back({Piece::PlainStage, j, 9});
    }
    pieces.push_back({Piece::Final, 0, 9});
    pieces.push_back({Piece::Good, 0, 1});
    pieces.push_back({Piece::Crash, 0, 1});
    for (uint32_t j = 0; j < bonuses; ++j)
        pieces.push_back({Piece::Bonus, j, 9});

    std::vector<uint32_t> lens;
    for (const auto& p : pieces)
        lens.push_back(p.len);
    const Plan plan(lens);

    auto start_of = [&](Piece::What w, uint32_t index) -> uint32_t {
        for (size_t i = 0; i < pieces.size(); ++i)
            if (pieces[i].what == w && pieces[i].index == index)
                return plan.starts[i];
        assert(false && "piece not found");
        return 0;
    };
    auto stage_start = [&](uint32_t j) -> uint32_t {
        if (j >= stages)
            return start_of(Piece::Final, 0);
        return plan.starts[j];
    };

    const uint32_t good = start_of(Piece::Good, 0);
    const uint32_t crash = start_of(Piece::Crash, 0);

    // Crash when the XOR of all stage bytes equals the target; derive the
    // target from a random solution so the crash is always reachable.
    g.solution.resize(stages);
    uint8_t target = 0;
    for (auto& v : g.solution) {
        v = rng.byte();
        target ^= v;
    }

    ProgramBuilder a;
    std::vector<ProgramBuilder::Label> lbl_stage(stages + 1);
    for (auto& l : lbl_stage)
        l = a.make_label();
    std::vector<ProgramBuilder::Label> lbl_bonus(bonuses);
    for (auto& l : lbl_bonus)
        l = a.make_label();
    auto lbl_crash = a.make_label();

    for (size_t i = 0; i < pieces.size(); ++i) {
        const Piece& p = pieces[i];
        assert(a.here() == plan.starts[i]);
        const uint32_t here = plan.starts[i];
        switch (p.what) {
            case Piece::BonusStage: {
                a.bind(lbl_stage[p.index]);
                a.loadin(0, static_cast<uint8_t>(p.index));
                a.xor_(7, 0);
                a.loadi(1, bonus_tag[p.index]);
                a.cmp(0, 1);
                a.jz(lbl_bonus[p.index]);
                add_truth_block(g.truth, here, 15, Terminator::CondJmp,
                                {start_of(Piece::Bonus, p.index),
                                 stage_start(p.index + 1)});
                break;
            }
            case Piece::PlainStage: {
                a.bind(lbl_stage[p.index]);
                a.loadin(0, static_cast<uint8_t>(p.index));
                a.xor_(7, 0);
                a.jmp(lbl_stage[p.index + 1]);
                add_truth_block(g.truth, here, 9, Terminator::Jmp,
                                {stage_start(p.index + 1)});
                break;
            }
            case Piece::Final:
                a.bind(lbl_stage[stages]);
                a.loadi(1, target);
                a.cmp(7, 1);
                a.jz(lbl_crash);
                add_truth_block(g.truth, here, 9, Terminator::CondJmp,
                                {crash, good});
                break;
            case Piece::Good:
                a.halt();
                add_truth_block(g.truth, here, 1, Terminator::Halt, {});
                break;
            case Piece::Crash:
                a.bind(lbl_crash);
                a.abort();
                add_truth_block(g.truth, here, 1, Terminator::Abort, {});
                g.crash_sites.insert(here);
                break;
            case Piece::Bonus:
                a.bind(lbl_bonus[p.index]);
                a.loadi(2, bonus_tag[p.index]);
                a.xor_(6, 2);
                a.jmp(lbl_stage[p.index + 1]);
                add_truth_block(g.truth, here, 9, Terminator::Jmp,
                                {stage_start(p.index + 1)});
                break;
        }
    }

    g.image = a.finish(0);
    g.truth.entry = 0;
    g.reachable_blocks = count_reachable(g.truth);
    return g;
}

}  // namespace

GeneratedBenchmark generate_benchmark(const std::string& kind, uint32_t size,
                                      uint64_t rng_seed) {
    if (size < 4)
        throw Error(ErrorCode::SizeTooSmall, "benchmark size must be >= 4");
    if (kind == "maze")
        return gen_maze(size, rng_seed);
    if (kind == "parser")
        return gen_parser(size, rng_seed);
    if (kind == "checksum")
        return gen_checksum(size, rng_seed);
    throw Error(ErrorCode::UsageError, "unknown benchmark kind: " + kind);
}

ProgramImage random_program(Rng& rng, uint32_t approx_blocks) {
    const uint32_t n = std::max<uint32_t>(2, approx_blocks);
    ProgramBuilder a;
    std::vector<ProgramBuilder::Label> lbl(n);
    for (auto& l : lbl)
        l = a.make_label();

    for (uint32_t i = 0; i < n; ++i) {
        a.bind(lbl[i]);
        // 0-2 filler ops
        for (uint64_t f = rng.bounded(3); f > 0; --f) {
            switch (rng.bounded(4)) {
                case 0: a.loadi(rng.byte() & 7, rng.byte()); break;
                case 1: a.loadin(rng.byte() & 7, rng.byte() & 15); break;
                case 2: a.add(rng.byte() & 7, rng.byte() & 7); break;
                case 3: a.mov(rng.byte() & 7, rng.byte() & 7); break;
            }
        }
        if (i + 1 == n) {
            a.halt();
            break;
        }
        if (rng.chance(1, 10)) {  // occasional extra exit
            a.abort();
            continue;
        }
        // branch on an input byte; targets are strictly forward, so the
        // program is acyclic and always terminates
        const uint32_t target = i + 1 + static_cast<uint32_t>(
                                            rng.bounded(n - i - 1));
        switch (rng.bounded(4)) {
            case 0:
                a.jmp(lbl[target]);
                break;
            default:
                a.loadin(0, rng.byte() & 15);
                a.loadi(1, rng.byte());
                a.cmp(0, 1);
                if (rng.bounded(2))
                    a.jz(lbl[target]);
                else
                    a.jnz(lbl[target]);
                break;
        }
    }
    return a.finish(0);
}

}  // namespace ofz
