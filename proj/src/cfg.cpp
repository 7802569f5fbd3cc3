#include "ofz/cfg.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>

namespace ofz {

const char* terminator_name(Terminator t) {
    switch (t) {
        case Terminator::Fallthrough: return "fallthrough";
        case Terminator::Jmp: return "jmp";
        case Terminator::CondJmp: return "condjmp";
        case Terminator::Halt: return "halt";
        case Terminator::Abort: return "abort";
    }
    return "?";
}

namespace {

int16_t read_rel16(const std::vector<uint8_t>& code, uint32_t at) {
    return static_cast<int16_t>(static_cast<uint16_t>(code[at]) |
                                (static_cast<uint16_t>(code[at + 1]) << 8));
}

[[noreturn]] void malformed(const char* what, uint32_t addr) {
    char buf[96];
    snprintf(buf, sizeof buf, "%s at offset 0x%" PRIx32, what, addr);
    throw Error(ErrorCode::MalformedImage, buf);
}

}  // namespace

ControlFlowGraph discover_blocks(const ProgramImage& image) {
    const auto& code = image.bytes;
    const uint32_t len = image.size();
    if (image.entry >= len)
        throw Error(ErrorCode::MalformedImage, "entry out of range");

    // Pass 1: decode every instruction reachable from the entry. owner[k]
    // tracks which instruction start claims byte k so that a jump into the
    // middle of an already-decoded instruction is detected.
    std::map<uint32_t, uint8_t> instrs;  // start -> length
    std::vector<int64_t> owner(len, -1);
    std::set<uint32_t> leaders = {image.entry};
    std::vector<uint32_t> work = {image.entry};

    auto add_target = [&](uint32_t from, int64_t target) -> uint32_t {
        if (target < 0 || target >= len)
            malformed("jump target out of range", from);
        leaders.insert(static_cast<uint32_t>(target));
        work.push_back(static_cast<uint32_t>(target));
        return static_cast<uint32_t>(target);
    };

    while (!work.empty()) {
        uint32_t pc = work.back();
        work.pop_back();
        for (;;) {
            if (instrs.count(pc))
                break;  // rest of this run already decoded
            if (pc >= len)
                malformed("code runs past image end", pc);
            const uint8_t op = code[pc];
            if (op == kTrapByte)
                malformed("trap opcode in reachable code", pc);
            const int ilen = instr_len(op);
            if (ilen == 0)
                malformed("illegal opcode", pc);
            if (pc + ilen > len)
                malformed("operand runs past image end", pc);
            for (int k = 0; k < ilen; ++k) {
                if (owner[pc + k] != -1 && owner[pc + k] != pc)
                    malformed("jump target splits an instruction", pc);
                owner[pc + k] = pc;
            }
            instrs.emplace(pc, static_cast<uint8_t>(ilen));

            if (op == OP_JMP) {
                pc = add_target(pc, pc + 3 + read_rel16(code, pc + 1));
                break;
            }
            if (op == OP_JZ || op == OP_JNZ) {
                add_target(pc, pc + 3 + read_rel16(code, pc + 1));
                leaders.insert(pc + 3);  // fall-through arm starts a block
                pc += 3;
                continue;
            }
            if (op == OP_HALT || op == OP_ABORT)
                break;
            pc += ilen;
        }
    }

    // Every leader must itself be a decoded instruction start.
    for (uint32_t l : leaders)
        if (!instrs.count(l))
            malformed("jump target splits an instruction", l);

    // Pass 2: group instructions into blocks. A block ends at a control
    // transfer or just before the next leader. Runs only ever merge at jump
    // targets, so every unconsumed run head here is a leader.
    ControlFlowGraph cfg;
    cfg.entry = image.entry;
    for (auto it = instrs.begin(); it != instrs.end();) {
        const uint32_t start = it->first;
        BasicBlock bb;
        bb.start = start;
        for (;;) {
            const uint32_t at = it->first;
            const uint8_t op = code[at];
            const uint32_t next = at + it->second;
            ++it;
            bb.len = next - start;
            if (op == OP_HALT) {
                bb.terminator = Terminator::Halt;
                break;
            }
            if (op == OP_ABORT) {
                bb.terminator = Terminator::Abort;
                break;
            }
            if (op == OP_JMP) {
                bb.terminator = Terminator::Jmp;
                bb.successors.push_back(
                    static_cast<uint32_t>(at + 3 + read_rel16(code, at + 1)));
                break;
            }
            if (op == OP_JZ || op == OP_JNZ) {
                bb.terminator = Terminator::CondJmp;
                bb.successors.push_back(
                    static_cast<uint32_t>(at + 3 + read_rel16(code, at + 1)));
                bb.successors.push_back(next);
                break;
            }
            if (leaders.count(next)) {
                bb.terminator = Terminator::Fallthrough;
                bb.successors.push_back(next);
                break;
            }
        }
        for (uint32_t s : bb.successors)
            cfg.edges.insert({start, s});
        cfg.blocks.emplace(start, std::move(bb));
    }
    return cfg;
}

namespace {

struct Degrees {
    std::map<uint32_t, int> out;  // distinct successors
    std::map<uint32_t, int> in;   // distinct predecessors + virtual entry edge
};

Degrees count_degrees(const ControlFlowGraph& cfg) {
    Degrees d;
    for (const auto& [src, dst] : cfg.edges) {
        d.out[src] += 1;
        d.in[dst] += 1;
    }
    // The entry block is reachable without traversing any edge, so its
    // coverage never pins down one specific in-edge.
    d.in[cfg.entry] += 1;
    return d;
}

}  // namespace

std::set<CriticalEdge> find_critical_edges(const ControlFlowGraph& cfg) {
    const Degrees deg = count_degrees(cfg);
    std::set<CriticalEdge> result;
    for (const Edge& e : cfg.edges)
        if (deg.out.at(e.first) >= 2 && deg.in.at(e.second) >= 2)
            result.insert(CriticalEdge{e});
    return result;
}

SplitResult split_critical_edges(const ProgramImage& image,
                                 const ControlFlowGraph& cfg) {
    const std::set<CriticalEdge> critical = find_critical_edges(cfg);
    SplitResult res;
    res.image = image;
    if (critical.empty()) {
        res.cfg = cfg;
        return res;
    }

    auto& code = res.image.bytes;
    auto is_critical = [&critical](uint32_t a, uint32_t b) {
        return critical.count(CriticalEdge{{a, b}}) != 0;
    };

    // Appends `op target` at the tail and returns the new block's start.
    auto append_branch = [&code](uint8_t op, uint32_t target) -> uint32_t {
        const uint32_t at = static_cast<uint32_t>(code.size());
        const int64_t disp =
            static_cast<int64_t>(target) - (static_cast<int64_t>(at) + 3);
        if (disp < INT16_MIN || disp > INT16_MAX)
            throw Error(ErrorCode::ImageTooLarge,
                        "split displacement overflow");
        code.push_back(op);
        code.push_back(static_cast<uint8_t>(disp & 0xff));
        code.push_back(static_cast<uint8_t>((disp >> 8) & 0xff));
        return at;
    };
    auto retarget = [&code](uint32_t branch_at, uint32_t target) {
        const int64_t disp = static_cast<int64_t>(target) -
                             (static_cast<int64_t>(branch_at) + 3);
        if (disp < INT16_MIN || disp > INT16_MAX)
            throw Error(ErrorCode::ImageTooLarge,
                        "split displacement overflow");
        code[branch_at + 1] = static_cast<uint8_t>(disp & 0xff);
        code[branch_at + 2] = static_cast<uint8_t>((disp >> 8) & 0xff);
    };

    // Only a conditional branch has multiple out-edges, so every critical
    // edge originates at some block's trailing JZ/JNZ.
    for (const auto& [start, bb] : cfg.blocks) {
        if (bb.terminator != Terminator::CondJmp)
            continue;
        const uint32_t taken = bb.successors[0];
        const uint32_t fall = bb.successors[1];
        const bool taken_crit = is_critical(start, taken);
        const bool fall_crit = fall != taken && is_critical(start, fall);
        if (!taken_crit && !fall_crit)
            continue;

        const uint32_t branch_at = start + bb.len - 3;
        if (!fall_crit) {
            // Textbook case: point the branch at a fresh forwarding block.
            const uint32_t dummy = append_branch(OP_JMP, taken);
            res.dummy_map.emplace(dummy, Edge{start, taken});
            retarget(branch_at, dummy);
            continue;
        }
        // The fall-through arm is positional and cannot be retargeted, so
        // relocate the conditional itself: the original slot becomes a JMP
        // to a tail copy of the branch, whose fall-through is a forwarding
        // block for the old fall-through edge.
        const uint8_t cond_op = code[branch_at];
        uint32_t taken_target = taken;
        if (taken_crit) {
            const uint32_t dummy = append_branch(OP_JMP, taken);
            res.dummy_map.emplace(dummy, Edge{start, taken});
            taken_target = dummy;
        }
        const uint32_t relocated = append_branch(cond_op, taken_target);
        const uint32_t fall_dummy = append_branch(OP_JMP, fall);
        res.dummy_map.emplace(fall_dummy, Edge{start, fall});
        code[branch_at] = OP_JMP;
        retarget(branch_at, relocated);
    }

    res.cfg = discover_blocks(res.image);
    return res;
}

std::set<Edge> infer_edge_coverage(const std::set<uint32_t>& covered_blocks,
                                   const ControlFlowGraph& cfg) {
    if (!find_critical_edges(cfg).empty())
        throw Error(ErrorCode::CriticalEdgesPresent,
                    "edge inference requires a split CFG");
    const Degrees deg = count_degrees(cfg);
    std::set<Edge> result;
    for (const Edge& e : cfg.edges) {
        if (!covered_blocks.count(e.first) || !covered_blocks.count(e.second))
            continue;
        // A single-successor source must have left through this edge; a
        // single-in-edge destination must have been entered through it. The
        // virtual entry in-edge keeps the latter rule off the entry block.
        if (deg.out.at(e.first) == 1 || deg.in.at(e.second) == 1)
            result.insert(e);
    }
    return result;
}

std::string blocks_to_csv(const ControlFlowGraph& cfg) {
    std::string out = "start,len,terminator,succ1,succ2\n";
    char buf[128];
    for (const auto& [start, bb] : cfg.blocks) {
        snprintf(buf, sizeof buf, "%" PRIx32 ",%" PRIu32 ",%s", start, bb.len,
                 terminator_name(bb.terminator));
        out += buf;
        for (size_t i = 0; i < 2; ++i) {
            out += ',';
            if (i < bb.successors.size()) {
                snprintf(buf, sizeof buf, "%" PRIx32, bb.successors[i]);
                out += buf;
            }
        }
        out += '\n';
    }
    return out;
}

}  // namespace ofz
