#pragma once

#include <cstdint>
#include <span>
#include <type_traits>

#include "ofz/image.hpp"

namespace ofz {

enum class ExecKind : uint8_t { CleanExit, Crash, Timeout, Trap };

// Result of one execution. instructions_executed counts completed
// instructions including the terminating HALT/ABORT; a trap aborts at fetch
// and does not count. trap_addr is meaningful only when kind == Trap.
struct ExecOutcome {
    ExecKind kind = ExecKind::CleanExit;
    uint32_t trap_addr = 0;
    uint64_t instructions_executed = 0;

    bool operator==(const ExecOutcome&) const = default;
};

// Instruction budget standing in for a wall-clock timeout. A run that has
// not terminated after max_instructions completed instructions reports
// Timeout with instructions_executed == max_instructions. A run whose final
// instruction lands exactly on the budget reports its true outcome.
struct ExecBudget {
    uint64_t max_instructions = 1'000'000;
};

// Forkserver analogue: a frozen copy of the image that executions are
// (conceptually) forked from. Restoring is a full O(size) copy and is the
// timed "start fsrvr" component in bench mode.
struct Snapshot {
    std::vector<uint8_t> image_bytes;
    uint32_t entry = 0;
    uint32_t input_len_max = 256;
};

Snapshot take_snapshot(const ProgramImage& image);
ProgramImage restore(const Snapshot& snapshot);

const char* exec_kind_name(ExecKind k);

namespace detail {

// Interpreter core, parameterized over an observer so the tracing variants
// share the exact fetch/decode loop with the plain one. The observer sees
// every fetched instruction address before it is decoded; kTraced = false
// compiles the hook out entirely.
template <typename Observer>
ExecOutcome run_vm(const ProgramImage& image, std::span<const uint8_t> input,
                   ExecBudget budget, Observer&& observe) {
    constexpr bool kTraced =
        !std::is_same_v<std::remove_cvref_t<Observer>, std::nullptr_t>;

    const uint8_t* code = image.bytes.data();
    const int64_t len = static_cast<int64_t>(image.bytes.size());
    const uint64_t max_instr = budget.max_instructions;

    uint64_t regs[kNumRegs] = {};
    bool zf = false;
    int64_t pc = image.entry;
    uint64_t executed = 0;

    auto reg_of = [](uint8_t b) { return b & (kNumRegs - 1); };
    auto rel16 = [code](int64_t at) {
        return static_cast<int16_t>(static_cast<uint16_t>(code[at]) |
                                    (static_cast<uint16_t>(code[at + 1]) << 8));
    };

    for (;;) {
        if (executed == max_instr)
            return {ExecKind::Timeout, 0, executed};
        if (pc < 0 || pc >= len)
            return {ExecKind::Crash, 0, executed};

        if constexpr (kTraced)
            observe(static_cast<uint32_t>(pc));

        const uint8_t op = code[pc];
        const int ilen = instr_len(op);
        if (ilen == 0)  // illegal opcode
            return {ExecKind::Crash, 0, executed};
        if (op == OP_TRAP)
            return {ExecKind::Trap, static_cast<uint32_t>(pc), executed};
        if (pc + ilen > len)  // operand runs past image end
            return {ExecKind::Crash, 0, executed};

        switch (op) {
            case OP_HALT:
                ++executed;
                return {ExecKind::CleanExit, 0, executed};
            case OP_ABORT:
                ++executed;
                return {ExecKind::Crash, 0, executed};
            case OP_JMP:
                ++executed;
                pc = pc + 3 + rel16(pc + 1);
                continue;
            case OP_JZ:
                ++executed;
                pc = zf ? pc + 3 + rel16(pc + 1) : pc + 3;
                continue;
            case OP_JNZ:
                ++executed;
                pc = !zf ? pc + 3 + rel16(pc + 1) : pc + 3;
                continue;
            case OP_LOADI:
                regs[reg_of(code[pc + 1])] = code[pc + 2];
                break;
            case OP_LOADIN: {
                const uint8_t idx = code[pc + 2];
                regs[reg_of(code[pc + 1])] =
                    idx < input.size() ? input[idx] : 0;
                break;
            }
            case OP_ADD: {
                uint64_t& d = regs[reg_of(code[pc + 1])];
                d += regs[reg_of(code[pc + 2])];
                zf = (d == 0);
                break;
            }
            case OP_SUB: {
                uint64_t& d = regs[reg_of(code[pc + 1])];
                d -= regs[reg_of(code[pc + 2])];
                zf = (d == 0);
                break;
            }
            case OP_XOR: {
                uint64_t& d = regs[reg_of(code[pc + 1])];
                d ^= regs[reg_of(code[pc + 2])];
                zf = (d == 0);
                break;
            }
            case OP_CMP:
                zf = (regs[reg_of(code[pc + 1])] ==
                      regs[reg_of(code[pc + 2])]);
                break;
            case OP_MOV:
                regs[reg_of(code[pc + 1])] = regs[reg_of(code[pc + 2])];
                break;
        }
        ++executed;
        pc += 3;
    }
}

}  // namespace detail

// Executes the image against one input. Deterministic: identical
// (image, input, budget) triples produce identical outcomes.
ExecOutcome execute(const ProgramImage& image, std::span<const uint8_t> input,
                    ExecBudget budget = {});

}  // namespace ofz
