#pragma once

#include <cstdint>
#include <vector>

#include "ofz/image.hpp"

namespace ofz {

// Small two-pass assembler for building images in code. Branch targets are
// symbolic labels resolved by finish(); rel16 displacements are validated
// against the i16 range.
class ProgramBuilder {
  public:
    using Label = uint32_t;

    Label make_label() {
        labels_.push_back(kUnbound);
        return static_cast<Label>(labels_.size() - 1);
    }

    // Binds `l` to the current emit position.
    void bind(Label l) { labels_[l] = here(); }

    uint32_t here() const { return static_cast<uint32_t>(code_.size()); }

    void halt() { emit(OP_HALT); }
    void abort() { emit(OP_ABORT); }

    void jmp(Label l) { emit_branch(OP_JMP, l); }
    void jz(Label l) { emit_branch(OP_JZ, l); }
    void jnz(Label l) { emit_branch(OP_JNZ, l); }

    void loadi(uint8_t reg, uint8_t imm) { emit(OP_LOADI, reg, imm); }
    void loadin(uint8_t reg, uint8_t idx) { emit(OP_LOADIN, reg, idx); }
    void add(uint8_t dst, uint8_t src) { emit(OP_ADD, dst, src); }
    void sub(uint8_t dst, uint8_t src) { emit(OP_SUB, dst, src); }
    void xor_(uint8_t dst, uint8_t src) { emit(OP_XOR, dst, src); }
    void cmp(uint8_t a, uint8_t b) { emit(OP_CMP, a, b); }
    void mov(uint8_t dst, uint8_t src) { emit(OP_MOV, dst, src); }

    // Resolves all fixups and returns the validated image.
    ProgramImage finish(uint32_t entry = 0);

  private:
    static constexpr uint32_t kUnbound = 0xffffffff;

    struct Fixup {
        uint32_t at;  // offset of the rel16 field
        Label label;
    };

    void emit(uint8_t op) { code_.push_back(op); }
    void emit(uint8_t op, uint8_t a, uint8_t b) {
        code_.push_back(op);
        code_.push_back(a);
        code_.push_back(b);
    }
    void emit_branch(uint8_t op, Label l) {
        code_.push_back(op);
        fixups_.push_back({here(), l});
        code_.push_back(0);
        code_.push_back(0);
    }

    std::vector<uint8_t> code_;
    std::vector<uint32_t> labels_;
    std::vector<Fixup> fixups_;
};

}  // namespace ofz
