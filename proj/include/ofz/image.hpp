#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ofz/error.hpp"

namespace ofz {

// Instruction set. Every opcode is exactly one byte; operands follow inline.
// 0xCC is reserved as the trap opcode so that overwriting the first byte of
// any instruction always yields a decodable trap.
enum Op : uint8_t {
    OP_HALT = 0x00,   // clean exit
    OP_ABORT = 0x01,  // crash
    OP_JMP = 0x02,    // rel16 (LE, signed, relative to next instruction)
    OP_JZ = 0x03,     // rel16, taken when ZF set
    OP_JNZ = 0x04,    // rel16, taken when ZF clear
    OP_LOADI = 0x05,  // reg, imm8
    OP_LOADIN = 0x06, // reg, idx8 -> input[idx], 0 past end
    OP_ADD = 0x07,    // reg, reg (sets ZF)
    OP_SUB = 0x08,    // reg, reg (sets ZF)
    OP_XOR = 0x09,    // reg, reg (sets ZF)
    OP_CMP = 0x0a,    // reg, reg (ZF = equal)
    OP_MOV = 0x0b,    // reg, reg
    OP_TRAP = 0xCC,   // reserved interrupt byte
};

constexpr uint8_t kTrapByte = 0xCC;
constexpr int kNumRegs = 8;

// Byte length of the instruction starting with `op`, or 0 if the opcode is
// not part of the ISA. OP_TRAP decodes with length 1.
inline int instr_len(uint8_t op) {
    switch (op) {
        case OP_HALT:
        case OP_ABORT:
        case OP_TRAP:
            return 1;
        case OP_JMP:
        case OP_JZ:
        case OP_JNZ:
        case OP_LOADI:
        case OP_LOADIN:
        case OP_ADD:
        case OP_SUB:
        case OP_XOR:
        case OP_CMP:
        case OP_MOV:
            return 3;
        default:
            return 0;
    }
}

// A loaded target program: flat code bytes plus an entry offset. Images are
// the unit of patching; the VM never writes to them during execution.
//
// input_len_max is fixed at 256: OP_LOADIN carries an 8-bit index, so bytes
// past index 255 can never influence execution. The on-disk format does not
// carry this field.
struct ProgramImage {
    std::vector<uint8_t> bytes;
    uint32_t entry = 0;
    uint32_t input_len_max = 256;

    uint32_t size() const { return static_cast<uint32_t>(bytes.size()); }
};

// Validates and wraps raw code bytes. Rejects empty code, an out-of-range
// entry, and an entry byte equal to the trap opcode.
ProgramImage load_image(std::vector<uint8_t> bytes, uint32_t entry);

// Overwrites one code byte and returns the displaced value.
// Throws AddressOutOfRange.
uint8_t patch_byte(ProgramImage& image, uint32_t addr, uint8_t value);

// Image file format, bit-exact:
//   magic "OFZ1" | u32 LE entry | u32 LE code length | code bytes
void save_image_file(const ProgramImage& image, const std::string& path);
ProgramImage load_image_file(const std::string& path);

// FNV-1a over the entry offset (LE) followed by the code bytes. Used to tie
// datasets and run metadata to the image they were produced from.
uint64_t image_checksum(const ProgramImage& image);

}  // namespace ofz
