#pragma once

#include <cstdint>

namespace ofz {

// xoshiro256** seeded through splitmix64. Every randomized component in the
// framework draws from this generator so that runs are replayable from the
// recorded seed alone; std::uniform_int_distribution is avoided because its
// output is not pinned by the standard.
class Rng {
  public:
    static constexpr const char* kName = "xoshiro256ss";
    static constexpr const char* kVersion = "1.0";

    explicit Rng(uint64_t seed) {
        // splitmix64 stream expands the seed into the four state words.
        uint64_t x = seed;
        for (auto& w : state_) {
            x += 0x9e3779b97f4a7c15ULL;
            uint64_t z = x;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            w = z ^ (z >> 31);
        }
    }

    uint64_t next() {
        const uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform value in [0, n). Multiply-shift reduction; n = 0 is a caller bug.
    uint64_t bounded(uint64_t n) {
        return static_cast<uint64_t>(
            (static_cast<__uint128_t>(next()) * n) >> 64);
    }

    uint8_t byte() { return static_cast<uint8_t>(next() & 0xff); }

    bool chance(uint64_t num, uint64_t den) { return bounded(den) < num; }

  private:
    static uint64_t rotl(uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    uint64_t state_[4];
};

}  // namespace ofz
