#include "ofz/util.hpp"

#include <cstdio>
#include <memory>

#include "ofz/error.hpp"

namespace ofz {

namespace {
struct FileCloser {
    void operator()(FILE* f) const {
        if (f) fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;
}  // namespace

void write_file(const std::string& path, std::span<const uint8_t> data) {
    FilePtr f(fopen(path.c_str(), "wb"));
    if (!f)
        throw Error(ErrorCode::IoError, "cannot open for write: " + path);
    if (!data.empty() && fwrite(data.data(), 1, data.size(), f.get()) != data.size())
        throw Error(ErrorCode::IoError, "short write: " + path);
}

void write_text_file(const std::string& path, const std::string& text) {
    write_file(path, {reinterpret_cast<const uint8_t*>(text.data()),
                      text.size()});
}

std::vector<uint8_t> read_file(const std::string& path) {
    FilePtr f(fopen(path.c_str(), "rb"));
    if (!f)
        throw Error(ErrorCode::IoError, "cannot open: " + path);
    std::vector<uint8_t> out;
    uint8_t buf[4096];
    size_t n;
    while ((n = fread(buf, 1, sizeof buf, f.get())) > 0)
        out.insert(out.end(), buf, buf + n);
    return out;
}

std::string read_text_file(const std::string& path) {
    const std::vector<uint8_t> raw = read_file(path);
    return std::string(raw.begin(), raw.end());
}

std::string to_hex(std::span<const uint8_t> data) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(data.size() * 2);
    for (uint8_t b : data) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xf]);
    }
    return out;
}

std::vector<uint8_t> from_hex(const std::string& hex) {
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    if (hex.size() % 2 != 0)
        throw Error(ErrorCode::UsageError, "odd-length hex string");
    std::vector<uint8_t> out;
    out.reserve(hex.size() / 2);
    for (size_t i = 0; i < hex.size(); i += 2) {
        const int hi = nibble(hex[i]);
        const int lo = nibble(hex[i + 1]);
        if (hi < 0 || lo < 0)
            throw Error(ErrorCode::UsageError, "bad hex digit in: " + hex);
        out.push_back(static_cast<uint8_t>((hi << 4) | lo));
    }
    return out;
}

uint64_t fnv1a64(std::span<const uint8_t> data) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (uint8_t b : data) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace ofz
