#include "ofz/image.hpp"

#include <cstdio>
#include <cstring>
#include <memory>

namespace ofz {

ProgramImage load_image(std::vector<uint8_t> bytes, uint32_t entry) {
    if (bytes.empty())
        throw Error(ErrorCode::MalformedImage, "empty code");
    if (entry >= bytes.size())
        throw Error(ErrorCode::MalformedImage, "entry out of range");
    if (bytes[entry] == kTrapByte)
        throw Error(ErrorCode::MalformedImage, "entry byte is the trap opcode");
    ProgramImage image;
    image.bytes = std::move(bytes);
    image.entry = entry;
    return image;
}

uint8_t patch_byte(ProgramImage& image, uint32_t addr, uint8_t value) {
    if (addr >= image.bytes.size())
        throw Error(ErrorCode::AddressOutOfRange, "patch address out of range");
    const uint8_t original = image.bytes[addr];
    image.bytes[addr] = value;
    return original;
}

namespace {

constexpr char kMagic[4] = {'O', 'F', 'Z', '1'};

void put_u32le(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(static_cast<uint8_t>(v));
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v >> 16));
    out.push_back(static_cast<uint8_t>(v >> 24));
}

uint32_t get_u32le(const uint8_t* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) |
           (static_cast<uint32_t>(p[3]) << 24);
}

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

}  // namespace

void save_image_file(const ProgramImage& image, const std::string& path) {
    std::vector<uint8_t> out;
    out.reserve(12 + image.bytes.size());
    out.insert(out.end(), kMagic, kMagic + 4);
    put_u32le(out, image.entry);
    put_u32le(out, image.size());
    out.insert(out.end(), image.bytes.begin(), image.bytes.end());

    FilePtr f(fopen(path.c_str(), "wb"));
    if (!f)
        throw Error(ErrorCode::IoError, "cannot open for write: " + path);
    if (fwrite(out.data(), 1, out.size(), f.get()) != out.size())
        throw Error(ErrorCode::IoError, "short write: " + path);
}

ProgramImage load_image_file(const std::string& path) {
    FilePtr f(fopen(path.c_str(), "rb"));
    if (!f)
        throw Error(ErrorCode::IoError, "cannot open: " + path);
    std::vector<uint8_t> raw;
    uint8_t buf[4096];
    size_t n;
    while ((n = fread(buf, 1, sizeof buf, f.get())) > 0)
        raw.insert(raw.end(), buf, buf + n);

    if (raw.size() < 12 || std::memcmp(raw.data(), kMagic, 4) != 0)
        throw Error(ErrorCode::MalformedImage, "bad image magic: " + path);
    const uint32_t entry = get_u32le(raw.data() + 4);
    const uint32_t len = get_u32le(raw.data() + 8);
    if (raw.size() != 12u + len)
        throw Error(ErrorCode::MalformedImage, "image length mismatch: " + path);
    return load_image(std::vector<uint8_t>(raw.begin() + 12, raw.end()), entry);
}

uint64_t image_checksum(const ProgramImage& image) {
    uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](uint8_t b) {
        h ^= b;
        h *= 0x100000001b3ULL;
    };
    for (int i = 0; i < 4; ++i)
        mix(static_cast<uint8_t>(image.entry >> (8 * i)));
    for (uint8_t b : image.bytes)
        mix(b);
    return h;
}

}  // namespace ofz
