#include "ofz/dataset.hpp"

#include <cstdio>
#include <cstring>

#include "ofz/util.hpp"

namespace ofz {

Dataset record_dataset(const ProgramImage& image,
                       const std::vector<std::vector<uint8_t>>& seeds,
                       uint64_t rng_seed, uint64_t n, ExecBudget budget) {
    if (n < 1)
        throw Error(ErrorCode::UsageError, "dataset size must be >= 1");
    Dataset ds;
    ds.image_checksum = image_checksum(image);
    ds.rng_seed = rng_seed;
    ds.generating_mode = "trace-all";

    FuzzConfig cfg;
    cfg.mode = TracingMode::trace_all();
    cfg.rng_seed = rng_seed;
    cfg.budget = budget;
    cfg.stop_n = n;
    fuzz_loop(image, seeds, cfg,
              [&ds](const TestCase& tc) { ds.records.push_back(tc.bytes); });
    return ds;
}

namespace {

constexpr char kMagic[4] = {'O', 'F', 'D', 'S'};

void put_u32le(std::vector<uint8_t>& out, uint32_t v) {
    for (int i = 0; i < 4; ++i)
        out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

}  // namespace

void save_dataset_file(const Dataset& ds, const std::string& path) {
    std::vector<uint8_t> out;
    out.insert(out.end(), kMagic, kMagic + 4);
    put_u32le(out, static_cast<uint32_t>(ds.records.size()));
    for (const auto& r : ds.records) {
        put_u32le(out, static_cast<uint32_t>(r.size()));
        out.insert(out.end(), r.begin(), r.end());
    }
    write_file(path, out);

    char meta[160];
    snprintf(meta, sizeof meta,
             "image_checksum=%016llx\nrng_seed=%llu\nmode=%s\ncount=%zu\n",
             static_cast<unsigned long long>(ds.image_checksum),
             static_cast<unsigned long long>(ds.rng_seed),
             ds.generating_mode.c_str(), ds.records.size());
    write_text_file(path + ".meta", meta);
}

Dataset load_dataset_file(const std::string& path) {
    const std::vector<uint8_t> raw = read_file(path);
    if (raw.size() < 8 || std::memcmp(raw.data(), kMagic, 4) != 0)
        throw Error(ErrorCode::MalformedImage, "bad dataset magic: " + path);
    auto get_u32 = [&raw](size_t at) {
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<uint32_t>(raw[at + i]) << (8 * i);
        return v;
    };
    Dataset ds;
    const uint32_t count = get_u32(4);
    size_t at = 8;
    for (uint32_t i = 0; i < count; ++i) {
        if (at + 4 > raw.size())
            throw Error(ErrorCode::MalformedImage, "truncated dataset: " + path);
        const uint32_t len = get_u32(at);
        at += 4;
        if (at + len > raw.size())
            throw Error(ErrorCode::MalformedImage, "truncated dataset: " + path);
        ds.records.emplace_back(raw.begin() + at, raw.begin() + at + len);
        at += len;
    }
    if (at != raw.size())
        throw Error(ErrorCode::MalformedImage, "trailing bytes in dataset: " + path);

    // Sidecar metadata is optional on load; replay checks the checksum only
    // when one is recorded.
    try {
        const std::string meta = read_text_file(path + ".meta");
        for (size_t pos = 0; pos < meta.size();) {
            const size_t eol = meta.find('\n', pos);
            const std::string line =
                meta.substr(pos, eol == std::string::npos ? eol : eol - pos);
            pos = eol == std::string::npos ? meta.size() : eol + 1;
            const size_t eq = line.find('=');
            if (eq == std::string::npos)
                continue;
            const std::string key = line.substr(0, eq);
            const std::string val = line.substr(eq + 1);
            if (key == "image_checksum")
                ds.image_checksum = strtoull(val.c_str(), nullptr, 16);
            else if (key == "rng_seed")
                ds.rng_seed = strtoull(val.c_str(), nullptr, 10);
            else if (key == "mode")
                ds.generating_mode = val;
        }
    } catch (const Error&) {
        // no sidecar
    }
    return ds;
}

}  // namespace ofz
