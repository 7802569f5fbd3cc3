#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ofz {

void write_file(const std::string& path, std::span<const uint8_t> data);
void write_text_file(const std::string& path, const std::string& text);
std::vector<uint8_t> read_file(const std::string& path);
std::string read_text_file(const std::string& path);

std::string to_hex(std::span<const uint8_t> data);
std::vector<uint8_t> from_hex(const std::string& hex);  // throws UsageError

uint64_t fnv1a64(std::span<const uint8_t> data);

}  // namespace ofz
