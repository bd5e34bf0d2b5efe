#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace drivevqa {

std::string sha256_hex(std::span<const unsigned char> bytes);
std::string sha256_hex(std::string_view text);
std::string sha256_file(const std::filesystem::path& file);

std::string base64_encode(std::span<const unsigned char> bytes);

}  // namespace drivevqa
