#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace roadscope {

std::string sha256_hex(const void* data, std::size_t len);
std::string sha256_hex(const std::vector<std::uint8_t>& bytes);
std::string sha256_hex(const std::string& s);

}  // namespace roadscope
