#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace roadscope {

std::string read_text_file(const std::filesystem::path& path);
std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);
void write_binary_file(const std::filesystem::path& path, const void* data, std::size_t len);

// UTC "YYYY-MM-DDTHH:MM:SSZ". Honors SOURCE_DATE_EPOCH so that runs can be
// made byte-reproducible.
std::string utc_timestamp();

}  // namespace roadscope
