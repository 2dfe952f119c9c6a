#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace roadscope {

struct PngImage {
    int width = 0;
    int height = 0;
    int channels = 0;  // 1 = gray, 3 = rgb
    std::vector<std::uint8_t> pixels;  // row-major, interleaved
};

// Deterministic encoder (fixed filter/compression settings, no time chunk).
// text entries are emitted as tEXt chunks, used to stamp seed/config digest.
void write_png(const std::string& path, int width, int height, int channels,
               const std::vector<std::uint8_t>& pixels,
               const std::vector<std::pair<std::string, std::string>>& text = {});

PngImage read_png(const std::string& path);

}  // namespace roadscope
