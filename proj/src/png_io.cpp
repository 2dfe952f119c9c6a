#include "roadscope/png_io.hpp"

#include <png.h>

#include <cstdio>
#include <memory>

#include "roadscope/error.hpp"

namespace roadscope {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

void write_png(const std::string& path, int width, int height, int channels,
               const std::vector<std::uint8_t>& pixels,
               const std::vector<std::pair<std::string, std::string>>& text) {
    if (channels != 1 && channels != 3) fail(Errc::internal, "png writer supports 1 or 3 channels");
    if (pixels.size() != static_cast<std::size_t>(width) * height * channels)
        fail(Errc::size_mismatch, "pixel buffer does not match " + std::to_string(width) + "x" +
                                      std::to_string(height) + "x" + std::to_string(channels));

    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) fail(Errc::io_error, "cannot open for writing: " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) fail(Errc::internal, "png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        fail(Errc::internal, "png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        fail(Errc::io_error, "png write failed: " + path);
    }
    png_init_io(png, f.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
                 channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    // fixed settings keep output byte-identical across runs
    png_set_compression_level(png, 6);
    png_set_filter(png, 0, PNG_FILTER_NONE);

    std::vector<png_text> chunks(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        chunks[i] = png_text{};
        chunks[i].compression = PNG_TEXT_COMPRESSION_NONE;
        chunks[i].key = const_cast<char*>(text[i].first.c_str());
        chunks[i].text = const_cast<char*>(text[i].second.c_str());
        chunks[i].text_length = text[i].second.size();
    }
    if (!chunks.empty()) png_set_text(png, info, chunks.data(), static_cast<int>(chunks.size()));

    png_write_info(png, info);
    const std::size_t stride = static_cast<std::size_t>(width) * channels;
    for (int r = 0; r < height; ++r)
        png_write_row(png, const_cast<png_bytep>(pixels.data() + r * stride));
    png_write_end(png, info);
    png_destroy_write_struct(&png, &info);
}

PngImage read_png(const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) fail(Errc::io_error, "cannot open: " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) fail(Errc::internal, "png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        fail(Errc::internal, "png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(Errc::malformed_input, "png read failed: " + path);
    }
    png_init_io(png, f.get());
    png_read_info(png, info);

    png_uint_32 w = png_get_image_width(png, info);
    png_uint_32 h = png_get_image_height(png, info);
    int bit_depth = png_get_bit_depth(png, info);
    int color_type = png_get_color_type(png, info);

    if (bit_depth == 16) png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    color_type = png_get_color_type(png, info);
    int channels = (color_type == PNG_COLOR_TYPE_GRAY) ? 1 : 3;

    PngImage img;
    img.width = static_cast<int>(w);
    img.height = static_cast<int>(h);
    img.channels = channels;
    img.pixels.resize(static_cast<std::size_t>(w) * h * channels);
    const std::size_t stride = static_cast<std::size_t>(w) * channels;
    for (png_uint_32 r = 0; r < h; ++r) png_read_row(png, img.pixels.data() + r * stride, nullptr);
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

}  // namespace roadscope
