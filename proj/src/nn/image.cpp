#include "roadscope/nn/image.hpp"

#include <algorithm>
#include <cmath>

#include "roadscope/error.hpp"

namespace roadscope::nn {

std::vector<float> tile_to_chw(const std::vector<std::uint8_t>& rgb, int src_size, int dst_size) {
    if (rgb.size() != static_cast<std::size_t>(src_size) * src_size * 3)
        fail(Errc::size_mismatch, "tile byte count does not match declared size");
    if (dst_size < 1 || dst_size > src_size)
        fail(Errc::schema_error, "downscale target must be in [1, src_size]");

    std::vector<float> out(static_cast<std::size_t>(dst_size) * dst_size * 3);
    const std::size_t plane = static_cast<std::size_t>(dst_size) * dst_size;

    if (dst_size == src_size) {
        for (int y = 0; y < src_size; ++y)
            for (int x = 0; x < src_size; ++x) {
                const std::size_t si = (static_cast<std::size_t>(y) * src_size + x) * 3;
                const std::size_t di = static_cast<std::size_t>(y) * dst_size + x;
                out[di] = rgb[si] / 255.0f;
                out[plane + di] = rgb[si + 1] / 255.0f;
                out[2 * plane + di] = rgb[si + 2] / 255.0f;
            }
        return out;
    }

    const double r = static_cast<double>(src_size) / dst_size;
    const double inv_area = 1.0 / (r * r * 255.0);
    for (int ty = 0; ty < dst_size; ++ty) {
        const double y0 = ty * r, y1 = (ty + 1) * r;
        const int sy0 = static_cast<int>(std::floor(y0));
        const int sy1 = std::min(src_size, static_cast<int>(std::ceil(y1)));
        for (int tx = 0; tx < dst_size; ++tx) {
            const double x0 = tx * r, x1 = (tx + 1) * r;
            const int sx0 = static_cast<int>(std::floor(x0));
            const int sx1 = std::min(src_size, static_cast<int>(std::ceil(x1)));
            double acc[3] = {0.0, 0.0, 0.0};
            for (int sy = sy0; sy < sy1; ++sy) {
                const double cy = std::min<double>(sy + 1, y1) - std::max<double>(sy, y0);
                for (int sx = sx0; sx < sx1; ++sx) {
                    const double cx = std::min<double>(sx + 1, x1) - std::max<double>(sx, x0);
                    const double w = cy * cx;
                    const std::size_t si = (static_cast<std::size_t>(sy) * src_size + sx) * 3;
                    acc[0] += w * rgb[si];
                    acc[1] += w * rgb[si + 1];
                    acc[2] += w * rgb[si + 2];
                }
            }
            const std::size_t di = static_cast<std::size_t>(ty) * dst_size + tx;
            out[di] = static_cast<float>(acc[0] * inv_area);
            out[plane + di] = static_cast<float>(acc[1] * inv_area);
            out[2 * plane + di] = static_cast<float>(acc[2] * inv_area);
        }
    }
    return out;
}

}  // namespace roadscope::nn
