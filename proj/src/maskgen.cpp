#include "roadscope/maskgen.hpp"

#include <algorithm>
#include <cmath>

#include "roadscope/error.hpp"
#include "roadscope/png_io.hpp"

namespace roadscope {

std::size_t Mask::count() const {
    std::size_t n = 0;
    for (auto b : bits) n += b;
    return n;
}

const char* mask_mode_name(MaskMode m) {
    switch (m) {
        case MaskMode::none: return "none";
        case MaskMode::road_only: return "road_only";
        case MaskMode::context_only: return "context_only";
    }
    return "?";
}

MaskMode mask_mode_from_name(const std::string& name) {
    if (name == "none") return MaskMode::none;
    if (name == "road_only") return MaskMode::road_only;
    if (name == "context_only") return MaskMode::context_only;
    fail(Errc::schema_error, "unknown mask mode \"" + name + "\"");
}

namespace {

// Liang-Barsky against [0, max_c] x [0, max_r]; endpoints in continuous
// pixel coordinates. Returns false when the segment lies fully outside.
bool clip_segment(double& x0, double& y0, double& x1, double& y1, double max_c, double max_r) {
    double t0 = 0.0, t1 = 1.0;
    const double dx = x1 - x0;
    const double dy = y1 - y0;
    const double p[4] = {-dx, dx, -dy, dy};
    const double q[4] = {x0 - 0.0, max_c - x0, y0 - 0.0, max_r - y0};
    for (int i = 0; i < 4; ++i) {
        if (p[i] == 0.0) {
            if (q[i] < 0.0) return false;  // parallel and outside
        } else {
            const double r = q[i] / p[i];
            if (p[i] < 0.0) {
                if (r > t1) return false;
                if (r > t0) t0 = r;
            } else {
                if (r < t0) return false;
                if (r < t1) t1 = r;
            }
        }
    }
    const double nx0 = x0 + t0 * dx, ny0 = y0 + t0 * dy;
    const double nx1 = x0 + t1 * dx, ny1 = y0 + t1 * dy;
    x0 = nx0;
    y0 = ny0;
    x1 = nx1;
    y1 = ny1;
    return true;
}

int round_clamped(double v, int max_v) {
    const long r = std::lround(v);
    return static_cast<int>(std::clamp<long>(r, 0, max_v));
}

}  // namespace

std::vector<PixelSegment> polyline_to_pixels(const Polyline& line, const LocalFrame& frame,
                                             const GeoTransform& tile_transform, int size) {
    if (size <= 0) fail(Errc::schema_error, "tile size must be > 0");
    std::vector<std::pair<std::int64_t, std::int64_t>> verts;
    verts.reserve(line.size());
    for (const auto& p : line) {
        const MeterPoint m = project(frame, p);
        std::int64_t col, row;
        geo_to_pixel_unchecked(tile_transform, m, col, row);
        verts.emplace_back(col, row);
    }

    std::vector<PixelSegment> segments;
    const double max_c = size - 1;
    const double max_r = size - 1;
    for (std::size_t i = 1; i < verts.size(); ++i) {
        double x0 = static_cast<double>(verts[i - 1].first);
        double y0 = static_cast<double>(verts[i - 1].second);
        double x1 = static_cast<double>(verts[i].first);
        double y1 = static_cast<double>(verts[i].second);
        if (!clip_segment(x0, y0, x1, y1, max_c, max_r)) continue;
        PixelSegment seg;
        seg.a = PixelCoord{round_clamped(x0, size - 1), round_clamped(y0, size - 1)};
        seg.b = PixelCoord{round_clamped(x1, size - 1), round_clamped(y1, size - 1)};
        segments.push_back(seg);
    }
    return segments;
}

std::vector<PixelCoord> bresenham(const PixelCoord& a, const PixelCoord& b) {
    const int adx = std::abs(b.col - a.col);
    const int ady = std::abs(b.row - a.row);

    PixelCoord p0 = a, p1 = b;
    bool swapped = false;
    if (adx >= ady) {
        if (p0.col > p1.col) {
            std::swap(p0, p1);
            swapped = true;
        }
    } else {
        if (p0.row > p1.row) {
            std::swap(p0, p1);
            swapped = true;
        }
    }

    std::vector<PixelCoord> chain;
    chain.reserve(static_cast<std::size_t>(std::max(adx, ady)) + 1);

    if (adx >= ady) {
        // x-major, col ascending; ties keep the minor coordinate nearer
        // its lower index
        const int sy = p1.row >= p0.row ? 1 : -1;
        int y = p0.row;
        int d = 2 * ady - adx;
        for (int x = p0.col;; ++x) {
            chain.push_back(PixelCoord{x, y});
            if (x == p1.col) break;
            if (sy > 0 ? d > 0 : d >= 0) {
                y += sy;
                d -= 2 * adx;
            }
            d += 2 * ady;
        }
    } else {
        const int sx = p1.col >= p0.col ? 1 : -1;
        int x = p0.col;
        int d = 2 * adx - ady;
        for (int y = p0.row;; ++y) {
            chain.push_back(PixelCoord{x, y});
            if (y == p1.row) break;
            if (sx > 0 ? d > 0 : d >= 0) {
                x += sx;
                d -= 2 * ady;
            }
            d += 2 * adx;
        }
    }

    if (swapped) std::reverse(chain.begin(), chain.end());
    return chain;
}

Mask dilate(const Mask& mask, int radius_px) {
    if (radius_px < 0) fail(Errc::schema_error, "dilation radius must be >= 0");
    if (radius_px == 0) return mask;

    std::vector<std::pair<int, int>> offsets;
    const int r2 = radius_px * radius_px;
    for (int dy = -radius_px; dy <= radius_px; ++dy)
        for (int dx = -radius_px; dx <= radius_px; ++dx)
            if (dx * dx + dy * dy <= r2) offsets.emplace_back(dx, dy);

    Mask out = Mask::zeros(mask.size);
    const int n = mask.size;
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            if (!mask.bits[static_cast<std::size_t>(y) * n + x]) continue;
            for (const auto& [dx, dy] : offsets) {
                const int nx = x + dx;
                const int ny = y + dy;
                if (nx < 0 || ny < 0 || nx >= n || ny >= n) continue;
                out.bits[static_cast<std::size_t>(ny) * n + nx] = 1;
            }
        }
    }
    return out;
}

std::vector<std::uint8_t> apply_mask(const std::vector<std::uint8_t>& tile_rgb, const Mask& mask,
                                     MaskMode mode) {
    const std::size_t npix = static_cast<std::size_t>(mask.size) * mask.size;
    if (tile_rgb.size() != npix * 3)
        fail(Errc::size_mismatch, "tile has " + std::to_string(tile_rgb.size() / 3) +
                                      " pixels, mask " + std::to_string(npix));
    if (mode == MaskMode::none) return tile_rgb;

    std::vector<std::uint8_t> out(tile_rgb.size(), 0);
    const std::uint8_t keep_value = mode == MaskMode::road_only ? 1 : 0;
    for (std::size_t i = 0; i < npix; ++i) {
        if (mask.bits[i] == keep_value) {
            out[i * 3 + 0] = tile_rgb[i * 3 + 0];
            out[i * 3 + 1] = tile_rgb[i * 3 + 1];
            out[i * 3 + 2] = tile_rgb[i * 3 + 2];
        }
    }
    return out;
}

Mask road_mask_for_tile(const std::vector<RoadRecord>& roads, const LocalFrame& frame,
                        const GeoTransform& tile_transform, int size, const DilationConfig& cfg) {
    Mask result = Mask::zeros(size);
    for (const auto& road : roads) {
        const auto segments = polyline_to_pixels(road.polyline, frame, tile_transform, size);
        if (segments.empty()) continue;
        Mask thin = Mask::zeros(size);
        for (const auto& seg : segments)
            for (const auto& px : bresenham(seg.a, seg.b)) thin.set(px.col, px.row);
        const Mask fat = dilate(thin, cfg.radius_for(road.cls));
        for (std::size_t i = 0; i < result.bits.size(); ++i) result.bits[i] |= fat.bits[i];
    }
    return result;
}

void write_mask_png(const std::string& path, const Mask& mask,
                    const std::vector<std::pair<std::string, std::string>>& text) {
    std::vector<std::uint8_t> gray(mask.bits.size());
    for (std::size_t i = 0; i < mask.bits.size(); ++i) gray[i] = mask.bits[i] ? 255 : 0;
    write_png(path, mask.size, mask.size, 1, gray, text);
}

Mask read_mask_png(const std::string& path) {
    PngImage img = read_png(path);
    if (img.width != img.height || img.channels != 1)
        fail(Errc::schema_error, path + ": mask must be square 8-bit grayscale");
    Mask m;
    m.size = img.width;
    m.bits.resize(img.pixels.size());
    for (std::size_t i = 0; i < img.pixels.size(); ++i) m.bits[i] = img.pixels[i] >= 128 ? 1 : 0;
    return m;
}

}  // namespace roadscope
