#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "roadscope/geo.hpp"
#include "roadscope/osm_ingest.hpp"

namespace roadscope {

// Binary road mask paired with a tile; 1 = road.
struct Mask {
    int size = 0;
    std::vector<std::uint8_t> bits;  // size*size, row-major, values 0/1

    static Mask zeros(int size) {
        return Mask{size, std::vector<std::uint8_t>(static_cast<std::size_t>(size) * size, 0)};
    }
    std::uint8_t at(int col, int row) const {
        return bits[static_cast<std::size_t>(row) * size + col];
    }
    void set(int col, int row) { bits[static_cast<std::size_t>(row) * size + col] = 1; }
    std::size_t count() const;
};

// Radial expansion radius per road class, Euclidean metric. Defaults
// approximate typical carriageway half-widths at 0.3 m/px.
struct DilationConfig {
    std::array<int, kNumClasses> radius_px = {25, 13, 8};

    int radius_for(RoadClass c) const { return radius_px[static_cast<int>(c)]; }
};

enum class MaskMode { none, road_only, context_only };

const char* mask_mode_name(MaskMode m);
MaskMode mask_mode_from_name(const std::string& name);

struct PixelSegment {
    PixelCoord a;
    PixelCoord b;
};

// Projects polyline vertices into tile pixel space, drops segments fully
// outside the tile and clips the rest to [0, size-1]^2 (Liang-Barsky).
std::vector<PixelSegment> polyline_to_pixels(const Polyline& line, const LocalFrame& frame,
                                             const GeoTransform& tile_transform, int size);

// Classic integer-error Bresenham chain from a to b, inclusive, all
// octants. Direction-canonicalized so the result is symmetric in (a, b)
// as a pixel set; per driven column/row the minor coordinate is the
// nearest ideal value with ties resolved toward the lower index.
std::vector<PixelCoord> bresenham(const PixelCoord& a, const PixelCoord& b);

// Euclidean disk dilation: output bit (x,y) = 1 iff some input bit (u,v)
// has (x-u)^2 + (y-v)^2 <= radius^2. Clipped at borders.
Mask dilate(const Mask& mask, int radius_px);

// Pixel-wise multiplication with the mask (road_only) or its inverse
// (context_only); occluded pixels become 0.
std::vector<std::uint8_t> apply_mask(const std::vector<std::uint8_t>& tile_rgb, const Mask& mask,
                                     MaskMode mode);

// Union over roads of dilate(rasterized clipped polyline, radius(class)).
Mask road_mask_for_tile(const std::vector<RoadRecord>& roads, const LocalFrame& frame,
                        const GeoTransform& tile_transform, int size, const DilationConfig& cfg);

// Mask file convention: 8-bit grayscale PNG, 0 = context, 255 = road.
void write_mask_png(const std::string& path, const Mask& mask,
                    const std::vector<std::pair<std::string, std::string>>& text = {});
Mask read_mask_png(const std::string& path);

}  // namespace roadscope
