#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "roadscope/geo.hpp"

namespace roadscope {

// Geo-referenced RGB raster. Pixels are row-major interleaved RGB, 8-bit.
// The local frame is anchored at the scene's top-left corner, so the
// geotransform origin is (0, 0) in frame meters.
struct Scene {
    std::string id;        // container directory name
    int width = 0;
    int height = 0;
    GeoTransform transform;
    LocalFrame frame;
    std::string country;
    std::vector<std::uint8_t> pixels;

    std::size_t byte_count() const {
        return static_cast<std::size_t>(width) * height * 3;
    }
};

struct Tile {
    int size = 0;                       // square, side in px
    std::vector<std::uint8_t> pixels;   // size*size*3 RGB
    GeoPoint center;
    std::string scene_id;
    std::string road_id;                // filled by the dataset builder
};

// Scene container: directory with scene.json + raw pixel blob.
// Required keys: width, height, gsd_m, origin_lon, origin_lat,
// frame_m_per_deg_lat, country, pixel_file, pixel_sha256.
Scene open_scene(const std::string& dir);

// Writes the container; extra_meta entries are merged into scene.json.
void write_scene(const std::string& dir, const Scene& scene,
                 const std::vector<std::pair<std::string, std::string>>& extra_meta = {});

// Exact byte copy of a fully-contained window.
std::vector<std::uint8_t> read_window(const Scene& scene, const PixelCoord& top_left, int size);

// Tile centered on a geographic point; windows that are not fully inside
// the scene are rejected, never padded.
Tile extract_tile(const Scene& scene, const GeoPoint& center, int size = 1000);

// Geotransform of a tile window in the scene's frame.
GeoTransform window_transform(const Scene& scene, const PixelCoord& top_left);

}  // namespace roadscope
