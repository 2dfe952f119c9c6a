#include "roadscope/raster_store.hpp"

#include <cstring>
#include <filesystem>

#include <json.hpp>

#include "roadscope/error.hpp"
#include "roadscope/fsutil.hpp"
#include "roadscope/hash.hpp"

namespace roadscope {

using nlohmann::json;
namespace fs = std::filesystem;

Scene open_scene(const std::string& dir) {
    const fs::path meta_path = fs::path(dir) / "scene.json";
    if (!fs::exists(meta_path)) fail(Errc::missing_metadata, "no scene.json in " + dir);

    json meta;
    try {
        meta = json::parse(read_text_file(meta_path));
    } catch (const json::parse_error& e) {
        fail(Errc::schema_error, meta_path.string() + ": " + e.what());
    }

    for (const char* key : {"width", "height", "gsd_m", "origin_lon", "origin_lat",
                            "frame_m_per_deg_lat", "country", "pixel_file", "pixel_sha256"}) {
        if (!meta.contains(key))
            fail(Errc::missing_metadata, meta_path.string() + ": missing key \"" + key + "\"");
    }
    // the container format is axis-aligned by construction; any declared
    // rotation or shear is unsupported
    for (const char* key : {"rotation_deg", "shear_x", "shear_y"}) {
        if (meta.contains(key) && meta[key].get<double>() != 0.0)
            fail(Errc::rotated_transform, meta_path.string() + ": rotated rasters unsupported");
    }

    Scene scene;
    scene.id = fs::path(dir).filename().string();
    try {
        scene.width = meta.at("width").get<int>();
        scene.height = meta.at("height").get<int>();
        scene.transform.gsd = meta.at("gsd_m").get<double>();
        scene.transform.origin_x = 0.0;
        scene.transform.origin_y = 0.0;
        scene.country = meta.at("country").get<std::string>();
        scene.frame = make_local_frame(
            GeoPoint{meta.at("origin_lon").get<double>(), meta.at("origin_lat").get<double>()},
            meta.at("frame_m_per_deg_lat").get<double>());
    } catch (const json::exception& e) {
        fail(Errc::schema_error, meta_path.string() + ": " + e.what());
    }
    if (scene.width <= 0 || scene.height <= 0)
        fail(Errc::schema_error, meta_path.string() + ": non-positive raster dims");
    if (!(scene.transform.gsd > 0.0))
        fail(Errc::schema_error, meta_path.string() + ": gsd_m must be > 0");

    const fs::path blob_path = fs::path(dir) / meta.at("pixel_file").get<std::string>();
    if (!fs::exists(blob_path)) fail(Errc::missing_metadata, "pixel file missing: " + blob_path.string());
    scene.pixels = read_binary_file(blob_path);
    if (scene.pixels.size() != scene.byte_count())
        fail(Errc::size_mismatch, blob_path.string() + ": declared " +
                                      std::to_string(scene.byte_count()) + " bytes, found " +
                                      std::to_string(scene.pixels.size()));
    const std::string digest = sha256_hex(scene.pixels);
    if (digest != meta.at("pixel_sha256").get<std::string>())
        fail(Errc::digest_mismatch, blob_path.string() + ": pixel blob digest mismatch");
    return scene;
}

void write_scene(const std::string& dir, const Scene& scene,
                 const std::vector<std::pair<std::string, std::string>>& extra_meta) {
    if (scene.pixels.size() != scene.byte_count())
        fail(Errc::size_mismatch, "scene pixel buffer does not match declared dims");
    fs::create_directories(dir);
    const std::string pixel_file = "pixels.rgb";
    write_binary_file(fs::path(dir) / pixel_file, scene.pixels.data(), scene.pixels.size());

    json meta = {
        {"width", scene.width},
        {"height", scene.height},
        {"gsd_m", scene.transform.gsd},
        {"origin_lon", scene.frame.origin.lon},
        {"origin_lat", scene.frame.origin.lat},
        {"frame_m_per_deg_lat", scene.frame.m_per_deg_lat},
        {"country", scene.country},
        {"pixel_file", pixel_file},
        {"pixel_sha256", sha256_hex(scene.pixels)},
    };
    for (const auto& [k, v] : extra_meta) meta[k] = v;
    write_text_file(fs::path(dir) / "scene.json", meta.dump(2) + "\n");
}

std::vector<std::uint8_t> read_window(const Scene& scene, const PixelCoord& top_left, int size) {
    if (size <= 0 || top_left.col < 0 || top_left.row < 0 || top_left.col + size > scene.width ||
        top_left.row + size > scene.height)
        fail(Errc::out_of_bounds, "window " + std::to_string(size) + "px at (" +
                                      std::to_string(top_left.col) + "," +
                                      std::to_string(top_left.row) + ") exceeds scene " +
                                      std::to_string(scene.width) + "x" +
                                      std::to_string(scene.height));
    std::vector<std::uint8_t> out(static_cast<std::size_t>(size) * size * 3);
    const std::size_t src_stride = static_cast<std::size_t>(scene.width) * 3;
    const std::size_t dst_stride = static_cast<std::size_t>(size) * 3;
    const std::uint8_t* src =
        scene.pixels.data() + static_cast<std::size_t>(top_left.row) * src_stride + top_left.col * 3;
    for (int r = 0; r < size; ++r)
        std::memcpy(out.data() + r * dst_stride, src + static_cast<std::size_t>(r) * src_stride,
                    dst_stride);
    return out;
}

Tile extract_tile(const Scene& scene, const GeoPoint& center, int size) {
    const MeterPoint m = project(scene.frame, center);
    std::int64_t col, row;
    geo_to_pixel_unchecked(scene.transform, m, col, row);
    const std::int64_t half = size / 2;
    const std::int64_t c0 = col - half;
    const std::int64_t r0 = row - half;
    if (c0 < 0 || r0 < 0 || c0 + size > scene.width || r0 + size > scene.height)
        fail(Errc::out_of_bounds, "tile at (" + std::to_string(center.lon) + "," +
                                      std::to_string(center.lat) + ") not fully inside scene " +
                                      scene.id);
    Tile tile;
    tile.size = size;
    tile.center = center;
    tile.scene_id = scene.id;
    tile.pixels = read_window(scene, PixelCoord{static_cast<int>(c0), static_cast<int>(r0)}, size);
    return tile;
}

GeoTransform window_transform(const Scene& scene, const PixelCoord& top_left) {
    GeoTransform t = scene.transform;
    t.origin_x = scene.transform.origin_x + top_left.col * scene.transform.gsd;
    t.origin_y = scene.transform.origin_y - top_left.row * scene.transform.gsd;
    return t;
}

}  // namespace roadscope
