#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "roadscope/error.hpp"
#include "roadscope/fsutil.hpp"
#include "roadscope/hash.hpp"
#include "roadscope/raster_store.hpp"
#include "roadscope/rng.hpp"

using namespace roadscope;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path temp_dir(const std::string& tag) {
    const fs::path p = fs::temp_directory_path() / ("roadscope_raster_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

Scene make_scene(int w, int h, double gsd = 0.3) {
    Scene s;
    s.id = "test";
    s.width = w;
    s.height = h;
    s.transform = GeoTransform{0.0, 0.0, gsd};
    s.frame = make_local_frame(GeoPoint{36.8, -1.3});
    s.country = "KE";
    s.pixels.resize(static_cast<std::size_t>(w) * h * 3);
    Rng rng(5);
    for (auto& b : s.pixels) b = static_cast<std::uint8_t>(rng.next_below(256));
    return s;
}

}  // namespace

TEST_CASE("scene container: write then open round trip") {
    const auto dir = temp_dir("roundtrip");
    const Scene s = make_scene(2, 2);
    write_scene(dir.string(), s);
    const Scene back = open_scene(dir.string());
    CHECK(back.width == 2);
    CHECK(back.height == 2);
    CHECK(back.pixels == s.pixels);
    CHECK(back.country == "KE");
    CHECK(back.transform.gsd == doctest::Approx(0.3));
    fs::remove_all(dir);
}

TEST_CASE("scene container: size mismatch detected") {
    const auto dir = temp_dir("short");
    const Scene s = make_scene(2, 2);
    write_scene(dir.string(), s);
    // truncate the blob to 11 bytes
    std::ofstream(dir / "pixels.rgb", std::ios::binary | std::ios::trunc)
        .write(reinterpret_cast<const char*>(s.pixels.data()), 11);
    try {
        open_scene(dir.string());
        FAIL("expected SizeMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::size_mismatch);
    }
    fs::remove_all(dir);
}

TEST_CASE("scene container: corrupted blob is a digest mismatch") {
    const auto dir = temp_dir("corrupt");
    const Scene s = make_scene(4, 4);
    write_scene(dir.string(), s);
    auto bytes = read_binary_file(dir / "pixels.rgb");
    bytes[7] ^= 0xFF;
    write_binary_file(dir / "pixels.rgb", bytes.data(), bytes.size());
    try {
        open_scene(dir.string());
        FAIL("expected DigestMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::digest_mismatch);
    }
    fs::remove_all(dir);
}

TEST_CASE("scene container: missing metadata / gsd override / rotation rejected") {
    const auto dir = temp_dir("meta");
    CHECK_THROWS_AS(open_scene(dir.string()), Error);

    const Scene s = make_scene(2, 2, 0.5);
    write_scene(dir.string(), s);
    const Scene back = open_scene(dir.string());
    CHECK(back.transform.gsd == doctest::Approx(0.5));  // metadata wins

    json meta = json::parse(read_text_file(dir / "scene.json"));
    meta["rotation_deg"] = 15.0;
    write_text_file(dir / "scene.json", meta.dump());
    try {
        open_scene(dir.string());
        FAIL("expected RotatedTransform");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::rotated_transform);
    }
    fs::remove_all(dir);
}

TEST_CASE("read_window: identity, single pixel, interior window") {
    const Scene s = make_scene(4, 4);
    CHECK(read_window(s, PixelCoord{0, 0}, 4) == s.pixels);

    const auto one = read_window(s, PixelCoord{0, 0}, 1);
    CHECK(one == std::vector<std::uint8_t>(s.pixels.begin(), s.pixels.begin() + 3));

    const auto win = read_window(s, PixelCoord{1, 1}, 2);
    REQUIRE(win.size() == 12);
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c)
            for (int ch = 0; ch < 3; ++ch)
                CHECK(win[(r * 2 + c) * 3 + ch] ==
                      s.pixels[((r + 1) * 4 + (c + 1)) * 3 + ch]);
}

TEST_CASE("read_window: adjacent windows tile the scene exactly") {
    const Scene s = make_scene(8, 8);
    std::vector<std::uint8_t> rebuilt(s.pixels.size());
    for (int by = 0; by < 2; ++by)
        for (int bx = 0; bx < 2; ++bx) {
            const auto win = read_window(s, PixelCoord{bx * 4, by * 4}, 4);
            for (int r = 0; r < 4; ++r)
                for (int c = 0; c < 4; ++c)
                    for (int ch = 0; ch < 3; ++ch)
                        rebuilt[((by * 4 + r) * 8 + (bx * 4 + c)) * 3 + ch] =
                            win[(r * 4 + c) * 3 + ch];
        }
    CHECK(rebuilt == s.pixels);
}

TEST_CASE("read_window: out of bounds") {
    const Scene s = make_scene(4, 4);
    CHECK_THROWS_AS(read_window(s, PixelCoord{2, 2}, 3), Error);
    CHECK_THROWS_AS(read_window(s, PixelCoord{-1, 0}, 2), Error);
}

TEST_CASE("extract_tile: full-scene identity at the geometric center") {
    const Scene s = make_scene(4, 4);
    // geometric center of the scene in meters is (w/2*gsd, -h/2*gsd)
    const GeoPoint center =
        unproject(s.frame, MeterPoint{2 * 0.3, -2 * 0.3});
    const Tile tile = extract_tile(s, center, 4);
    CHECK(tile.pixels == s.pixels);
    CHECK(tile.scene_id == "test");
}

TEST_CASE("extract_tile: window arithmetic matches the floor convention") {
    const Scene s = make_scene(4, 4);
    // center at the center of pixel (2,2)
    const MeterPoint m = pixel_to_geo(s.transform, PixelCoord{2, 2});
    const GeoPoint center = unproject(s.frame, m);
    const Tile tile = extract_tile(s, center, 2);
    // expected window top-left (1,1)
    const auto win = read_window(s, PixelCoord{1, 1}, 2);
    CHECK(tile.pixels == win);
}

TEST_CASE("extract_tile: edge windows rejected, never padded") {
    const Scene s = make_scene(10, 10);
    const MeterPoint near_edge = pixel_to_geo(s.transform, PixelCoord{1, 5});
    CHECK_THROWS_AS(extract_tile(s, unproject(s.frame, near_edge), 6), Error);
    try {
        extract_tile(s, unproject(s.frame, near_edge), 6);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::out_of_bounds);
    }
}

TEST_CASE("extract_tile: deterministic") {
    const Scene s = make_scene(32, 32);
    const GeoPoint center = unproject(s.frame, MeterPoint{16 * 0.3, -16 * 0.3});
    const Tile a = extract_tile(s, center, 16);
    const Tile b = extract_tile(s, center, 16);
    CHECK(a.pixels == b.pixels);
}
