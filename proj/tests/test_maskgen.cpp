#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "roadscope/error.hpp"
#include "roadscope/maskgen.hpp"
#include "roadscope/rng.hpp"

using namespace roadscope;

namespace {

using PixelSet = std::set<std::pair<int, int>>;

PixelSet to_set(const std::vector<PixelCoord>& v) {
    PixelSet s;
    for (const auto& p : v) s.insert({p.col, p.row});
    return s;
}

// per-column/row nearest-ideal-coordinate oracle, ties toward the lower
// index; exact rational arithmetic
PixelSet bresenham_oracle(PixelCoord a, PixelCoord b) {
    PixelSet out;
    const long dx = b.col - a.col;
    const long dy = b.row - a.row;
    auto round_half_down = [](long num, long den) {
        // smallest integer >= num/den - 1/2  ==  ceil((2*num - den) / (2*den))
        const long p = 2 * num - den;
        const long q = 2 * den;
        long r = p / q;
        if (p % q != 0 && ((p > 0) == (q > 0))) ++r;
        return r;
    };
    if (std::labs(dx) >= std::labs(dy)) {
        const int step = dx >= 0 ? 1 : -1;
        for (int x = a.col;; x += step) {
            const long n = x - a.col;
            // ideal y = a.row + n*dy/dx; dx can be 0 only when dy is 0 too
            const int y = dx == 0 ? a.row
                                  : static_cast<int>(a.row + round_half_down(n * dy * (dx < 0 ? -1 : 1),
                                                                             std::labs(dx)));
            out.insert({x, y});
            if (x == b.col) break;
        }
    } else {
        const int step = dy >= 0 ? 1 : -1;
        for (int y = a.row;; y += step) {
            const long n = y - a.row;
            const int x = static_cast<int>(
                a.col + round_half_down(n * dx * (dy < 0 ? -1 : 1), std::labs(dy)));
            out.insert({x, y});
            if (y == b.row) break;
        }
    }
    return out;
}

Mask brute_force_dilate(const Mask& m, int r) {
    Mask out = Mask::zeros(m.size);
    const int n = m.size;
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            bool hit = false;
            for (int v = std::max(0, y - r); v <= std::min(n - 1, y + r) && !hit; ++v)
                for (int u = std::max(0, x - r); u <= std::min(n - 1, x + r) && !hit; ++u)
                    if (m.at(u, v) && (x - u) * (x - u) + (y - v) * (y - v) <= r * r) hit = true;
            if (hit) out.set(x, y);
        }
    return out;
}

}  // namespace

TEST_CASE("bresenham: axis-aligned and diagonal") {
    CHECK(to_set(bresenham({0, 0}, {3, 0})) == PixelSet{{0, 0}, {1, 0}, {2, 0}, {3, 0}});
    CHECK(to_set(bresenham({0, 0}, {2, 2})) == PixelSet{{0, 0}, {1, 1}, {2, 2}});
    CHECK(to_set(bresenham({5, 5}, {5, 5})) == PixelSet{{5, 5}});
}

TEST_CASE("bresenham: shallow line matches the tie-to-lower oracle") {
    const auto got = bresenham({0, 0}, {5, 2});
    CHECK(to_set(got) ==
          PixelSet{{0, 0}, {1, 0}, {2, 1}, {3, 1}, {4, 2}, {5, 2}});
    CHECK(to_set(got) == bresenham_oracle({0, 0}, {5, 2}));
}

TEST_CASE("bresenham: endpoints always included, chain ordered a->b") {
    const auto chain = bresenham({7, 3}, {-2, -5});
    CHECK(chain.front() == PixelCoord{7, 3});
    CHECK(chain.back() == PixelCoord{-2, -5});
}

TEST_CASE("bresenham: symmetric as a pixel set; matches oracle on randoms") {
    Rng rng(2024);
    for (int i = 0; i < 500; ++i) {
        const PixelCoord a{static_cast<int>(rng.next_below(64)),
                           static_cast<int>(rng.next_below(64))};
        const PixelCoord b{static_cast<int>(rng.next_below(64)),
                           static_cast<int>(rng.next_below(64))};
        const auto ab = bresenham(a, b);
        const auto ba = bresenham(b, a);
        CHECK(to_set(ab) == to_set(ba));
        CHECK(to_set(ab) == bresenham_oracle(a, b));
        // connectivity: consecutive pixels are 8-neighbors
        for (std::size_t k = 1; k < ab.size(); ++k) {
            CHECK(std::abs(ab[k].col - ab[k - 1].col) <= 1);
            CHECK(std::abs(ab[k].row - ab[k - 1].row) <= 1);
        }
    }
}

TEST_CASE("bresenham: every pixel within 0.5*sqrt(2) of the ideal line") {
    Rng rng(31415);
    const double bound = 0.5 * std::sqrt(2.0) + 1e-9;
    for (int i = 0; i < 200; ++i) {
        const PixelCoord a{static_cast<int>(rng.next_below(64)),
                           static_cast<int>(rng.next_below(64))};
        const PixelCoord b{static_cast<int>(rng.next_below(64)),
                           static_cast<int>(rng.next_below(64))};
        if (a == b) continue;
        const double vx = b.col - a.col, vy = b.row - a.row;
        const double len = std::hypot(vx, vy);
        for (const auto& p : bresenham(a, b)) {
            // distance from pixel center to the segment
            const double t =
                std::clamp(((p.col - a.col) * vx + (p.row - a.row) * vy) / (len * len), 0.0, 1.0);
            const double dx = p.col - (a.col + t * vx);
            const double dy = p.row - (a.row + t * vy);
            CHECK(std::hypot(dx, dy) <= bound);
        }
    }
}

TEST_CASE("dilate: radius 0 identity; single-bit cross; border clip") {
    Mask m = Mask::zeros(12);
    m.set(5, 5);
    CHECK(dilate(m, 0).bits == m.bits);

    const Mask d1 = dilate(m, 1);
    CHECK(d1.count() == 5);
    CHECK(d1.at(5, 5));
    CHECK(d1.at(4, 5));
    CHECK(d1.at(6, 5));
    CHECK(d1.at(5, 4));
    CHECK(d1.at(5, 6));

    Mask corner = Mask::zeros(10);
    corner.set(0, 0);
    CHECK(dilate(corner, 1).count() == 3);
}

TEST_CASE("dilate: equals brute-force disk definition on randoms") {
    Rng rng(99);
    for (int trial = 0; trial < 25; ++trial) {
        Mask m = Mask::zeros(32);
        const int bits = 1 + static_cast<int>(rng.next_below(40));
        for (int b = 0; b < bits; ++b)
            m.set(static_cast<int>(rng.next_below(32)), static_cast<int>(rng.next_below(32)));
        const int r = static_cast<int>(rng.next_below(6));
        CHECK(dilate(m, r).bits == brute_force_dilate(m, r).bits);
    }
}

TEST_CASE("dilate: monotone in mask and radius; repeated dilation covers max radius") {
    Rng rng(123);
    Mask m = Mask::zeros(24);
    for (int b = 0; b < 10; ++b)
        m.set(static_cast<int>(rng.next_below(24)), static_cast<int>(rng.next_below(24)));
    const Mask d2 = dilate(m, 2);
    const Mask d3 = dilate(m, 3);
    for (std::size_t i = 0; i < d2.bits.size(); ++i)
        if (d2.bits[i]) CHECK(d3.bits[i]);
    const Mask dd = dilate(dilate(m, 3), 2);
    for (std::size_t i = 0; i < d3.bits.size(); ++i)
        if (d3.bits[i]) CHECK(dd.bits[i]);
}

TEST_CASE("apply_mask: all-ones identity / inversion; size mismatch") {
    Rng rng(5);
    const int n = 8;
    std::vector<std::uint8_t> tile(n * n * 3);
    for (auto& b : tile) b = static_cast<std::uint8_t>(rng.next_below(256));
    Mask ones = Mask::zeros(n);
    std::fill(ones.bits.begin(), ones.bits.end(), 1);

    CHECK(apply_mask(tile, ones, MaskMode::road_only) == tile);
    const auto black = apply_mask(tile, ones, MaskMode::context_only);
    CHECK(std::all_of(black.begin(), black.end(), [](std::uint8_t b) { return b == 0; }));

    Mask small = Mask::zeros(4);
    CHECK_THROWS_AS(apply_mask(tile, small, MaskMode::road_only), Error);
}

TEST_CASE("apply_mask: checkerboard partitions; identity holds pixel-exactly") {
    Rng rng(6);
    const int n = 16;
    std::vector<std::uint8_t> tile(n * n * 3);
    for (auto& b : tile) b = static_cast<std::uint8_t>(rng.next_below(256));
    for (int trial = 0; trial < 10; ++trial) {
        Mask m = Mask::zeros(n);
        for (auto& bit : m.bits) bit = static_cast<std::uint8_t>(rng.next_below(2));
        const auto road = apply_mask(tile, m, MaskMode::road_only);
        const auto context = apply_mask(tile, m, MaskMode::context_only);
        for (std::size_t i = 0; i < tile.size(); ++i) {
            CHECK(static_cast<int>(road[i]) + static_cast<int>(context[i]) ==
                  static_cast<int>(tile[i]));
        }
    }
}

TEST_CASE("polyline_to_pixels: center vertex, fully outside, edge clip") {
    const int size = 100;
    const LocalFrame frame = make_local_frame(GeoPoint{0, 0});
    const GeoTransform t{0.0, 0.0, 0.3};  // tile top-left at frame origin

    // vertex at the tile center: pixel (50,50) +- 1
    {
        const MeterPoint center_m{size / 2 * 0.3, -(size / 2) * 0.3};
        const Polyline line = {unproject(frame, center_m),
                               unproject(frame, MeterPoint{center_m.x + 3.0, center_m.y})};
        const auto segs = polyline_to_pixels(line, frame, t, size);
        REQUIRE(segs.size() == 1);
        CHECK(std::abs(segs[0].a.col - 50) <= 1);
        CHECK(std::abs(segs[0].a.row - 50) <= 1);
    }
    // entirely outside: dropped
    {
        const Polyline line = {unproject(frame, MeterPoint{-100, 5}),
                               unproject(frame, MeterPoint{-100, -5})};
        CHECK(polyline_to_pixels(line, frame, t, size).empty());
    }
    // crossing the left edge: clipped endpoint on col 0
    {
        const Polyline line = {unproject(frame, MeterPoint{-30, -15}),
                               unproject(frame, MeterPoint{15, -15})};
        const auto segs = polyline_to_pixels(line, frame, t, size);
        REQUIRE(segs.size() == 1);
        CHECK(std::min(segs[0].a.col, segs[0].b.col) == 0);
    }
}

TEST_CASE("road_mask_for_tile: empty, band height, union") {
    const int size = 64;
    const LocalFrame frame = make_local_frame(GeoPoint{0, 0});
    const GeoTransform t{0.0, 0.0, 0.3};
    DilationConfig cfg;
    cfg.radius_px = {4, 4, 4};

    // no roads
    CHECK(road_mask_for_tile({}, frame, t, size, cfg).count() == 0);

    // one horizontal road through the tile center: band of height 2r+1
    RoadRecord road;
    road.id = "h";
    road.cls = RoadClass::Major;
    const double yc = -(size / 2 * 0.3) - 0.15;  // center row 32
    road.polyline = {unproject(frame, MeterPoint{-10.0, yc}),
                     unproject(frame, MeterPoint{size * 0.3 + 10.0, yc})};
    const Mask band = road_mask_for_tile({road}, frame, t, size, cfg);
    // column 32: count rows set
    int rows_set = 0;
    for (int r = 0; r < size; ++r) rows_set += band.at(32, r);
    CHECK(rows_set == 2 * 4 + 1);

    // union of two crossing roads equals OR of individual masks
    RoadRecord vroad;
    vroad.id = "v";
    vroad.cls = RoadClass::TwoTrack;
    const double xc = size / 2 * 0.3 + 0.15;
    vroad.polyline = {unproject(frame, MeterPoint{xc, 10.0}),
                      unproject(frame, MeterPoint{xc, -(size * 0.3) - 10.0})};
    const Mask both = road_mask_for_tile({road, vroad}, frame, t, size, cfg);
    const Mask only_v = road_mask_for_tile({vroad}, frame, t, size, cfg);
    for (std::size_t i = 0; i < both.bits.size(); ++i)
        CHECK(both.bits[i] == (band.bits[i] | only_v.bits[i]));
}

TEST_CASE("road_mask_for_tile: matches per-pixel distance oracle within 1 px band") {
    Rng rng(4242);
    const int size = 48;
    const LocalFrame frame = make_local_frame(GeoPoint{10, 10});
    const GeoTransform t{0.0, 0.0, 0.3};
    for (int trial = 0; trial < 8; ++trial) {
        DilationConfig cfg;
        const int radius = 2 + static_cast<int>(rng.next_below(5));
        cfg.radius_px = {radius, radius, radius};

        RoadRecord road;
        road.id = "r";
        road.cls = RoadClass::Minor;
        // random 3-vertex polyline crossing the tile
        auto rand_m = [&](double lo, double hi) {
            return lo + rng.next_double() * (hi - lo);
        };
        for (int v = 0; v < 3; ++v)
            road.polyline.push_back(unproject(
                frame, MeterPoint{rand_m(-5, size * 0.3 + 5), -rand_m(-5, size * 0.3 + 5)}));
        if (!polyline_valid(road.polyline)) continue;

        const Mask got = road_mask_for_tile({road}, frame, t, size, cfg);

        // oracle: distance from pixel to the clipped integer segments
        const auto segs = polyline_to_pixels(road.polyline, frame, t, size);
        auto seg_dist = [&](int px, int py) {
            double best = 1e18;
            for (const auto& s : segs) {
                const double vx = s.b.col - s.a.col, vy = s.b.row - s.a.row;
                const double len2 = vx * vx + vy * vy;
                const double tt =
                    len2 > 0 ? std::clamp(((px - s.a.col) * vx + (py - s.a.row) * vy) / len2,
                                          0.0, 1.0)
                             : 0.0;
                best = std::min(best, std::hypot(px - (s.a.col + tt * vx),
                                                 py - (s.a.row + tt * vy)));
            }
            return best;
        };
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x) {
                const double d = segs.empty() ? 1e18 : seg_dist(x, y);
                if (d <= radius - 1.0) CHECK(got.at(x, y) == 1);
                if (d >= radius + 1.0) CHECK(got.at(x, y) == 0);
            }
    }
}

TEST_CASE("mask png: round trip, 0/255 convention") {
    Mask m = Mask::zeros(16);
    m.set(3, 4);
    m.set(15, 15);
    const auto path =
        (std::filesystem::temp_directory_path() / "roadscope_mask_test.png").string();
    write_mask_png(path, m, {{"roadscope_seed", "7"}});
    const Mask back = read_mask_png(path);
    CHECK(back.bits == m.bits);
    std::filesystem::remove(path);
}
