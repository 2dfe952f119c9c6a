#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "roadscope/error.hpp"
#include "roadscope/geo.hpp"
#include "roadscope/rng.hpp"

using namespace roadscope;

namespace {

// great-circle oracle for the projection-distance property
double haversine_m(const GeoPoint& a, const GeoPoint& b) {
    constexpr double kR = 6371008.8;
    constexpr double d2r = 0.017453292519943295;
    const double dlat = (b.lat - a.lat) * d2r;
    const double dlon = (b.lon - a.lon) * d2r;
    const double s = std::sin(dlat / 2) * std::sin(dlat / 2) +
                     std::cos(a.lat * d2r) * std::cos(b.lat * d2r) * std::sin(dlon / 2) *
                         std::sin(dlon / 2);
    return 2.0 * kR * std::asin(std::sqrt(s));
}

}  // namespace

TEST_CASE("project: origin maps to zero") {
    const LocalFrame f = make_local_frame(GeoPoint{0, 0});
    const MeterPoint m = project(f, GeoPoint{0, 0});
    CHECK(m.x == doctest::Approx(0.0));
    CHECK(m.y == doctest::Approx(0.0));
}

TEST_CASE("project: hand-computed offsets") {
    const LocalFrame f = make_local_frame(GeoPoint{0, 0}, 111320.0);
    const MeterPoint m = project(f, GeoPoint{0.001, 0});
    CHECK(m.x == doctest::Approx(111.32).epsilon(1e-12));
    CHECK(m.y == doctest::Approx(0.0));

    const LocalFrame nairobi = make_local_frame(GeoPoint{36.8, -1.3});
    const MeterPoint m2 = project(nairobi, GeoPoint{36.8, -1.3 + 0.0001});
    CHECK(m2.y == doctest::Approx(11.132).epsilon(1e-9));
}

TEST_CASE("project: latitude band enforced") {
    const LocalFrame f = make_local_frame(GeoPoint{0, 0});
    CHECK_THROWS_AS(project(f, GeoPoint{0, 86.0}), Error);
    CHECK_THROWS_AS(make_local_frame(GeoPoint{0, 89.0}), Error);
}

TEST_CASE("unproject: zero maps to origin, inverse of project") {
    const LocalFrame f = make_local_frame(GeoPoint{12.5, -3.25});
    const GeoPoint g = unproject(f, MeterPoint{0, 0});
    CHECK(g.lon == doctest::Approx(12.5));
    CHECK(g.lat == doctest::Approx(-3.25));

    const GeoPoint back = unproject(make_local_frame(GeoPoint{0, 0}, 111320.0),
                                    MeterPoint{111.32, 0});
    CHECK(back.lon == doctest::Approx(0.001).epsilon(1e-12));
}

TEST_CASE("project/unproject round trip: 1e4 random points < 1e-9 deg") {
    Rng rng(20240817);
    double max_err = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const GeoPoint origin{rng.next_double() * 360.0 - 180.0, rng.next_double() * 160.0 - 80.0};
        const LocalFrame f = make_local_frame(origin);
        const GeoPoint p{origin.lon + (rng.next_double() - 0.5) * 0.01,
                         origin.lat + (rng.next_double() - 0.5) * 0.01};
        if (std::abs(p.lat) >= 85.0) continue;
        const GeoPoint q = unproject(f, project(f, p));
        max_err = std::max({max_err, std::abs(q.lon - p.lon), std::abs(q.lat - p.lat)});
    }
    CHECK(max_err < 1e-9);
}

TEST_CASE("geo_to_pixel: corner and floor behavior") {
    const GeoTransform t{0.0, 300.0, 0.3};
    CHECK(geo_to_pixel(t, MeterPoint{0.0, 300.0}, 1000, 1000) == PixelCoord{0, 0});
    CHECK(geo_to_pixel(t, MeterPoint{0.3, 299.7}, 1000, 1000) == PixelCoord{1, 1});
    CHECK(geo_to_pixel(t, MeterPoint{0.29, 300.0}, 1000, 1000) == PixelCoord{0, 0});
}

TEST_CASE("geo_to_pixel: out of footprint") {
    const GeoTransform t{0.0, 300.0, 0.3};
    CHECK_THROWS_AS(geo_to_pixel(t, MeterPoint{-0.1, 300.0}, 1000, 1000), Error);
    CHECK_THROWS_AS(geo_to_pixel(t, MeterPoint{300.001, 300.0}, 1000, 1000), Error);
    try {
        geo_to_pixel(t, MeterPoint{-0.1, 300.0}, 1000, 1000);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::out_of_footprint);
    }
}

TEST_CASE("pixel_to_geo: centers") {
    const GeoTransform t{0.0, 300.0, 0.3};
    const MeterPoint m = pixel_to_geo(t, PixelCoord{0, 0});
    CHECK(m.x == doctest::Approx(0.15));
    CHECK(m.y == doctest::Approx(299.85));
    const MeterPoint m2 = pixel_to_geo(t, PixelCoord{999, 999});
    CHECK(m2.x == doctest::Approx(299.85));
    CHECK(m2.y == doctest::Approx(0.15));
}

TEST_CASE("pixel round trip: exhaustive on a small raster, sampled on 1000^2") {
    const GeoTransform t{12.0, 500.0, 0.3};
    for (int r = 0; r < 64; ++r)
        for (int c = 0; c < 64; ++c) {
            const PixelCoord pc{c, r};
            CHECK(geo_to_pixel(t, pixel_to_geo(t, pc), 64, 64) == pc);
        }
    Rng rng(7);
    for (int i = 0; i < 2000; ++i) {
        const PixelCoord pc{static_cast<int>(rng.next_below(1000)),
                            static_cast<int>(rng.next_below(1000))};
        CHECK(geo_to_pixel(t, pixel_to_geo(t, pc), 1000, 1000) == pc);
    }
}

TEST_CASE("projection distance error < 0.5% within 300 m, |lat| <= 60") {
    Rng rng(99);
    for (int i = 0; i < 2000; ++i) {
        const GeoPoint origin{rng.next_double() * 360.0 - 180.0,
                              rng.next_double() * 120.0 - 60.0};
        const LocalFrame f = make_local_frame(origin);
        // random offsets within ~300 m of the origin
        const double dx = (rng.next_double() - 0.5) * 600.0;
        const double dy = (rng.next_double() - 0.5) * 600.0;
        const GeoPoint a = unproject(f, MeterPoint{dx * 0.5, dy * 0.5});
        const GeoPoint b = unproject(f, MeterPoint{-dx * 0.5, -dy * 0.5});
        const MeterPoint ma = project(f, a);
        const MeterPoint mb = project(f, b);
        const double planar = std::hypot(ma.x - mb.x, ma.y - mb.y);
        const double sphere = haversine_m(a, b);
        if (sphere < 1.0) continue;
        // the frame scale constant differs slightly from the sphere radius;
        // the spec's tolerance absorbs both effects
        CHECK(std::abs(planar - sphere) / sphere < 0.005);
    }
}

TEST_CASE("polyline validity") {
    CHECK(polyline_valid({GeoPoint{0, 0}, GeoPoint{1, 1}}));
    CHECK_FALSE(polyline_valid({GeoPoint{0, 0}}));
    CHECK_FALSE(polyline_valid({GeoPoint{0, 0}, GeoPoint{0, 0}}));
    CHECK_FALSE(polyline_valid({GeoPoint{0, 0}, GeoPoint{200, 1}}));
}
