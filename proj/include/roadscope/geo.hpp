#pragma once

#include <cstdint>
#include <vector>

namespace roadscope {

// Meters of one degree of latitude; longitude is scaled by cos(origin lat).
inline constexpr double kMetersPerDegLat = 111320.0;

// Frames are rejected beyond this latitude (cos factor degenerates).
inline constexpr double kMaxFrameLatDeg = 85.0;

struct GeoPoint {
    double lon = 0.0;  // degrees east, [-180, 180]
    double lat = 0.0;  // degrees north, [-90, 90]

    bool operator==(const GeoPoint&) const = default;
};

bool geo_point_valid(const GeoPoint& p);

// Ordered road centerline; >= 2 points, no two consecutive points identical.
using Polyline = std::vector<GeoPoint>;

bool polyline_valid(const Polyline& line);

struct MeterPoint {
    double x = 0.0;  // meters east of frame origin
    double y = 0.0;  // meters north of frame origin
};

// Local equirectangular projection. Good to <0.5% within a few hundred
// meters of the origin, which is all the tile pipeline needs.
struct LocalFrame {
    GeoPoint origin;
    double m_per_deg_lat = kMetersPerDegLat;
    double m_per_deg_lon = kMetersPerDegLat;  // m_per_deg_lat * cos(origin.lat)
};

LocalFrame make_local_frame(const GeoPoint& origin, double m_per_deg_lat = kMetersPerDegLat);

// Axis-aligned affine geotransform: origin is the OUTER corner of the
// top-left pixel, row index grows southward.
struct GeoTransform {
    double origin_x = 0.0;  // meters east
    double origin_y = 0.0;  // meters north
    double gsd = 0.3;       // meters per pixel, > 0
};

struct PixelCoord {
    int col = 0;
    int row = 0;

    bool operator==(const PixelCoord&) const = default;
};

MeterPoint project(const LocalFrame& frame, const GeoPoint& p);
GeoPoint unproject(const LocalFrame& frame, const MeterPoint& m);

// Continuous (unfloored, unbounded) pixel coordinates of a meter point.
// col/row = value for the pixel whose CENTER coincides with the point.
struct PixelCoordF {
    double col = 0.0;
    double row = 0.0;
};
PixelCoordF geo_to_pixel_f(const GeoTransform& t, const MeterPoint& m);

// Floor-based, bounds-checked; throws OutOfFootprint outside [0,w)x[0,h).
PixelCoord geo_to_pixel(const GeoTransform& t, const MeterPoint& m, int width, int height);

// Floor-based without bounds checking (may be negative / past the raster).
void geo_to_pixel_unchecked(const GeoTransform& t, const MeterPoint& m, std::int64_t& col,
                            std::int64_t& row);

// Center of the pixel.
MeterPoint pixel_to_geo(const GeoTransform& t, const PixelCoord& pc);

}  // namespace roadscope
