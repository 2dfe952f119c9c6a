#include "roadscope/geo.hpp"

#include <cmath>

#include "roadscope/error.hpp"

namespace roadscope {

namespace {
constexpr double kDegToRad = 0.017453292519943295;
}

bool geo_point_valid(const GeoPoint& p) {
    return p.lon >= -180.0 && p.lon <= 180.0 && p.lat >= -90.0 && p.lat <= 90.0 &&
           std::isfinite(p.lon) && std::isfinite(p.lat);
}

bool polyline_valid(const Polyline& line) {
    if (line.size() < 2) return false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (!geo_point_valid(line[i])) return false;
        if (i > 0 && line[i] == line[i - 1]) return false;
    }
    return true;
}

LocalFrame make_local_frame(const GeoPoint& origin, double m_per_deg_lat) {
    if (!geo_point_valid(origin) || std::abs(origin.lat) >= kMaxFrameLatDeg)
        fail(Errc::latitude_band,
             "frame origin latitude must lie within (-85, 85) degrees");
    if (!(m_per_deg_lat > 0.0)) fail(Errc::schema_error, "m_per_deg_lat must be > 0");
    LocalFrame f;
    f.origin = origin;
    f.m_per_deg_lat = m_per_deg_lat;
    f.m_per_deg_lon = m_per_deg_lat * std::cos(origin.lat * kDegToRad);
    return f;
}

MeterPoint project(const LocalFrame& frame, const GeoPoint& p) {
    if (std::abs(p.lat) >= kMaxFrameLatDeg)
        fail(Errc::latitude_band, "latitude outside supported band (|lat| < 85)");
    return MeterPoint{(p.lon - frame.origin.lon) * frame.m_per_deg_lon,
                      (p.lat - frame.origin.lat) * frame.m_per_deg_lat};
}

GeoPoint unproject(const LocalFrame& frame, const MeterPoint& m) {
    return GeoPoint{frame.origin.lon + m.x / frame.m_per_deg_lon,
                    frame.origin.lat + m.y / frame.m_per_deg_lat};
}

PixelCoordF geo_to_pixel_f(const GeoTransform& t, const MeterPoint& m) {
    // -0.5 so that integer values land on pixel centers
    return PixelCoordF{(m.x - t.origin_x) / t.gsd - 0.5, (t.origin_y - m.y) / t.gsd - 0.5};
}

void geo_to_pixel_unchecked(const GeoTransform& t, const MeterPoint& m, std::int64_t& col,
                            std::int64_t& row) {
    col = static_cast<std::int64_t>(std::floor((m.x - t.origin_x) / t.gsd));
    row = static_cast<std::int64_t>(std::floor((t.origin_y - m.y) / t.gsd));
}

PixelCoord geo_to_pixel(const GeoTransform& t, const MeterPoint& m, int width, int height) {
    std::int64_t col, row;
    geo_to_pixel_unchecked(t, m, col, row);
    if (col < 0 || row < 0 || col >= width || row >= height)
        fail(Errc::out_of_footprint, "point maps to pixel (" + std::to_string(col) + "," +
                                         std::to_string(row) + ") outside raster " +
                                         std::to_string(width) + "x" + std::to_string(height));
    return PixelCoord{static_cast<int>(col), static_cast<int>(row)};
}

MeterPoint pixel_to_geo(const GeoTransform& t, const PixelCoord& pc) {
    return MeterPoint{t.origin_x + (pc.col + 0.5) * t.gsd, t.origin_y - (pc.row + 0.5) * t.gsd};
}

}  // namespace roadscope
