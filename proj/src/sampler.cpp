#include "roadscope/sampler.hpp"

#include <cmath>

#include "roadscope/error.hpp"

namespace roadscope {

std::vector<SamplePoint> sample_points(const RoadRecord& road, double spacing_m) {
    if (!(spacing_m > 0.0)) fail(Errc::schema_error, "sampling spacing must be > 0");
    if (road.polyline.size() < 2) fail(Errc::schema_error, "polyline needs >= 2 points");

    const LocalFrame frame = make_local_frame(road.polyline.front());
    std::vector<MeterPoint> verts;
    verts.reserve(road.polyline.size());
    for (const auto& p : road.polyline) verts.push_back(project(frame, p));

    std::vector<double> cum{0.0};
    for (std::size_t i = 1; i < verts.size(); ++i) {
        const double dx = verts[i].x - verts[i - 1].x;
        const double dy = verts[i].y - verts[i - 1].y;
        cum.push_back(cum.back() + std::hypot(dx, dy));
    }
    const double total = cum.back();

    std::vector<SamplePoint> out;
    std::size_t seg = 0;
    for (std::size_t k = 0;; ++k) {
        const double chain = static_cast<double>(k) * spacing_m;
        if (chain > total && k > 0) break;
        while (seg + 2 < cum.size() && cum[seg + 1] < chain) ++seg;
        const double seg_len = cum[seg + 1] - cum[seg];
        const double t = seg_len > 0.0 ? (chain - cum[seg]) / seg_len : 0.0;
        const MeterPoint m{verts[seg].x + t * (verts[seg + 1].x - verts[seg].x),
                           verts[seg].y + t * (verts[seg + 1].y - verts[seg].y)};
        SamplePoint sp;
        sp.point = unproject(frame, m);
        sp.road_id = road.id;
        sp.cls = road.cls;
        sp.chainage_m = chain;
        out.push_back(sp);
        if (total <= 0.0) break;  // degenerate near-zero-length road
    }
    return out;
}

std::vector<SamplePoint> min_separation_filter(const std::vector<SamplePoint>& points,
                                               double min_sep_m, const LocalFrame& frame) {
    if (min_sep_m < 0.0) fail(Errc::schema_error, "min separation must be >= 0");
    if (min_sep_m == 0.0) return points;

    std::vector<SamplePoint> kept;
    std::vector<MeterPoint> kept_m;
    const double min_sq = min_sep_m * min_sep_m;
    for (const auto& sp : points) {
        const MeterPoint m = project(frame, sp.point);
        bool ok = true;
        for (const auto& k : kept_m) {
            const double dx = m.x - k.x;
            const double dy = m.y - k.y;
            if (dx * dx + dy * dy < min_sq) {
                ok = false;
                break;
            }
        }
        if (ok) {
            kept.push_back(sp);
            kept_m.push_back(m);
        }
    }
    return kept;
}

}  // namespace roadscope
