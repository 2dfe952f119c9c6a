#pragma once

#include <string>
#include <vector>

#include "roadscope/geo.hpp"
#include "roadscope/osm_ingest.hpp"

namespace roadscope {

struct SamplePoint {
    GeoPoint point;
    std::string road_id;
    RoadClass cls = RoadClass::Minor;
    double chainage_m = 0.0;  // arc length from the polyline start
};

// Points at chainage 0, spacing, 2*spacing, ... <= total length,
// interpolated linearly in a local frame anchored at the first vertex.
// Chainage 0 is always present.
std::vector<SamplePoint> sample_points(const RoadRecord& road, double spacing_m = 100.0);

// Greedy scan in input order: a point survives iff its distance (in the
// given frame) to every previously kept point is >= min_sep.
std::vector<SamplePoint> min_separation_filter(const std::vector<SamplePoint>& points,
                                               double min_sep_m, const LocalFrame& frame);

}  // namespace roadscope
