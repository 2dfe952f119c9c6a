#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "roadscope/geo.hpp"

namespace roadscope {

// Three-class label set. Order is the stable serialization order.
enum class RoadClass : int { Major = 0, Minor = 1, TwoTrack = 2 };

inline constexpr int kNumClasses = 3;

const char* road_class_name(RoadClass c);                     // "major" | "minor" | "two_track"
std::optional<RoadClass> road_class_from_name(std::string_view name);

struct RoadRecord {
    std::string id;        // source feature id, "#k"-suffixed for multipart geometries
    std::string raw_tag;   // original highway value
    Polyline polyline;     // >= 2 distinct consecutive points
    RoadClass cls = RoadClass::Minor;
};

// highway tag -> class. Lookup keys are lower-case.
using TagTable = std::map<std::string, RoadClass>;

// Aggregation of OSM highway subclasses into the three-class label set.
// Major: paved arterials; Minor: local paved/light roads; TwoTrack: track.
const TagTable& default_tag_table();

std::optional<RoadClass> classify_tag(std::string_view raw_tag,
                                      const TagTable& table = default_tag_table());

struct ParseStats {
    std::size_t features_in = 0;   // after MultiLineString expansion
    std::size_t records_out = 0;
    std::size_t skipped = 0;
    std::size_t skipped_unknown_tag = 0;
    std::size_t skipped_bad_geometry = 0;
};

// Parses a GeoJSON FeatureCollection (WGS84 lon/lat order). LineStrings
// yield one record each; MultiLineStrings one per part with ids "id#0",
// "id#1", ... Features with unmappable tags or fewer than 2 distinct
// points are skipped and counted, not errors.
std::vector<RoadRecord> parse_roads(std::string_view geojson_text,
                                    const TagTable& table = default_tag_table(),
                                    ParseStats* stats = nullptr);

// Road table file: JSON Lines, one record per line, preceded by a header
// object carrying seed/config digest for the reproducibility chain.
void write_road_table(const std::string& path, const std::vector<RoadRecord>& roads,
                      std::uint64_t seed, const std::string& config_digest);
std::vector<RoadRecord> read_road_table(const std::string& path);

}  // namespace roadscope
