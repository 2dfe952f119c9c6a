#include "roadscope/osm_ingest.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include <json.hpp>

#include "roadscope/error.hpp"
#include "roadscope/fsutil.hpp"

namespace roadscope {

using nlohmann::json;

const char* road_class_name(RoadClass c) {
    switch (c) {
        case RoadClass::Major: return "major";
        case RoadClass::Minor: return "minor";
        case RoadClass::TwoTrack: return "two_track";
    }
    return "?";
}

std::optional<RoadClass> road_class_from_name(std::string_view name) {
    if (name == "major") return RoadClass::Major;
    if (name == "minor") return RoadClass::Minor;
    if (name == "two_track") return RoadClass::TwoTrack;
    return std::nullopt;
}

const TagTable& default_tag_table() {
    static const TagTable table = {
        {"motorway", RoadClass::Major},      {"trunk", RoadClass::Major},
        {"primary", RoadClass::Major},       {"motorway_link", RoadClass::Major},
        {"trunk_link", RoadClass::Major},    {"primary_link", RoadClass::Major},
        {"secondary", RoadClass::Minor},     {"tertiary", RoadClass::Minor},
        {"unclassified", RoadClass::Minor},  {"residential", RoadClass::Minor},
        {"secondary_link", RoadClass::Minor},{"tertiary_link", RoadClass::Minor},
        {"service", RoadClass::Minor},       {"track", RoadClass::TwoTrack},
    };
    return table;
}

std::optional<RoadClass> classify_tag(std::string_view raw_tag, const TagTable& table) {
    std::string key;
    key.reserve(raw_tag.size());
    for (char c : raw_tag) key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    // trim surrounding whitespace
    auto b = key.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return std::nullopt;
    auto e = key.find_last_not_of(" \t\r\n");
    key = key.substr(b, e - b + 1);
    auto it = table.find(key);
    if (it == table.end()) return std::nullopt;
    return it->second;
}

namespace {

// Drops consecutive duplicates; empty result means unusable geometry.
Polyline coords_to_polyline(const json& coords) {
    Polyline line;
    for (const auto& c : coords) {
        if (!c.is_array() || c.size() < 2 || !c[0].is_number() || !c[1].is_number()) return {};
        GeoPoint p{c[0].get<double>(), c[1].get<double>()};
        if (!geo_point_valid(p)) return {};
        if (!line.empty() && line.back() == p) continue;
        line.push_back(p);
    }
    if (line.size() < 2) return {};
    return line;
}

std::string feature_id(const json& feature, std::size_t index) {
    if (feature.contains("id")) {
        const auto& id = feature["id"];
        if (id.is_string()) return id.get<std::string>();
        if (id.is_number_integer()) return std::to_string(id.get<long long>());
    }
    if (feature.contains("properties") && feature["properties"].is_object()) {
        const auto& props = feature["properties"];
        for (const char* key : {"id", "@id", "osm_id"}) {
            if (props.contains(key)) {
                const auto& v = props[key];
                if (v.is_string()) return v.get<std::string>();
                if (v.is_number_integer()) return std::to_string(v.get<long long>());
            }
        }
    }
    return "feature_" + std::to_string(index);
}

}  // namespace

std::vector<RoadRecord> parse_roads(std::string_view geojson_text, const TagTable& table,
                                    ParseStats* stats) {
    json root;
    try {
        root = json::parse(geojson_text);
    } catch (const json::parse_error& e) {
        fail(Errc::malformed_input,
             "GeoJSON syntax error at byte " + std::to_string(e.byte) + ": " + e.what());
    }
    if (!root.is_object() || root.value("type", "") != "FeatureCollection" ||
        !root.contains("features") || !root["features"].is_array())
        fail(Errc::malformed_input, "input is not a GeoJSON FeatureCollection");

    ParseStats local;
    std::vector<RoadRecord> records;

    std::size_t idx = 0;
    for (const auto& feature : root["features"]) {
        const std::string fid = feature_id(feature, idx);
        ++idx;

        std::optional<RoadClass> cls;
        std::string raw_tag;
        if (feature.contains("properties") && feature["properties"].is_object()) {
            const auto& props = feature["properties"];
            if (props.contains("highway") && props["highway"].is_string()) {
                raw_tag = props["highway"].get<std::string>();
                cls = classify_tag(raw_tag, table);
            }
        }

        // one "unit" per LineString part, as if MultiLineStrings were pre-split
        std::vector<json> parts;
        bool multi = false;
        if (feature.contains("geometry") && feature["geometry"].is_object()) {
            const auto& geom = feature["geometry"];
            const std::string gtype = geom.value("type", "");
            if (gtype == "LineString" && geom.contains("coordinates")) {
                parts.push_back(geom["coordinates"]);
            } else if (gtype == "MultiLineString" && geom.contains("coordinates") &&
                       geom["coordinates"].is_array()) {
                multi = true;
                for (const auto& part : geom["coordinates"]) parts.push_back(part);
            }
        }
        if (parts.empty()) {
            ++local.features_in;
            ++local.skipped;
            ++local.skipped_bad_geometry;
            continue;
        }

        for (std::size_t k = 0; k < parts.size(); ++k) {
            ++local.features_in;
            if (!cls) {
                ++local.skipped;
                ++local.skipped_unknown_tag;
                continue;
            }
            Polyline line = coords_to_polyline(parts[k]);
            if (line.empty()) {
                ++local.skipped;
                ++local.skipped_bad_geometry;
                continue;
            }
            RoadRecord rec;
            rec.id = multi ? fid + "#" + std::to_string(k) : fid;
            rec.raw_tag = raw_tag;
            rec.polyline = std::move(line);
            rec.cls = *cls;
            records.push_back(std::move(rec));
            ++local.records_out;
        }
    }

    if (stats) *stats = local;
    if (records.empty()) fail(Errc::empty_result, "no classifiable roads in input");
    return records;
}

void write_road_table(const std::string& path, const std::vector<RoadRecord>& roads,
                      std::uint64_t seed, const std::string& config_digest) {
    std::string out;
    json header = {{"schema_version", 1}, {"seed", seed}, {"config_digest", config_digest}};
    out += header.dump();
    out += '\n';
    for (const auto& r : roads) {
        json coords = json::array();
        for (const auto& p : r.polyline) coords.push_back(json::array({p.lon, p.lat}));
        json rec = {{"id", r.id},
                    {"raw_tag", r.raw_tag},
                    {"class", road_class_name(r.cls)},
                    {"coordinates", std::move(coords)}};
        out += rec.dump();
        out += '\n';
    }
    write_text_file(path, out);
}

std::vector<RoadRecord> read_road_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::io_error, "cannot open: " + path);
    std::vector<RoadRecord> roads;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            fail(Errc::schema_error, path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        if (line_no == 1 && j.contains("schema_version") && !j.contains("id")) continue;  // header
        try {
            RoadRecord rec;
            rec.id = j.at("id").get<std::string>();
            rec.raw_tag = j.at("raw_tag").get<std::string>();
            auto cls = road_class_from_name(j.at("class").get<std::string>());
            if (!cls)
                fail(Errc::schema_error, path + ":" + std::to_string(line_no) +
                                             ": unknown class \"" +
                                             j.at("class").get<std::string>() + "\"");
            rec.cls = *cls;
            for (const auto& c : j.at("coordinates"))
                rec.polyline.push_back(GeoPoint{c.at(0).get<double>(), c.at(1).get<double>()});
            if (!polyline_valid(rec.polyline))
                fail(Errc::schema_error,
                     path + ":" + std::to_string(line_no) + ": invalid polyline");
            roads.push_back(std::move(rec));
        } catch (const json::exception& e) {
            fail(Errc::schema_error, path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return roads;
}

}  // namespace roadscope
