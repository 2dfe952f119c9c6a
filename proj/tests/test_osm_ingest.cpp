#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "roadscope/error.hpp"
#include "roadscope/osm_ingest.hpp"
#include "roadscope/rng.hpp"

using namespace roadscope;

namespace {

const char* kOneLine = R"({
  "type": "FeatureCollection",
  "features": [
    {"type": "Feature", "id": "w1", "properties": {"highway": "primary"},
     "geometry": {"type": "LineString",
                  "coordinates": [[36.8, -1.3], [36.81, -1.3], [36.82, -1.31]]}}
  ]
})";

const char* kFootway = R"({
  "type": "FeatureCollection",
  "features": [
    {"type": "Feature", "id": "w2", "properties": {"highway": "footway"},
     "geometry": {"type": "LineString", "coordinates": [[0,0],[0.1,0]]}},
    {"type": "Feature", "id": "w3", "properties": {"highway": "track"},
     "geometry": {"type": "LineString", "coordinates": [[0,0],[0.1,0]]}}
  ]
})";

const char* kMulti = R"({
  "type": "FeatureCollection",
  "features": [
    {"type": "Feature", "id": "w9", "properties": {"highway": "track"},
     "geometry": {"type": "MultiLineString",
                  "coordinates": [[[0,0],[0.1,0]], [[0.2,0],[0.3,0.01]]]}}
  ]
})";

}  // namespace

TEST_CASE("classify_tag: table and case folding") {
    CHECK(classify_tag("motorway") == RoadClass::Major);
    CHECK(classify_tag("primary") == RoadClass::Major);
    CHECK(classify_tag("residential") == RoadClass::Minor);
    CHECK(classify_tag("service") == RoadClass::Minor);
    CHECK(classify_tag("TRACK") == RoadClass::TwoTrack);
    CHECK(classify_tag("  track \n") == RoadClass::TwoTrack);
    CHECK_FALSE(classify_tag("footway").has_value());
    CHECK_FALSE(classify_tag("").has_value());
}

TEST_CASE("classify_tag: property - table strings map, everything else None") {
    const TagTable& table = default_tag_table();
    for (const auto& [tag, cls] : table) CHECK(classify_tag(tag) == cls);
    Rng rng(1234);
    const std::string alphabet = "abcdefghijklmnopqrstuvwxyz_";
    for (int i = 0; i < 2000; ++i) {
        std::string s;
        const std::size_t len = rng.next_below(12);
        for (std::size_t k = 0; k < len; ++k)
            s.push_back(alphabet[rng.next_below(alphabet.size())]);
        const auto got = classify_tag(s);
        const auto it = table.find(s);
        if (it == table.end())
            CHECK_FALSE(got.has_value());
        else
            CHECK(got == it->second);
    }
}

TEST_CASE("parse_roads: single classified LineString") {
    ParseStats stats;
    const auto roads = parse_roads(kOneLine, default_tag_table(), &stats);
    REQUIRE(roads.size() == 1);
    CHECK(roads[0].id == "w1");
    CHECK(roads[0].cls == RoadClass::Major);
    CHECK(roads[0].raw_tag == "primary");
    CHECK(roads[0].polyline.size() == 3);
    CHECK(stats.features_in == 1);
    CHECK(stats.skipped == 0);
}

TEST_CASE("parse_roads: unmapped tag is skipped and counted") {
    ParseStats stats;
    const auto roads = parse_roads(kFootway, default_tag_table(), &stats);
    CHECK(roads.size() == 1);  // only the track
    CHECK(stats.features_in == 2);
    CHECK(stats.skipped == 1);
    CHECK(stats.skipped_unknown_tag == 1);
    CHECK(stats.records_out + stats.skipped == stats.features_in);
}

TEST_CASE("parse_roads: MultiLineString splits with #k ids") {
    ParseStats stats;
    const auto roads = parse_roads(kMulti, default_tag_table(), &stats);
    REQUIRE(roads.size() == 2);
    CHECK(roads[0].id == "w9#0");
    CHECK(roads[1].id == "w9#1");
    CHECK(roads[0].cls == RoadClass::TwoTrack);
    CHECK(stats.features_in == 2);  // after expansion
}

TEST_CASE("parse_roads: degenerate geometry skipped, consecutive dups removed") {
    const char* text = R"({
      "type": "FeatureCollection",
      "features": [
        {"type": "Feature", "properties": {"highway": "track"},
         "geometry": {"type": "LineString", "coordinates": [[1,1],[1,1],[1,1]]}},
        {"type": "Feature", "properties": {"highway": "track"},
         "geometry": {"type": "LineString", "coordinates": [[0,0],[0,0],[2,0],[2,0],[2,1]]}}
      ]
    })";
    ParseStats stats;
    const auto roads = parse_roads(text, default_tag_table(), &stats);
    REQUIRE(roads.size() == 1);
    CHECK(roads[0].polyline.size() == 3);  // dedup keeps 0,0 / 2,0 / 2,1
    CHECK(stats.skipped_bad_geometry == 1);
    for (std::size_t i = 1; i < roads[0].polyline.size(); ++i)
        CHECK_FALSE(roads[0].polyline[i] == roads[0].polyline[i - 1]);
}

TEST_CASE("parse_roads: malformed input carries a byte offset") {
    try {
        parse_roads("{\"type\": \"FeatureCollection\", \"features\": [", default_tag_table(),
                    nullptr);
        FAIL("expected MalformedInput");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::malformed_input);
        CHECK(std::string(e.what()).find("byte") != std::string::npos);
    }
}

TEST_CASE("parse_roads: zero classifiable roads is EmptyResult") {
    const char* text = R"({"type": "FeatureCollection", "features": [
      {"type": "Feature", "properties": {"highway": "footway"},
       "geometry": {"type": "LineString", "coordinates": [[0,0],[1,0]]}}]})";
    try {
        parse_roads(text);
        FAIL("expected EmptyResult");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::empty_result);
    }
}

TEST_CASE("road table round trip") {
    const auto roads = parse_roads(kMulti);
    const std::string path =
        (std::filesystem::temp_directory_path() / "roadscope_test_roads.jsonl").string();
    write_road_table(path, roads, 42, "digest123");
    const auto back = read_road_table(path);
    REQUIRE(back.size() == roads.size());
    for (std::size_t i = 0; i < roads.size(); ++i) {
        CHECK(back[i].id == roads[i].id);
        CHECK(back[i].raw_tag == roads[i].raw_tag);
        CHECK(back[i].cls == roads[i].cls);
        REQUIRE(back[i].polyline.size() == roads[i].polyline.size());
        for (std::size_t k = 0; k < roads[i].polyline.size(); ++k) {
            CHECK(back[i].polyline[k].lon == doctest::Approx(roads[i].polyline[k].lon));
            CHECK(back[i].polyline[k].lat == doctest::Approx(roads[i].polyline[k].lat));
        }
    }
    std::filesystem::remove(path);
}

TEST_CASE("road class serialization order is stable") {
    CHECK(std::string(road_class_name(RoadClass::Major)) == "major");
    CHECK(std::string(road_class_name(RoadClass::Minor)) == "minor");
    CHECK(std::string(road_class_name(RoadClass::TwoTrack)) == "two_track");
    CHECK(static_cast<int>(RoadClass::Major) < static_cast<int>(RoadClass::Minor));
    CHECK(static_cast<int>(RoadClass::Minor) < static_cast<int>(RoadClass::TwoTrack));
}
