#include "roadscope/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "roadscope/error.hpp"
#include "roadscope/fsutil.hpp"

namespace roadscope {

using nlohmann::json;
namespace fs = std::filesystem;

const char* split_name(Split s) {
    switch (s) {
        case Split::none: return "none";
        case Split::train: return "train";
        case Split::test: return "test";
    }
    return "?";
}

Split split_from_name(const std::string& name) {
    if (name == "none") return Split::none;
    if (name == "train") return Split::train;
    if (name == "test") return Split::test;
    fail(Errc::schema_error, "unknown split \"" + name + "\"");
}

bool cloud_filter_keep(const std::vector<std::uint8_t>& tile_rgb, const CloudFilterConfig& cfg) {
    if (cfg.brightness_threshold < 0 || cfg.brightness_threshold > 255)
        fail(Errc::schema_error, "brightness threshold must be in [0,255]");
    if (cfg.max_bright_fraction < 0.0 || cfg.max_bright_fraction > 1.0)
        fail(Errc::schema_error, "bright fraction must be in [0,1]");
    const std::size_t npix = tile_rgb.size() / 3;
    if (npix == 0) return true;
    std::size_t bright = 0;
    for (std::size_t i = 0; i < npix; ++i) {
        const std::uint8_t lo = std::min({tile_rgb[i * 3], tile_rgb[i * 3 + 1], tile_rgb[i * 3 + 2]});
        if (lo >= cfg.brightness_threshold) ++bright;
    }
    const double fraction = static_cast<double>(bright) / static_cast<double>(npix);
    return fraction <= cfg.max_bright_fraction;
}

std::vector<ManifestEntry> balance(const std::vector<ManifestEntry>& entries,
                                   std::size_t per_class, const Rng& rng) {
    std::array<std::vector<std::size_t>, kNumClasses> by_class;
    for (std::size_t i = 0; i < entries.size(); ++i)
        by_class[static_cast<int>(entries[i].cls)].push_back(i);

    for (int c = 0; c < kNumClasses; ++c) {
        if (by_class[c].size() < per_class)
            fail(Errc::insufficient_class,
                 std::string(road_class_name(static_cast<RoadClass>(c))) + ": have " +
                     std::to_string(by_class[c].size()) + ", need " + std::to_string(per_class));
    }

    std::vector<ManifestEntry> out;
    out.reserve(per_class * kNumClasses);
    for (int c = 0; c < kNumClasses; ++c) {
        Rng class_rng = rng.fork(std::string("balance/") + road_class_name(static_cast<RoadClass>(c)));
        class_rng.shuffle(by_class[c]);
        for (std::size_t k = 0; k < per_class; ++k) out.push_back(entries[by_class[c][k]]);
    }
    return out;
}

std::vector<ManifestEntry> split_entries(const std::vector<ManifestEntry>& entries,
                                         double test_ratio, const Rng& rng) {
    if (entries.empty()) fail(Errc::empty_result, "cannot split an empty entry list");
    if (test_ratio < 0.0 || test_ratio > 1.0)
        fail(Errc::schema_error, "test ratio must be in [0,1]");

    std::vector<ManifestEntry> out = entries;
    for (int c = 0; c < kNumClasses; ++c) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < out.size(); ++i)
            if (static_cast<int>(out[i].cls) == c) idx.push_back(i);
        if (idx.empty()) continue;
        const std::size_t n_test = static_cast<std::size_t>(
            std::floor(static_cast<double>(idx.size()) * test_ratio + 0.5));
        Rng class_rng = rng.fork(std::string("split/") + road_class_name(static_cast<RoadClass>(c)));
        class_rng.shuffle(idx);
        for (std::size_t k = 0; k < idx.size(); ++k)
            out[idx[k]].split = k < n_test ? Split::test : Split::train;
    }
    return out;
}

namespace {

json entry_to_json(const ManifestEntry& e) {
    json j = {{"tile_path", e.tile_path},
              {"class", road_class_name(e.cls)},
              {"country", e.country},
              {"road_id", e.road_id},
              {"center", json::array({e.center.lon, e.center.lat})},
              {"split", split_name(e.split)},
              {"mask_mode", mask_mode_name(e.mask_mode)}};
    if (e.mask_path)
        j["mask_path"] = *e.mask_path;
    else
        j["mask_path"] = nullptr;
    return j;
}

ManifestEntry entry_from_json(const json& j, const std::string& path, std::size_t line_no) {
    try {
        ManifestEntry e;
        e.tile_path = j.at("tile_path").get<std::string>();
        if (j.contains("mask_path") && !j.at("mask_path").is_null())
            e.mask_path = j.at("mask_path").get<std::string>();
        const std::string cls = j.at("class").get<std::string>();
        auto rc = road_class_from_name(cls);
        if (!rc)
            fail(Errc::schema_error,
                 path + ":" + std::to_string(line_no) + ": unknown class \"" + cls + "\"");
        e.cls = *rc;
        e.country = j.at("country").get<std::string>();
        e.road_id = j.at("road_id").get<std::string>();
        e.center = GeoPoint{j.at("center").at(0).get<double>(), j.at("center").at(1).get<double>()};
        e.split = split_from_name(j.at("split").get<std::string>());
        e.mask_mode = mask_mode_from_name(j.at("mask_mode").get<std::string>());
        e.line_no = line_no;
        if (e.tile_path.empty())
            fail(Errc::schema_error, path + ":" + std::to_string(line_no) + ": empty tile_path");
        if (!geo_point_valid(e.center))
            fail(Errc::schema_error, path + ":" + std::to_string(line_no) + ": invalid center");
        return e;
    } catch (const json::exception& ex) {
        fail(Errc::schema_error, path + ":" + std::to_string(line_no) + ": " + ex.what());
    }
}

}  // namespace

void write_manifest(const std::string& path, const ManifestHeader& header,
                    const std::vector<ManifestEntry>& entries) {
    std::string out;
    json h = {{"schema_version", header.schema_version},
              {"seed", header.seed},
              {"created_utc", header.created_utc.empty() ? utc_timestamp() : header.created_utc},
              {"config_digest", header.config_digest}};
    out += h.dump();
    out += '\n';
    for (const auto& e : entries) {
        out += entry_to_json(e).dump();
        out += '\n';
    }
    write_text_file(path, out);
}

std::vector<ManifestEntry> read_manifest(const std::string& path, ManifestHeader* header) {
    std::ifstream in(path);
    if (!in) fail(Errc::io_error, "cannot open: " + path);
    std::vector<ManifestEntry> entries;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            fail(Errc::schema_error, path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        if (!have_header && j.is_object() && j.contains("schema_version") &&
            !j.contains("tile_path")) {
            have_header = true;
            if (header) {
                try {
                    header->schema_version = j.at("schema_version").get<int>();
                    header->seed = j.value("seed", std::uint64_t{0});
                    header->created_utc = j.value("created_utc", "");
                    header->config_digest = j.value("config_digest", "");
                } catch (const json::exception& e) {
                    fail(Errc::schema_error, path + ":" + std::to_string(line_no) + ": " + e.what());
                }
            }
            continue;
        }
        entries.push_back(entry_from_json(j, path, line_no));
    }
    return entries;
}

std::vector<ManifestEntry> filter_split(const std::vector<ManifestEntry>& entries, Split split) {
    std::vector<ManifestEntry> out;
    for (const auto& e : entries)
        if (e.split == split) out.push_back(e);
    return out;
}

void validate_manifest_files(const std::vector<ManifestEntry>& entries,
                             const std::string& base_dir) {
    for (const auto& e : entries) {
        const fs::path tile = fs::path(base_dir) / e.tile_path;
        if (!fs::exists(tile))
            fail(Errc::io_error, "manifest line " + std::to_string(e.line_no) +
                                     ": tile file missing: " + tile.string());
        if (e.mask_path) {
            const fs::path mask = fs::path(base_dir) / *e.mask_path;
            if (!fs::exists(mask))
                fail(Errc::io_error, "manifest line " + std::to_string(e.line_no) +
                                         ": mask file missing: " + mask.string());
        }
    }
}

}  // namespace roadscope
