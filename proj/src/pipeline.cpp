#include "roadscope/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "roadscope/error.hpp"
#include "roadscope/fsutil.hpp"
#include "roadscope/osm_ingest.hpp"
#include "roadscope/parallel.hpp"
#include "roadscope/png_io.hpp"
#include "roadscope/sampler.hpp"

namespace roadscope {

using nlohmann::json;
namespace fs = std::filesystem;

void Workspace::ensure_dirs() const {
    for (const auto& d : {roads_dir(), scenes_dir(), tiles_dir(), masks_dir(), manifests_dir(),
                          models_dir(), reports_dir(), logs_dir()})
        fs::create_directories(d);
}

void save_resolved_config(const Workspace& ws, const RunConfig& cfg) {
    fs::create_directories(ws.root);
    write_text_file(ws.config_path(), cfg.to_json().dump(2) + "\n");
}

std::optional<RunConfig> load_workspace_config(const Workspace& ws) {
    if (!fs::exists(ws.config_path())) return std::nullopt;
    return load_config(ws.config_path().string());
}

void append_run_log(const Workspace& ws, const json& entry) {
    fs::create_directories(ws.logs_dir());
    std::ofstream out(ws.logs_dir() / "runs.jsonl", std::ios::app);
    if (!out) fail(Errc::io_error, "cannot append run log in " + ws.logs_dir().string());
    out << entry.dump() << "\n";
}

namespace {

std::string sanitize_id(const std::string& id) {
    std::string out;
    for (char c : id)
        out.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
    return out;
}

std::vector<std::string> scene_dirs_in(const std::string& scenes_dir) {
    std::vector<std::string> dirs;
    if (!fs::exists(scenes_dir)) fail(Errc::io_error, "scenes directory missing: " + scenes_dir);
    for (const auto& entry : fs::directory_iterator(scenes_dir))
        if (entry.is_directory() && fs::exists(entry.path() / "scene.json"))
            dirs.push_back(entry.path().string());
    std::sort(dirs.begin(), dirs.end());
    return dirs;
}

}  // namespace

std::string build_dataset(const Workspace& ws, const RunConfig& cfg,
                          const std::string& road_table_path, const std::string& scenes_dir,
                          const std::string& manifest_name) {
    ws.ensure_dirs();
    const auto roads = read_road_table(road_table_path);
    if (roads.empty()) fail(Errc::empty_result, "road table is empty: " + road_table_path);

    const auto dirs = scene_dirs_in(scenes_dir);
    if (dirs.empty()) fail(Errc::empty_result, "no scene containers under " + scenes_dir);

    struct Candidate {
        ManifestEntry entry;
        std::size_t scene_idx;
    };
    std::vector<Candidate> candidates;
    std::vector<Scene> scenes;
    scenes.reserve(dirs.size());

    for (std::size_t si = 0; si < dirs.size(); ++si) {
        scenes.push_back(open_scene(dirs[si]));
        const Scene& scene = scenes.back();

        // sample along every road, keep points whose tile fits this scene
        std::vector<SamplePoint> points;
        for (const auto& road : roads) {
            // cheap reject of roads far outside the scene footprint
            const MeterPoint m0 = project(scene.frame, road.polyline.front());
            const double extent_x = scene.width * scene.transform.gsd;
            const double extent_y = scene.height * scene.transform.gsd;
            const double slack = 4.0 * cfg.tile_size_px * scene.transform.gsd + 1000.0;
            if (m0.x < -slack || m0.x > extent_x + slack || m0.y > slack ||
                m0.y < -extent_y - slack)
                continue;
            const auto road_points = sample_points(road, cfg.sampling_spacing_m);
            points.insert(points.end(), road_points.begin(), road_points.end());
        }
        if (cfg.min_separation_m > 0.0)
            points = min_separation_filter(points, cfg.min_separation_m, scene.frame);

        for (const auto& sp : points) {
            Tile tile;
            try {
                tile = extract_tile(scene, sp.point, cfg.tile_size_px);
            } catch (const Error& e) {
                if (e.code() == Errc::out_of_bounds) continue;  // edge point, rejected
                throw;
            }
            if (!cloud_filter_keep(tile.pixels, cfg.cloud)) continue;
            ManifestEntry entry;
            entry.cls = sp.cls;
            entry.country = scene.country;
            entry.road_id = sp.road_id;
            entry.center = sp.point;
            entry.split = Split::none;
            entry.mask_mode = MaskMode::none;
            entry.tile_path = "tiles/" + scene.country + "_" + sanitize_id(sp.road_id) + "_" +
                              std::to_string(static_cast<long long>(std::llround(sp.chainage_m))) +
                              "m.png";
            candidates.push_back(Candidate{std::move(entry), si});
        }
    }
    if (candidates.empty()) fail(Errc::empty_result, "no usable tiles from " + scenes_dir);

    std::map<std::string, std::size_t> scene_of_tile;
    std::vector<ManifestEntry> entries;
    entries.reserve(candidates.size());
    for (auto& c : candidates) {
        scene_of_tile[c.entry.tile_path] = c.scene_idx;
        entries.push_back(std::move(c.entry));
    }

    std::size_t per_class = cfg.per_class;
    if (per_class == 0) {
        std::array<std::size_t, kNumClasses> counts{};
        for (const auto& e : entries) counts[static_cast<int>(e.cls)] += 1;
        per_class = *std::min_element(counts.begin(), counts.end());
        if (per_class == 0) fail(Errc::insufficient_class, "a class has zero usable tiles");
    }

    const Rng rng(cfg.seed);
    auto balanced = balance(entries, per_class, rng);
    balanced = split_entries(balanced, cfg.test_ratio, rng);

    const std::string digest = cfg.digest();
    const std::vector<std::pair<std::string, std::string>> stamp = {
        {"roadscope_seed", std::to_string(cfg.seed)}, {"roadscope_config", digest}};
    parallel_for(balanced.size(), cfg.threads, [&](std::size_t i) {
        const ManifestEntry& e = balanced[i];
        const Scene& scene = scenes[scene_of_tile.at(e.tile_path)];
        const Tile tile = extract_tile(scene, e.center, cfg.tile_size_px);
        write_png((ws.root / e.tile_path).string(), cfg.tile_size_px, cfg.tile_size_px, 3,
                  tile.pixels, stamp);
    });

    ManifestHeader header;
    header.seed = cfg.seed;
    header.config_digest = digest;
    const std::string manifest_path = (ws.manifests_dir() / manifest_name).string();
    write_manifest(manifest_path, header, balanced);
    return manifest_path;
}

void mask_dataset(const Workspace& ws, const RunConfig& cfg, const std::string& manifest_path,
                  const std::string& road_table_path, const std::string& scenes_dir) {
    ws.ensure_dirs();
    const auto roads = read_road_table(road_table_path);
    ManifestHeader header;
    auto entries = read_manifest(manifest_path, &header);
    if (entries.empty()) fail(Errc::empty_result, "manifest has no entries: " + manifest_path);

    // geometry only; pixel blobs are not needed for masking
    std::vector<Scene> metas;
    for (const auto& dir : scene_dirs_in(scenes_dir)) {
        Scene full = open_scene(dir);  // validates the container
        full.pixels.clear();
        metas.push_back(std::move(full));
    }

    const std::string digest = cfg.digest();
    const std::vector<std::pair<std::string, std::string>> stamp = {
        {"roadscope_seed", std::to_string(cfg.seed)}, {"roadscope_config", digest}};

    parallel_for(entries.size(), cfg.threads, [&](std::size_t i) {
        ManifestEntry& e = entries[i];
        const Scene* scene = nullptr;
        PixelCoord top_left;
        for (const auto& meta : metas) {
            if (meta.country != e.country) continue;
            const MeterPoint m = project(meta.frame, e.center);
            std::int64_t col, row;
            geo_to_pixel_unchecked(meta.transform, m, col, row);
            const std::int64_t c0 = col - cfg.tile_size_px / 2;
            const std::int64_t r0 = row - cfg.tile_size_px / 2;
            if (c0 < 0 || r0 < 0 || c0 + cfg.tile_size_px > meta.width ||
                r0 + cfg.tile_size_px > meta.height)
                continue;
            scene = &meta;
            top_left = PixelCoord{static_cast<int>(c0), static_cast<int>(r0)};
            break;
        }
        if (!scene)
            fail(Errc::out_of_footprint, "manifest line " + std::to_string(e.line_no) +
                                             ": no scene contains tile " + e.tile_path);
        const GeoTransform t = window_transform(*scene, top_left);
        const Mask mask =
            road_mask_for_tile(roads, scene->frame, t, cfg.tile_size_px, cfg.dilation);
        const std::string mask_rel =
            "masks/" + fs::path(e.tile_path).stem().string() + "_mask.png";
        write_mask_png((ws.root / mask_rel).string(), mask, stamp);
        e.mask_path = mask_rel;
    });

    write_manifest(manifest_path, header, entries);
}

std::string synth_corpus(const Workspace& ws, const RunConfig& cfg, const SynthConfig& scfg,
                         bool skip_masks, const std::string& manifest_name) {
    ws.ensure_dirs();
    const SynthOutput out = generate_scene(scfg);

    const std::string digest = cfg.digest();
    const std::string scene_dir = (ws.scenes_dir() / (scfg.country_code + "_scene")).string();
    write_scene(scene_dir, out.scene,
                {{"seed", std::to_string(scfg.seed)}, {"config_digest", digest}});
    write_png(scene_dir + "/road_mask.png", out.scene_road_mask.width,
              out.scene_road_mask.height, 1,
              [&] {
                  std::vector<std::uint8_t> gray(out.scene_road_mask.bits.size());
                  for (std::size_t i = 0; i < gray.size(); ++i)
                      gray[i] = out.scene_road_mask.bits[i] ? 255 : 0;
                  return gray;
              }(),
              {{"roadscope_seed", std::to_string(scfg.seed)}, {"roadscope_config", digest}});

    const std::string geojson_path =
        (ws.roads_dir() / (scfg.country_code + ".geojson")).string();
    write_text_file(geojson_path, out.roads_geojson);

    ParseStats stats;
    const auto records = parse_roads(out.roads_geojson, default_tag_table(), &stats);
    const std::string table_path =
        (ws.roads_dir() / (scfg.country_code + "_roads.jsonl")).string();
    write_road_table(table_path, records, cfg.seed, digest);

    const std::string manifest =
        build_dataset(ws, cfg, table_path, ws.scenes_dir().string(), manifest_name);
    if (!skip_masks) mask_dataset(ws, cfg, manifest, table_path, ws.scenes_dir().string());
    return manifest;
}

}  // namespace roadscope
