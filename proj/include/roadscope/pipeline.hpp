#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "roadscope/config.hpp"
#include "roadscope/dataset.hpp"
#include "roadscope/synth.hpp"

namespace roadscope {

// Fixed workspace layout so experiment runners compose without path
// plumbing: ws/{roads, scenes, tiles, masks, manifests, models, reports,
// logs}.
struct Workspace {
    std::filesystem::path root;

    explicit Workspace(std::filesystem::path r) : root(std::move(r)) {}

    std::filesystem::path roads_dir() const { return root / "roads"; }
    std::filesystem::path scenes_dir() const { return root / "scenes"; }
    std::filesystem::path tiles_dir() const { return root / "tiles"; }
    std::filesystem::path masks_dir() const { return root / "masks"; }
    std::filesystem::path manifests_dir() const { return root / "manifests"; }
    std::filesystem::path models_dir() const { return root / "models"; }
    std::filesystem::path reports_dir() const { return root / "reports"; }
    std::filesystem::path logs_dir() const { return root / "logs"; }
    std::filesystem::path config_path() const { return root / "config.resolved.json"; }

    void ensure_dirs() const;
};

void save_resolved_config(const Workspace& ws, const RunConfig& cfg);

// Loads ws/config.resolved.json when present (the reproducibility chain
// for chained subcommands).
std::optional<RunConfig> load_workspace_config(const Workspace& ws);

// Machine-readable run log, one JSON object per run, appended.
void append_run_log(const Workspace& ws, const nlohmann::json& entry);

// Samples roads, extracts cloud-filtered tiles from every scene under
// scenes_dir, balances, splits, writes tile PNGs and the manifest.
std::string build_dataset(const Workspace& ws, const RunConfig& cfg,
                          const std::string& road_table_path, const std::string& scenes_dir,
                          const std::string& manifest_name = "dataset.jsonl");

// Generates a road mask PNG per manifest entry and rewrites the manifest
// with mask paths filled in.
void mask_dataset(const Workspace& ws, const RunConfig& cfg, const std::string& manifest_path,
                  const std::string& road_table_path, const std::string& scenes_dir);

// Full synthetic corpus: scene + GeoJSON + road table + tiles + manifest
// (+ masks unless skip_masks). Returns the manifest path.
std::string synth_corpus(const Workspace& ws, const RunConfig& cfg, const SynthConfig& scfg,
                         bool skip_masks, const std::string& manifest_name);

}  // namespace roadscope
