#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "roadscope/geo.hpp"
#include "roadscope/maskgen.hpp"
#include "roadscope/osm_ingest.hpp"
#include "roadscope/raster_store.hpp"
#include "roadscope/rng.hpp"

namespace roadscope {

enum class Split { none, train, test };

const char* split_name(Split s);
Split split_from_name(const std::string& name);

struct ManifestEntry {
    std::string tile_path;                 // workspace-relative
    std::optional<std::string> mask_path;  // workspace-relative
    RoadClass cls = RoadClass::Minor;
    std::string country;
    std::string road_id;
    GeoPoint center;
    Split split = Split::none;
    MaskMode mask_mode = MaskMode::none;
    std::size_t line_no = 0;  // 1-based manifest line, set by read_manifest
};

struct CloudFilterConfig {
    int brightness_threshold = 200;   // 8-bit
    double max_bright_fraction = 0.4;
};

// Keep unless the fraction of pixels whose min(R,G,B) reaches the
// brightness threshold exceeds max_bright_fraction.
bool cloud_filter_keep(const std::vector<std::uint8_t>& tile_rgb, const CloudFilterConfig& cfg);

// Exactly per_class entries per class, sampled without replacement.
// Deterministic for fixed (input order, seed).
std::vector<ManifestEntry> balance(const std::vector<ManifestEntry>& entries,
                                   std::size_t per_class, const Rng& rng);

// Per-class stratified split; round(n_c * test_ratio) entries (half up)
// go to test via a seeded shuffle. Input order is preserved, only the
// split field changes.
std::vector<ManifestEntry> split_entries(const std::vector<ManifestEntry>& entries,
                                         double test_ratio, const Rng& rng);

struct ManifestHeader {
    int schema_version = 1;
    std::uint64_t seed = 0;
    std::string created_utc;
    std::string config_digest;
};

void write_manifest(const std::string& path, const ManifestHeader& header,
                    const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> read_manifest(const std::string& path, ManifestHeader* header = nullptr);

// Checks that every referenced tile (and mask, when set) exists under
// base_dir; errors carry the manifest line number.
void validate_manifest_files(const std::vector<ManifestEntry>& entries, const std::string& base_dir);

std::vector<ManifestEntry> filter_split(const std::vector<ManifestEntry>& entries, Split split);

}  // namespace roadscope
