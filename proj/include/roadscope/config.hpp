#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "roadscope/dataset.hpp"
#include "roadscope/maskgen.hpp"
#include "roadscope/nn/model.hpp"
#include "roadscope/nn/train.hpp"
#include "roadscope/synth.hpp"

namespace roadscope {

// Union of module configs. Loaded from JSON with unknown-key rejection;
// the fully resolved form (every key explicit) is echoed into the
// workspace and hashed into every artifact header.
struct RunConfig {
    std::uint64_t seed = 42;
    int threads = 1;

    int tile_size_px = 1000;

    double sampling_spacing_m = 100.0;
    double min_separation_m = 0.0;

    CloudFilterConfig cloud;
    DilationConfig dilation;

    std::size_t per_class = 0;  // 0 = size of the smallest class
    double test_ratio = 0.1;

    nn::TrainConfig train;           // train.seed mirrors the run seed
    nlohmann::json train_arch = "tiny_road_net";  // name or inline spec

    SynthConfig synth_a;
    SynthConfig synth_b;

    nlohmann::json to_json() const;
    std::string digest() const;

    // Resolves the model spec from train_arch for the configured input.
    nn::ModelSpec model_spec() const;
};

// Defaults overlaid with the file (if any); unknown keys rejected.
RunConfig load_config(const std::optional<std::string>& path);

RunConfig apply_config_json(RunConfig base, const nlohmann::json& j, const std::string& origin);

// Desk-scale defaults used by `roadscope synth` when no config is given:
// 128 px tiles, 45 m spacing, equal per-class dilation radii matching the
// painted band, the small synth architecture.
RunConfig make_synth_defaults();

}  // namespace roadscope
