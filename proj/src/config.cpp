#include "roadscope/config.hpp"

#include "roadscope/error.hpp"
#include "roadscope/fsutil.hpp"
#include "roadscope/hash.hpp"

namespace roadscope {

using nlohmann::json;

namespace {

json synth_to_json(const SynthConfig& s) {
    return json{{"signal", signal_location_name(s.signal)},
                {"style", s.country_style},
                {"country", s.country_code},
                {"n_roads_per_class", s.n_roads_per_class},
                {"scene_width_px", s.scene_width},
                {"scene_height_px", s.scene_height},
                {"noise_sigma", s.noise_sigma},
                {"origin_lon", s.origin.lon},
                {"origin_lat", s.origin.lat},
                {"gsd_m", s.gsd},
                {"band_radius_px", s.band_radius_px},
                {"stripe_period_px", s.stripe_period_px},
                {"stripe_amp", s.stripe_amp},
                {"road_stripe_amp", s.road_stripe_amp}};
}

void synth_from_json(SynthConfig& s, const json& j, const std::string& origin) {
    for (const auto& [key, value] : j.items()) {
        if (key == "signal")
            s.signal = signal_location_from_name(value.get<std::string>());
        else if (key == "style")
            s.country_style = value.get<std::string>();
        else if (key == "country")
            s.country_code = value.get<std::string>();
        else if (key == "n_roads_per_class")
            s.n_roads_per_class = value.get<int>();
        else if (key == "scene_width_px")
            s.scene_width = value.get<int>();
        else if (key == "scene_height_px")
            s.scene_height = value.get<int>();
        else if (key == "noise_sigma")
            s.noise_sigma = value.get<double>();
        else if (key == "origin_lon")
            s.origin.lon = value.get<double>();
        else if (key == "origin_lat")
            s.origin.lat = value.get<double>();
        else if (key == "gsd_m")
            s.gsd = value.get<double>();
        else if (key == "band_radius_px")
            s.band_radius_px = value.get<int>();
        else if (key == "stripe_period_px")
            s.stripe_period_px = value.get<double>();
        else if (key == "stripe_amp")
            s.stripe_amp = value.get<double>();
        else if (key == "road_stripe_amp")
            s.road_stripe_amp = value.get<double>();
        else
            fail(Errc::schema_error, origin + ": unknown config key \"" + key + "\"");
    }
}

}  // namespace

json RunConfig::to_json() const {
    return json{
        {"schema_version", 1},
        {"seed", seed},
        {"threads", threads},
        {"tiles", {{"size_px", tile_size_px}}},
        {"sampling",
         {{"spacing_m", sampling_spacing_m}, {"min_separation_m", min_separation_m}}},
        {"cloud",
         {{"brightness_threshold", cloud.brightness_threshold},
          {"max_bright_fraction", cloud.max_bright_fraction}}},
        {"dilation",
         {{"major_px", dilation.radius_px[0]},
          {"minor_px", dilation.radius_px[1]},
          {"two_track_px", dilation.radius_px[2]}}},
        {"dataset", {{"per_class", per_class}, {"test_ratio", test_ratio}}},
        {"train",
         {{"lr", train.lr},
          {"beta1", train.beta1},
          {"beta2", train.beta2},
          {"epsilon", train.epsilon},
          {"batch_size", train.batch_size},
          {"epochs", train.epochs},
          {"input_size_px", train.input_size},
          {"arch", train_arch}}},
        {"synth", {{"a", synth_to_json(synth_a)}, {"b", synth_to_json(synth_b)}}},
    };
}

std::string RunConfig::digest() const { return sha256_hex(to_json().dump()); }

nn::ModelSpec RunConfig::model_spec() const {
    if (train_arch.is_string())
        return nn::make_named_spec(train_arch.get<std::string>(), train.input_size);
    if (train_arch.is_object()) return nn::spec_from_json(train_arch);
    fail(Errc::schema_error, "train.arch must be a model name or an inline spec object");
}

RunConfig apply_config_json(RunConfig base, const json& j, const std::string& origin) {
    if (!j.is_object()) fail(Errc::schema_error, origin + ": config must be a JSON object");
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "schema_version") {
                if (value.get<int>() != 1)
                    fail(Errc::version_mismatch, origin + ": config schema_version " +
                                                     value.dump() + ", this build reads 1");
            } else if (key == "seed") {
                base.seed = value.get<std::uint64_t>();
            } else if (key == "threads") {
                base.threads = value.get<int>();
            } else if (key == "tiles") {
                for (const auto& [k2, v2] : value.items()) {
                    if (k2 == "size_px") base.tile_size_px = v2.get<int>();
                    else fail(Errc::schema_error, origin + ": unknown config key \"tiles." + k2 + "\"");
                }
            } else if (key == "sampling") {
                for (const auto& [k2, v2] : value.items()) {
                    if (k2 == "spacing_m") base.sampling_spacing_m = v2.get<double>();
                    else if (k2 == "min_separation_m") base.min_separation_m = v2.get<double>();
                    else fail(Errc::schema_error, origin + ": unknown config key \"sampling." + k2 + "\"");
                }
            } else if (key == "cloud") {
                for (const auto& [k2, v2] : value.items()) {
                    if (k2 == "brightness_threshold") base.cloud.brightness_threshold = v2.get<int>();
                    else if (k2 == "max_bright_fraction") base.cloud.max_bright_fraction = v2.get<double>();
                    else fail(Errc::schema_error, origin + ": unknown config key \"cloud." + k2 + "\"");
                }
            } else if (key == "dilation") {
                for (const auto& [k2, v2] : value.items()) {
                    if (k2 == "major_px") base.dilation.radius_px[0] = v2.get<int>();
                    else if (k2 == "minor_px") base.dilation.radius_px[1] = v2.get<int>();
                    else if (k2 == "two_track_px") base.dilation.radius_px[2] = v2.get<int>();
                    else fail(Errc::schema_error, origin + ": unknown config key \"dilation." + k2 + "\"");
                }
            } else if (key == "dataset") {
                for (const auto& [k2, v2] : value.items()) {
                    if (k2 == "per_class") base.per_class = v2.get<std::size_t>();
                    else if (k2 == "test_ratio") base.test_ratio = v2.get<double>();
                    else fail(Errc::schema_error, origin + ": unknown config key \"dataset." + k2 + "\"");
                }
            } else if (key == "train") {
                for (const auto& [k2, v2] : value.items()) {
                    if (k2 == "lr") base.train.lr = v2.get<double>();
                    else if (k2 == "beta1") base.train.beta1 = v2.get<double>();
                    else if (k2 == "beta2") base.train.beta2 = v2.get<double>();
                    else if (k2 == "epsilon") base.train.epsilon = v2.get<double>();
                    else if (k2 == "batch_size") base.train.batch_size = v2.get<int>();
                    else if (k2 == "epochs") base.train.epochs = v2.get<int>();
                    else if (k2 == "input_size_px") base.train.input_size = v2.get<int>();
                    else if (k2 == "arch") base.train_arch = v2;
                    else fail(Errc::schema_error, origin + ": unknown config key \"train." + k2 + "\"");
                }
            } else if (key == "synth") {
                for (const auto& [k2, v2] : value.items()) {
                    if (k2 == "a") synth_from_json(base.synth_a, v2, origin);
                    else if (k2 == "b") synth_from_json(base.synth_b, v2, origin);
                    else fail(Errc::schema_error, origin + ": unknown config key \"synth." + k2 + "\"");
                }
            } else {
                fail(Errc::schema_error, origin + ": unknown config key \"" + key + "\"");
            }
        }
    } catch (const json::exception& e) {
        fail(Errc::schema_error, origin + ": " + e.what());
    }

    // resolve + validate
    base.train.seed = base.seed;
    if (base.threads < 1) fail(Errc::schema_error, origin + ": threads must be >= 1");
    if (base.tile_size_px < 1) fail(Errc::schema_error, origin + ": tile size must be >= 1");
    if (!(base.train.lr > 0.0)) fail(Errc::schema_error, origin + ": lr must be > 0");
    if (base.train.beta1 < 0.0 || base.train.beta1 >= 1.0 || base.train.beta2 < 0.0 ||
        base.train.beta2 >= 1.0)
        fail(Errc::schema_error, origin + ": betas must be in [0, 1)");
    (void)base.model_spec();  // arch sanity
    return base;
}

RunConfig load_config(const std::optional<std::string>& path) {
    RunConfig cfg;
    cfg.train.seed = cfg.seed;
    cfg.synth_b.country_style = "teal";
    cfg.synth_b.country_code = "SB";
    cfg.synth_b.origin = GeoPoint{-71.9, -13.5};
    if (!path) return cfg;
    json j;
    try {
        j = json::parse(read_text_file(*path));
    } catch (const json::parse_error& e) {
        fail(Errc::schema_error, *path + ": " + e.what());
    }
    return apply_config_json(cfg, j, *path);
}

RunConfig make_synth_defaults() {
    RunConfig cfg = load_config(std::nullopt);
    cfg.tile_size_px = 128;
    cfg.sampling_spacing_m = 45.0;
    cfg.min_separation_m = 0.0;
    cfg.per_class = 222;  // 200 train + 22 test per class after the 9:1 split
    cfg.dilation.radius_px = {16, 16, 16};  // matches the painted band
    cfg.train.input_size = 128;
    cfg.train_arch = "synth_small";
    cfg.train.epochs = 20;
    return cfg;
}

}  // namespace roadscope
