#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "roadscope/raster_store.hpp"

namespace roadscope {

enum class SignalLocation { road, context, both };

const char* signal_location_name(SignalLocation s);
SignalLocation signal_location_from_name(const std::string& name);

// Synthetic scene with a controllable ground-truth signal location. The
// class-identifying signal is a low-contrast oriented stripe texture
// (horizontal / vertical / diagonal for the three classes); country style
// picks the color direction the context stripes ride on, so context
// distributions can differ across countries while the orientation code
// stays identical.
struct SynthConfig {
    SignalLocation signal = SignalLocation::context;
    std::string country_style = "ochre";  // "ochre" | "teal"
    std::string country_code = "SA";
    int n_roads_per_class = 12;
    int scene_width = 4000;
    int scene_height = 0;  // 0 = derived from the road grid
    double noise_sigma = 5.0;
    std::uint64_t seed = 42;
    GeoPoint origin{36.8, -1.3};
    double gsd = 0.3;

    // shared signal rules (must match between paired countries)
    int tile_size = 128;       // sizing for layout margins
    int band_radius_px = 16;   // painted road half-width, all classes
    double stripe_period_px = 8.0;
    double stripe_amp = 16.0;
    double road_stripe_amp = 18.0;
};

struct GridBits {
    int width = 0, height = 0;
    std::vector<std::uint8_t> bits;  // 0/1, row-major
};

struct SynthOutput {
    Scene scene;
    std::string roads_geojson;  // FeatureCollection, loads through osm_ingest
    GridBits scene_road_mask;   // painted road pixels, full scene
};

SynthOutput generate_scene(const SynthConfig& cfg);

// Two corpora with identical signal rules and differing styles.
std::pair<SynthOutput, SynthOutput> generate_country_pair(const SynthConfig& cfg_a,
                                                          const SynthConfig& cfg_b);

}  // namespace roadscope
