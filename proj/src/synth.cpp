#include "roadscope/synth.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "roadscope/error.hpp"
#include "roadscope/maskgen.hpp"
#include "roadscope/rng.hpp"

namespace roadscope {

using nlohmann::json;

const char* signal_location_name(SignalLocation s) {
    switch (s) {
        case SignalLocation::road: return "road";
        case SignalLocation::context: return "context";
        case SignalLocation::both: return "both";
    }
    return "?";
}

SignalLocation signal_location_from_name(const std::string& name) {
    if (name == "road") return SignalLocation::road;
    if (name == "context") return SignalLocation::context;
    if (name == "both") return SignalLocation::both;
    fail(Errc::schema_error, "unknown signal location \"" + name + "\"");
}

namespace {

struct StyleDef {
    double tint[3];
    double dir[3];  // unit chroma direction (orthogonal to luminance)
};

StyleDef style_def(const std::string& id) {
    if (id == "ochre") return StyleDef{{6, 0, -6}, {0.70710678, 0.0, -0.70710678}};
    if (id == "teal") return StyleDef{{-6, 0, 6}, {0.40824829, -0.81649658, 0.40824829}};
    fail(Errc::schema_error, "unknown country style \"" + id + "\"");
}

constexpr double kContextBase[3] = {118, 120, 116};
constexpr double kRoadBase[3] = {105, 102, 98};
constexpr double kLumDir[3] = {0.57735027, 0.57735027, 0.57735027};

// class-coded orientation: major horizontal bands, minor vertical,
// two-track diagonal
int stripe_sign(int x, int y, int cls, double period) {
    double phase = 0.0;
    switch (cls) {
        case 0: phase = y / period; break;
        case 1: phase = x / period; break;
        default: phase = (x + y) / period; break;
    }
    return static_cast<long long>(std::floor(phase)) % 2 == 0 ? 1 : -1;
}

// fixed bend pattern shared by every road so mask shape carries no class
// information
constexpr int kBendOffsets[5] = {0, 10, -8, 6, 0};

const char* highway_tag_for(int cls) {
    switch (cls) {
        case 0: return "primary";
        case 1: return "residential";
        default: return "track";
    }
}

struct Layout {
    int margin_x = 0;
    int margin_y = 0;
    int pitch = 0;
    int rows = 0;
    int height = 0;
};

Layout compute_layout(const SynthConfig& cfg) {
    Layout l;
    l.rows = 3 * cfg.n_roads_per_class;
    l.margin_x = cfg.tile_size / 2 + cfg.band_radius_px + 8;
    l.pitch = cfg.tile_size + 2 * cfg.band_radius_px + 10;
    l.margin_y = l.pitch / 2 + 12;
    l.height = 2 * l.margin_y + (l.rows - 1) * l.pitch;
    if (cfg.n_roads_per_class < 1) fail(Errc::config_infeasible, "need at least one road per class");
    if (cfg.scene_width < 2 * l.margin_x + cfg.tile_size)
        fail(Errc::config_infeasible,
             "scene width " + std::to_string(cfg.scene_width) + " cannot hold a road plus a tile");
    if (cfg.scene_height != 0 && cfg.scene_height < l.height)
        fail(Errc::config_infeasible, "scene height " + std::to_string(cfg.scene_height) +
                                          " < required " + std::to_string(l.height));
    if (cfg.scene_height > l.height) l.height = cfg.scene_height;
    return l;
}

}  // namespace

SynthOutput generate_scene(const SynthConfig& cfg) {
    if (cfg.band_radius_px < 1) fail(Errc::config_infeasible, "band radius must be >= 1");
    if (!(cfg.gsd > 0.0)) fail(Errc::schema_error, "gsd must be > 0");
    const StyleDef style = style_def(cfg.country_style);
    const Layout layout = compute_layout(cfg);
    const int W = cfg.scene_width;
    const int H = layout.height;

    SynthOutput out;
    out.scene.id = cfg.country_code + "_scene";
    out.scene.width = W;
    out.scene.height = H;
    out.scene.transform = GeoTransform{0.0, 0.0, cfg.gsd};
    out.scene.frame = make_local_frame(cfg.origin);
    out.scene.country = cfg.country_code;
    out.scene.pixels.assign(static_cast<std::size_t>(W) * H * 3, 0);
    out.scene_road_mask = GridBits{W, H, std::vector<std::uint8_t>(
                                             static_cast<std::size_t>(W) * H, 0)};

    const Rng root(cfg.seed);

    // --- road polylines in pixel space, one per grid row
    struct SynthRoad {
        int cls;
        std::vector<std::pair<int, int>> verts;  // (x, y)
    };
    std::vector<SynthRoad> roads;
    for (int r = 0; r < layout.rows; ++r) {
        SynthRoad road;
        road.cls = r % 3;
        const int y_base = layout.margin_y + r * layout.pitch;
        const int x0 = layout.margin_x;
        const int x1 = W - 1 - layout.margin_x;
        for (int v = 0; v < 5; ++v) {
            const int x = x0 + (x1 - x0) * v / 4;
            road.verts.emplace_back(x, y_base + kBendOffsets[v]);
        }
        roads.push_back(std::move(road));
    }

    // --- stamp road bands into the scene mask
    std::vector<std::pair<int, int>> disk;
    const int r2 = cfg.band_radius_px * cfg.band_radius_px;
    for (int dy = -cfg.band_radius_px; dy <= cfg.band_radius_px; ++dy)
        for (int dx = -cfg.band_radius_px; dx <= cfg.band_radius_px; ++dx)
            if (dx * dx + dy * dy <= r2) disk.emplace_back(dx, dy);

    for (const auto& road : roads) {
        for (std::size_t i = 1; i < road.verts.size(); ++i) {
            const auto chain =
                bresenham(PixelCoord{road.verts[i - 1].first, road.verts[i - 1].second},
                          PixelCoord{road.verts[i].first, road.verts[i].second});
            for (const auto& px : chain) {
                for (const auto& [dx, dy] : disk) {
                    const int nx = px.col + dx;
                    const int ny = px.row + dy;
                    if (nx < 0 || ny < 0 || nx >= W || ny >= H) continue;
                    out.scene_road_mask.bits[static_cast<std::size_t>(ny) * W + nx] = 1;
                }
            }
        }
    }

    // --- paint
    const bool context_signal =
        cfg.signal == SignalLocation::context || cfg.signal == SignalLocation::both;
    const bool road_signal =
        cfg.signal == SignalLocation::road || cfg.signal == SignalLocation::both;

    auto cell_of_row = [&](int y) -> int {
        const int shifted = y - layout.margin_y + layout.pitch / 2;
        if (shifted < 0) return -1;
        const int cell = shifted / layout.pitch;
        return cell < layout.rows ? cell : -1;
    };

    for (int y = 0; y < H; ++y) {
        const int cell = cell_of_row(y);
        const int cls = cell >= 0 ? cell % 3 : -1;
        for (int x = 0; x < W; ++x) {
            double px[3];
            if (out.scene_road_mask.bits[static_cast<std::size_t>(y) * W + x]) {
                const int s = road_signal && cls >= 0
                                  ? stripe_sign(x, y, cls, cfg.stripe_period_px)
                                  : 0;
                for (int ch = 0; ch < 3; ++ch)
                    px[ch] = kRoadBase[ch] + s * cfg.road_stripe_amp * kLumDir[ch];
            } else {
                const int s = context_signal && cls >= 0
                                  ? stripe_sign(x, y, cls, cfg.stripe_period_px)
                                  : 0;
                for (int ch = 0; ch < 3; ++ch)
                    px[ch] = kContextBase[ch] + style.tint[ch] + s * cfg.stripe_amp * style.dir[ch];
            }
            const std::size_t idx = (static_cast<std::size_t>(y) * W + x) * 3;
            for (int ch = 0; ch < 3; ++ch)
                out.scene.pixels[idx + ch] =
                    static_cast<std::uint8_t>(std::clamp(std::lround(px[ch]), 0l, 255l));
        }
    }

    // --- pixel noise
    if (cfg.noise_sigma > 0.0) {
        Rng noise = root.fork("noise");
        for (auto& v : out.scene.pixels) {
            const double n = noise.next_normal() * cfg.noise_sigma;
            v = static_cast<std::uint8_t>(std::clamp(std::lround(v + n), 0l, 255l));
        }
    }

    // --- GeoJSON roads
    json features = json::array();
    for (std::size_t r = 0; r < roads.size(); ++r) {
        json coords = json::array();
        for (const auto& [x, y] : roads[r].verts) {
            const MeterPoint m = pixel_to_geo(out.scene.transform, PixelCoord{x, y});
            const GeoPoint g = unproject(out.scene.frame, m);
            coords.push_back(json::array({g.lon, g.lat}));
        }
        features.push_back({{"type", "Feature"},
                            {"id", "road_" + cfg.country_code + "_" + std::to_string(r)},
                            {"properties", {{"highway", highway_tag_for(roads[r].cls)}}},
                            {"geometry", {{"type", "LineString"}, {"coordinates", coords}}}});
    }
    out.roads_geojson =
        json{{"type", "FeatureCollection"}, {"features", features}}.dump(2) + "\n";
    return out;
}

std::pair<SynthOutput, SynthOutput> generate_country_pair(const SynthConfig& cfg_a,
                                                          const SynthConfig& cfg_b) {
    if (cfg_a.country_style == cfg_b.country_style)
        fail(Errc::config_infeasible, "country pair needs differing styles");
    if (cfg_a.signal != cfg_b.signal || cfg_a.stripe_period_px != cfg_b.stripe_period_px ||
        cfg_a.stripe_amp != cfg_b.stripe_amp || cfg_a.road_stripe_amp != cfg_b.road_stripe_amp ||
        cfg_a.band_radius_px != cfg_b.band_radius_px)
        fail(Errc::config_infeasible, "country pair must share signal rules");
    return {generate_scene(cfg_a), generate_scene(cfg_b)};
}

}  // namespace roadscope
