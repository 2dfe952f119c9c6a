#include "roadscope/nn/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

#include "roadscope/error.hpp"
#include "roadscope/fsutil.hpp"
#include "roadscope/hash.hpp"
#include "roadscope/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "model serialization assumes a little-endian host");

namespace roadscope::nn {

using nlohmann::json;

std::string shape_str(const std::vector<int>& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

void check_finite(const Tensor& t, const std::string& what) {
    for (float v : t.data)
        if (!std::isfinite(v)) fail(Errc::non_finite, "non-finite value in " + what);
}

const char* layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::conv: return "conv";
        case LayerKind::ds_conv: return "ds_conv";
        case LayerKind::relu: return "relu";
        case LayerKind::max_pool: return "max_pool";
        case LayerKind::global_avg_pool: return "global_avg_pool";
        case LayerKind::dense: return "dense";
        case LayerKind::softmax: return "softmax";
    }
    return "?";
}

namespace {

LayerKind layer_kind_from_name(const std::string& s) {
    for (LayerKind k : {LayerKind::conv, LayerKind::ds_conv, LayerKind::relu, LayerKind::max_pool,
                        LayerKind::global_avg_pool, LayerKind::dense, LayerKind::softmax})
        if (s == layer_kind_name(k)) return k;
    fail(Errc::schema_error, "unknown layer type \"" + s + "\"");
}

// Shape state threaded through the layer list.
struct ShapeChain {
    bool spatial;
    int c = 0, h = 0, w = 0;  // when spatial
    int dim = 0;              // when flat
};

int conv_out_extent(int in, int k, int s, int p, std::size_t layer_idx) {
    const int span = in + 2 * p - k;
    if (span < 0 || s < 1)
        fail(Errc::shape_mismatch, "layer " + std::to_string(layer_idx) + ": kernel " +
                                       std::to_string(k) + " exceeds padded input " +
                                       std::to_string(in + 2 * p));
    return span / s + 1;
}

ShapeChain step_shape(const ShapeChain& in, const LayerCfg& cfg, std::size_t idx) {
    ShapeChain out = in;
    auto need_spatial = [&] {
        if (!in.spatial)
            fail(Errc::shape_mismatch, "layer " + std::to_string(idx) + " (" +
                                           layer_kind_name(cfg.kind) + ") needs a spatial input");
    };
    switch (cfg.kind) {
        case LayerKind::conv:
        case LayerKind::ds_conv:
            need_spatial();
            if (cfg.k < 1 || cfg.out < 1 || cfg.p < 0)
                fail(Errc::shape_mismatch, "layer " + std::to_string(idx) + ": bad conv config");
            if (cfg.kind == LayerKind::ds_conv && cfg.k > 1) {
                // weight-count advantage of the factorized form, required
                // for k > 1: k^2*in + in*out < k^2*in*out
                const long lhs = static_cast<long>(cfg.k) * cfg.k * in.c +
                                 static_cast<long>(in.c) * cfg.out;
                const long rhs = static_cast<long>(cfg.k) * cfg.k * in.c * cfg.out;
                if (lhs >= rhs)
                    fail(Errc::shape_mismatch,
                         "layer " + std::to_string(idx) +
                             ": depthwise-separable form is not smaller than a dense conv here");
            }
            out.h = conv_out_extent(in.h, cfg.k, cfg.s, cfg.p, idx);
            out.w = conv_out_extent(in.w, cfg.k, cfg.s, cfg.p, idx);
            out.c = cfg.out;
            break;
        case LayerKind::relu:
            break;
        case LayerKind::max_pool:
            need_spatial();
            if (cfg.p != 0) fail(Errc::shape_mismatch, "max_pool does not support padding");
            out.h = conv_out_extent(in.h, cfg.k, cfg.s, 0, idx);
            out.w = conv_out_extent(in.w, cfg.k, cfg.s, 0, idx);
            break;
        case LayerKind::global_avg_pool:
            need_spatial();
            out.spatial = false;
            out.dim = in.c;
            break;
        case LayerKind::dense:
            if (in.spatial)
                fail(Errc::shape_mismatch,
                     "layer " + std::to_string(idx) + ": dense needs a flat input (add a pool)");
            if (cfg.out < 1) fail(Errc::shape_mismatch, "dense out must be >= 1");
            out.dim = cfg.out;
            break;
        case LayerKind::softmax:
            if (in.spatial) fail(Errc::shape_mismatch, "softmax needs a flat input");
            break;
    }
    return out;
}

ShapeChain initial_chain(const InputShape& input) {
    ShapeChain sc;
    sc.spatial = input.spatial;
    if (input.spatial) {
        if (input.c < 1 || input.h < 1 || input.w < 1)
            fail(Errc::shape_mismatch, "bad input shape");
        sc.c = input.c;
        sc.h = input.h;
        sc.w = input.w;
    } else {
        if (input.dim < 1) fail(Errc::shape_mismatch, "bad input dim");
        sc.dim = input.dim;
    }
    return sc;
}

// Parameter tensor shapes per layer, in serialization order.
std::vector<std::vector<std::vector<int>>> param_shapes(const ModelSpec& spec) {
    std::vector<std::vector<std::vector<int>>> shapes(spec.layers.size());
    ShapeChain sc = initial_chain(spec.input);
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerCfg& cfg = spec.layers[i];
        switch (cfg.kind) {
            case LayerKind::conv:
                shapes[i] = {{cfg.out, sc.c, cfg.k, cfg.k}, {cfg.out}};
                break;
            case LayerKind::ds_conv:
                shapes[i] = {{sc.c, cfg.k, cfg.k}, {cfg.out, sc.c}, {cfg.out}};
                break;
            case LayerKind::dense:
                shapes[i] = {{cfg.out, sc.dim}, {cfg.out}};
                break;
            default:
                break;
        }
        sc = step_shape(sc, cfg, i);
    }
    return shapes;
}

}  // namespace

void validate_spec(const ModelSpec& spec) {
    if (spec.layers.size() < 2) fail(Errc::shape_mismatch, "model needs at least dense + softmax");
    ShapeChain sc = initial_chain(spec.input);
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        if (spec.layers[i].kind == LayerKind::softmax && i + 1 != spec.layers.size())
            fail(Errc::shape_mismatch, "softmax must be the final layer");
        sc = step_shape(sc, spec.layers[i], i);
    }
    const std::size_t n = spec.layers.size();
    if (spec.layers[n - 1].kind != LayerKind::softmax)
        fail(Errc::shape_mismatch, "model must end with softmax");
    if (spec.layers[n - 2].kind != LayerKind::dense || spec.layers[n - 2].out != 3)
        fail(Errc::shape_mismatch, "model must end with Dense(3) -> Softmax");
    if (spec.input.spatial) {
        // CAM needs the classifier to sit directly on pooled feature maps
        if (n < 3 || spec.layers[n - 3].kind != LayerKind::global_avg_pool)
            fail(Errc::architecture_unsupported,
                 "spatial models must end GlobalAvgPool -> Dense(3) -> Softmax");
    }
}

json spec_to_json(const ModelSpec& spec) {
    json input;
    if (spec.input.spatial)
        input = {{"kind", "image"}, {"c", spec.input.c}, {"h", spec.input.h}, {"w", spec.input.w}};
    else
        input = {{"kind", "vector"}, {"dim", spec.input.dim}};
    json layers = json::array();
    for (const auto& l : spec.layers) {
        json j = {{"type", layer_kind_name(l.kind)}};
        switch (l.kind) {
            case LayerKind::conv:
            case LayerKind::ds_conv:
                j["k"] = l.k;
                j["s"] = l.s;
                j["p"] = l.p;
                j["out"] = l.out;
                break;
            case LayerKind::max_pool:
                j["k"] = l.k;
                j["s"] = l.s;
                break;
            case LayerKind::dense:
                j["out"] = l.out;
                break;
            default:
                break;
        }
        layers.push_back(j);
    }
    return json{{"input", input}, {"layers", layers}};
}

ModelSpec spec_from_json(const json& j) {
    try {
        ModelSpec spec;
        const auto& input = j.at("input");
        const std::string kind = input.at("kind").get<std::string>();
        if (kind == "image") {
            spec.input.spatial = true;
            spec.input.c = input.at("c").get<int>();
            spec.input.h = input.at("h").get<int>();
            spec.input.w = input.at("w").get<int>();
        } else if (kind == "vector") {
            spec.input.spatial = false;
            spec.input.dim = input.at("dim").get<int>();
        } else {
            fail(Errc::schema_error, "unknown input kind \"" + kind + "\"");
        }
        for (const auto& l : j.at("layers")) {
            LayerCfg cfg;
            cfg.kind = layer_kind_from_name(l.at("type").get<std::string>());
            cfg.k = l.value("k", 0);
            cfg.s = l.value("s", 1);
            cfg.p = l.value("p", 0);
            cfg.out = l.value("out", 0);
            spec.layers.push_back(cfg);
        }
        validate_spec(spec);
        return spec;
    } catch (const json::exception& e) {
        fail(Errc::schema_error, std::string("bad model spec: ") + e.what());
    }
}

ModelSpec make_named_spec(const std::string& name, int input_size) {
    ModelSpec spec;
    spec.input = InputShape{true, 3, input_size, input_size, 0};
    auto conv = [](int k, int s, int p, int out) {
        return LayerCfg{LayerKind::conv, k, s, p, out};
    };
    auto ds = [](int k, int s, int p, int out) {
        return LayerCfg{LayerKind::ds_conv, k, s, p, out};
    };
    const LayerCfg relu{LayerKind::relu, 0, 1, 0, 0};
    const LayerCfg gap{LayerKind::global_avg_pool, 0, 1, 0, 0};
    const LayerCfg dense3{LayerKind::dense, 0, 1, 0, 3};
    const LayerCfg softmax{LayerKind::softmax, 0, 1, 0, 0};

    if (name == "tiny_road_net") {
        spec.layers = {conv(3, 2, 1, 16), relu, ds(3, 2, 1, 32),  relu,
                       ds(3, 2, 1, 64),   relu, ds(3, 2, 1, 128), relu,
                       gap,               dense3, softmax};
    } else if (name == "synth_small") {
        spec.layers = {conv(3, 2, 1, 12), relu, ds(3, 2, 1, 24), relu,
                       ds(3, 2, 1, 48),   relu, gap, dense3, softmax};
    } else {
        fail(Errc::schema_error, "unknown model name \"" + name + "\"");
    }
    validate_spec(spec);
    return spec;
}

std::size_t param_count(const ModelSpec& spec) {
    std::size_t total = 0;
    for (const auto& layer : param_shapes(spec))
        for (const auto& shape : layer) total += Tensor::numel_of(shape);
    return total;
}

Model init_model(const ModelSpec& spec, std::uint64_t seed) {
    validate_spec(spec);
    Model model;
    model.spec = spec;
    model.seed = seed;
    model.params.resize(spec.layers.size());

    const auto shapes = param_shapes(spec);
    const Rng root(seed);
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        if (shapes[i].empty()) continue;
        const LayerCfg& cfg = spec.layers[i];
        for (std::size_t pi = 0; pi < shapes[i].size(); ++pi) {
            Tensor t(shapes[i][pi]);
            const bool is_bias = shapes[i][pi].size() == 1;
            if (!is_bias) {
                double fan_in = 1.0;
                if (cfg.kind == LayerKind::conv) {
                    fan_in = static_cast<double>(shapes[i][pi][1]) * cfg.k * cfg.k;
                } else if (cfg.kind == LayerKind::ds_conv) {
                    fan_in = pi == 0 ? static_cast<double>(cfg.k) * cfg.k
                                     : static_cast<double>(shapes[i][pi][1]);
                } else {  // dense
                    fan_in = static_cast<double>(shapes[i][pi][1]);
                }
                const double limit = std::sqrt(6.0 / fan_in);
                Rng r = root.fork("init/layer" + std::to_string(i) + "/p" + std::to_string(pi));
                for (auto& v : t.data)
                    v = static_cast<float>((r.next_double() * 2.0 - 1.0) * limit);
            }
            model.params[i].push_back(std::move(t));
        }
    }
    return model;
}

// ---------------------------------------------------------------------------
// forward / backward kernels

namespace {

void conv_forward(const Tensor& in, const Tensor& w, const Tensor& b, int K, int S, int P,
                  Tensor& out) {
    const int N = in.shape[0], C = in.shape[1], H = in.shape[2], W = in.shape[3];
    const int O = w.shape[0];
    const int Ho = out.shape[2], Wo = out.shape[3];
    for (int n = 0; n < N; ++n) {
        for (int oc = 0; oc < O; ++oc) {
            const float* woc = w.data.data() + static_cast<std::size_t>(oc) * C * K * K;
            const float bias = b.data[oc];
            float* outp = out.data.data() + (static_cast<std::size_t>(n) * O + oc) * Ho * Wo;
            for (int oy = 0; oy < Ho; ++oy) {
                const int iy0 = oy * S - P;
                const int kylo = std::max(0, -iy0), kyhi = std::min(K, H - iy0);
                for (int ox = 0; ox < Wo; ++ox) {
                    const int ix0 = ox * S - P;
                    const int kxlo = std::max(0, -ix0), kxhi = std::min(K, W - ix0);
                    float acc = bias;
                    for (int ic = 0; ic < C; ++ic) {
                        const float* inp =
                            in.data.data() + (static_cast<std::size_t>(n) * C + ic) * H * W;
                        const float* wic = woc + static_cast<std::size_t>(ic) * K * K;
                        for (int ky = kylo; ky < kyhi; ++ky) {
                            const float* inrow = inp + static_cast<std::size_t>(iy0 + ky) * W + ix0;
                            const float* wrow = wic + static_cast<std::size_t>(ky) * K;
                            for (int kx = kxlo; kx < kxhi; ++kx) acc += inrow[kx] * wrow[kx];
                        }
                    }
                    outp[static_cast<std::size_t>(oy) * Wo + ox] = acc;
                }
            }
        }
    }
}

void conv_backward(const Tensor& in, const Tensor& w, const Tensor& dout, int K, int S, int P,
                   Tensor& dw, Tensor& db, Tensor& din) {
    const int N = in.shape[0], C = in.shape[1], H = in.shape[2], W = in.shape[3];
    const int O = w.shape[0];
    const int Ho = dout.shape[2], Wo = dout.shape[3];
    for (int n = 0; n < N; ++n) {
        for (int oc = 0; oc < O; ++oc) {
            const float* doutp = dout.data.data() + (static_cast<std::size_t>(n) * O + oc) * Ho * Wo;
            const float* woc = w.data.data() + static_cast<std::size_t>(oc) * C * K * K;
            float* dwoc = dw.data.data() + static_cast<std::size_t>(oc) * C * K * K;
            double db_acc = 0.0;
            for (int oy = 0; oy < Ho; ++oy) {
                const int iy0 = oy * S - P;
                const int kylo = std::max(0, -iy0), kyhi = std::min(K, H - iy0);
                for (int ox = 0; ox < Wo; ++ox) {
                    const float g = doutp[static_cast<std::size_t>(oy) * Wo + ox];
                    db_acc += g;
                    if (g == 0.0f) continue;
                    const int ix0 = ox * S - P;
                    const int kxlo = std::max(0, -ix0), kxhi = std::min(K, W - ix0);
                    for (int ic = 0; ic < C; ++ic) {
                        const float* inp =
                            in.data.data() + (static_cast<std::size_t>(n) * C + ic) * H * W;
                        float* dinp =
                            din.data.data() + (static_cast<std::size_t>(n) * C + ic) * H * W;
                        const float* wic = woc + static_cast<std::size_t>(ic) * K * K;
                        float* dwic = dwoc + static_cast<std::size_t>(ic) * K * K;
                        for (int ky = kylo; ky < kyhi; ++ky) {
                            const std::size_t irow = static_cast<std::size_t>(iy0 + ky) * W + ix0;
                            for (int kx = kxlo; kx < kxhi; ++kx) {
                                dwic[static_cast<std::size_t>(ky) * K + kx] += g * inp[irow + kx];
                                dinp[irow + kx] += g * wic[static_cast<std::size_t>(ky) * K + kx];
                            }
                        }
                    }
                }
            }
            db.data[oc] += static_cast<float>(db_acc);
        }
    }
}

// depthwise conv, channel multiplier 1, no bias
void depthwise_forward(const Tensor& in, const Tensor& dw_w, int K, int S, int P, Tensor& mid) {
    const int N = in.shape[0], C = in.shape[1], H = in.shape[2], W = in.shape[3];
    const int Ho = mid.shape[2], Wo = mid.shape[3];
    for (int n = 0; n < N; ++n) {
        for (int c = 0; c < C; ++c) {
            const float* inp = in.data.data() + (static_cast<std::size_t>(n) * C + c) * H * W;
            const float* wc = dw_w.data.data() + static_cast<std::size_t>(c) * K * K;
            float* outp = mid.data.data() + (static_cast<std::size_t>(n) * C + c) * Ho * Wo;
            for (int oy = 0; oy < Ho; ++oy) {
                const int iy0 = oy * S - P;
                const int kylo = std::max(0, -iy0), kyhi = std::min(K, H - iy0);
                for (int ox = 0; ox < Wo; ++ox) {
                    const int ix0 = ox * S - P;
                    const int kxlo = std::max(0, -ix0), kxhi = std::min(K, W - ix0);
                    float acc = 0.0f;
                    for (int ky = kylo; ky < kyhi; ++ky) {
                        const float* inrow = inp + static_cast<std::size_t>(iy0 + ky) * W + ix0;
                        const float* wrow = wc + static_cast<std::size_t>(ky) * K;
                        for (int kx = kxlo; kx < kxhi; ++kx) acc += inrow[kx] * wrow[kx];
                    }
                    outp[static_cast<std::size_t>(oy) * Wo + ox] = acc;
                }
            }
        }
    }
}

void depthwise_backward(const Tensor& in, const Tensor& dw_w, const Tensor& dmid, int K, int S,
                        int P, Tensor& ddw, Tensor& din) {
    const int N = in.shape[0], C = in.shape[1], H = in.shape[2], W = in.shape[3];
    const int Ho = dmid.shape[2], Wo = dmid.shape[3];
    for (int n = 0; n < N; ++n) {
        for (int c = 0; c < C; ++c) {
            const float* inp = in.data.data() + (static_cast<std::size_t>(n) * C + c) * H * W;
            float* dinp = din.data.data() + (static_cast<std::size_t>(n) * C + c) * H * W;
            const float* wc = dw_w.data.data() + static_cast<std::size_t>(c) * K * K;
            float* dwc = ddw.data.data() + static_cast<std::size_t>(c) * K * K;
            const float* dmidp = dmid.data.data() + (static_cast<std::size_t>(n) * C + c) * Ho * Wo;
            for (int oy = 0; oy < Ho; ++oy) {
                const int iy0 = oy * S - P;
                const int kylo = std::max(0, -iy0), kyhi = std::min(K, H - iy0);
                for (int ox = 0; ox < Wo; ++ox) {
                    const float g = dmidp[static_cast<std::size_t>(oy) * Wo + ox];
                    if (g == 0.0f) continue;
                    const int ix0 = ox * S - P;
                    const int kxlo = std::max(0, -ix0), kxhi = std::min(K, W - ix0);
                    for (int ky = kylo; ky < kyhi; ++ky) {
                        const std::size_t irow = static_cast<std::size_t>(iy0 + ky) * W + ix0;
                        for (int kx = kxlo; kx < kxhi; ++kx) {
                            dwc[static_cast<std::size_t>(ky) * K + kx] += g * inp[irow + kx];
                            dinp[irow + kx] += g * wc[static_cast<std::size_t>(ky) * K + kx];
                        }
                    }
                }
            }
        }
    }
}

void pointwise_forward(const Tensor& mid, const Tensor& pw, const Tensor& b, Tensor& out) {
    const int N = mid.shape[0], C = mid.shape[1];
    const int HW = mid.shape[2] * mid.shape[3];
    const int O = pw.shape[0];
    for (int n = 0; n < N; ++n) {
        for (int oc = 0; oc < O; ++oc) {
            float* outp =
                out.data.data() + (static_cast<std::size_t>(n) * O + oc) * HW;
            const float bias = b.data[oc];
            for (int i = 0; i < HW; ++i) outp[i] = bias;
            for (int ic = 0; ic < C; ++ic) {
                const float wv = pw.data[static_cast<std::size_t>(oc) * C + ic];
                const float* midp =
                    mid.data.data() + (static_cast<std::size_t>(n) * C + ic) * HW;
                for (int i = 0; i < HW; ++i) outp[i] += wv * midp[i];
            }
        }
    }
}

void pointwise_backward(const Tensor& mid, const Tensor& pw, const Tensor& dout, Tensor& dpw,
                        Tensor& db, Tensor& dmid) {
    const int N = mid.shape[0], C = mid.shape[1];
    const int HW = mid.shape[2] * mid.shape[3];
    const int O = pw.shape[0];
    for (int n = 0; n < N; ++n) {
        for (int oc = 0; oc < O; ++oc) {
            const float* doutp = dout.data.data() + (static_cast<std::size_t>(n) * O + oc) * HW;
            double db_acc = 0.0;
            for (int i = 0; i < HW; ++i) db_acc += doutp[i];
            db.data[oc] += static_cast<float>(db_acc);
            for (int ic = 0; ic < C; ++ic) {
                const float* midp = mid.data.data() + (static_cast<std::size_t>(n) * C + ic) * HW;
                float* dmidp = dmid.data.data() + (static_cast<std::size_t>(n) * C + ic) * HW;
                const float wv = pw.data[static_cast<std::size_t>(oc) * C + ic];
                float dw_acc = 0.0f;
                for (int i = 0; i < HW; ++i) {
                    dw_acc += doutp[i] * midp[i];
                    dmidp[i] += wv * doutp[i];
                }
                dpw.data[static_cast<std::size_t>(oc) * C + ic] += dw_acc;
            }
        }
    }
}

void softmax_forward(const Tensor& in, Tensor& out) {
    const int N = in.shape[0], K = in.shape[1];
    for (int n = 0; n < N; ++n) {
        const float* row = in.data.data() + static_cast<std::size_t>(n) * K;
        float* orow = out.data.data() + static_cast<std::size_t>(n) * K;
        float m = row[0];
        for (int k = 1; k < K; ++k) m = std::max(m, row[k]);
        double sum = 0.0;
        for (int k = 0; k < K; ++k) {
            const double e = std::exp(static_cast<double>(row[k]) - m);
            orow[k] = static_cast<float>(e);
            sum += e;
        }
        for (int k = 0; k < K; ++k) orow[k] = static_cast<float>(orow[k] / sum);
    }
}

}  // namespace

Tensor forward(const Model& model, const Tensor& batch, Trace* trace) {
    const ModelSpec& spec = model.spec;
    const std::size_t L = spec.layers.size();
    if (trace) {
        trace->inputs.assign(L, Tensor{});
        trace->aux.assign(L, Tensor{});
        trace->argmax.assign(L, {});
    }

    const std::vector<int> expect = spec.input.with_batch(batch.shape.empty() ? 0 : batch.shape[0]);
    if (batch.shape != expect)
        fail(Errc::shape_mismatch,
             "batch shape " + shape_str(batch.shape) + " does not match model input " +
                 shape_str(expect));
    check_finite(batch, "model input");

    Tensor cur = batch;
    for (std::size_t i = 0; i < L; ++i) {
        const LayerCfg& cfg = spec.layers[i];
        if (trace) trace->inputs[i] = cur;
        Tensor next;
        switch (cfg.kind) {
            case LayerKind::conv: {
                const int N = cur.shape[0], H = cur.shape[2], W = cur.shape[3];
                const int Ho = (H + 2 * cfg.p - cfg.k) / cfg.s + 1;
                const int Wo = (W + 2 * cfg.p - cfg.k) / cfg.s + 1;
                next = Tensor({N, cfg.out, Ho, Wo});
                conv_forward(cur, model.params[i][0], model.params[i][1], cfg.k, cfg.s, cfg.p,
                             next);
                break;
            }
            case LayerKind::ds_conv: {
                const int N = cur.shape[0], C = cur.shape[1], H = cur.shape[2], W = cur.shape[3];
                const int Ho = (H + 2 * cfg.p - cfg.k) / cfg.s + 1;
                const int Wo = (W + 2 * cfg.p - cfg.k) / cfg.s + 1;
                Tensor mid({N, C, Ho, Wo});
                depthwise_forward(cur, model.params[i][0], cfg.k, cfg.s, cfg.p, mid);
                next = Tensor({N, cfg.out, Ho, Wo});
                pointwise_forward(mid, model.params[i][1], model.params[i][2], next);
                if (trace) trace->aux[i] = std::move(mid);
                break;
            }
            case LayerKind::relu: {
                next = cur;
                for (auto& v : next.data) v = v > 0.0f ? v : 0.0f;
                break;
            }
            case LayerKind::max_pool: {
                const int N = cur.shape[0], C = cur.shape[1], H = cur.shape[2], W = cur.shape[3];
                const int Ho = (H - cfg.k) / cfg.s + 1;
                const int Wo = (W - cfg.k) / cfg.s + 1;
                next = Tensor({N, C, Ho, Wo});
                std::vector<int> winners;
                if (trace) winners.resize(next.numel());
                std::size_t oi = 0;
                for (int n = 0; n < N; ++n) {
                    for (int c = 0; c < C; ++c) {
                        const float* inp =
                            cur.data.data() + (static_cast<std::size_t>(n) * C + c) * H * W;
                        const std::size_t base = (static_cast<std::size_t>(n) * C + c) * H * W;
                        for (int oy = 0; oy < Ho; ++oy) {
                            for (int ox = 0; ox < Wo; ++ox, ++oi) {
                                const int iy0 = oy * cfg.s, ix0 = ox * cfg.s;
                                float best = inp[static_cast<std::size_t>(iy0) * W + ix0];
                                int best_idx = iy0 * W + ix0;
                                for (int ky = 0; ky < cfg.k; ++ky)
                                    for (int kx = 0; kx < cfg.k; ++kx) {
                                        const int idx = (iy0 + ky) * W + (ix0 + kx);
                                        if (inp[idx] > best) {
                                            best = inp[idx];
                                            best_idx = idx;
                                        }
                                    }
                                next.data[oi] = best;
                                if (trace) winners[oi] = static_cast<int>(base) + best_idx;
                            }
                        }
                    }
                }
                if (trace) trace->argmax[i] = std::move(winners);
                break;
            }
            case LayerKind::global_avg_pool: {
                const int N = cur.shape[0], C = cur.shape[1];
                const int HW = cur.shape[2] * cur.shape[3];
                next = Tensor({N, C});
                for (int n = 0; n < N; ++n)
                    for (int c = 0; c < C; ++c) {
                        const float* inp =
                            cur.data.data() + (static_cast<std::size_t>(n) * C + c) * HW;
                        float acc = 0.0f;
                        for (int j = 0; j < HW; ++j) acc += inp[j];
                        next.data[static_cast<std::size_t>(n) * C + c] = acc / HW;
                    }
                break;
            }
            case LayerKind::dense: {
                const int N = cur.shape[0], D = cur.shape[1];
                const Tensor& w = model.params[i][0];
                const Tensor& b = model.params[i][1];
                next = Tensor({N, cfg.out});
                for (int n = 0; n < N; ++n) {
                    const float* inp = cur.data.data() + static_cast<std::size_t>(n) * D;
                    for (int o = 0; o < cfg.out; ++o) {
                        const float* wrow = w.data.data() + static_cast<std::size_t>(o) * D;
                        float acc = b.data[o];
                        for (int d = 0; d < D; ++d) acc += wrow[d] * inp[d];
                        next.data[static_cast<std::size_t>(n) * cfg.out + o] = acc;
                    }
                }
                break;
            }
            case LayerKind::softmax: {
                next = Tensor(cur.shape);
                softmax_forward(cur, next);
                break;
            }
        }
        check_finite(next, std::string("activation after layer ") + std::to_string(i) + " (" +
                               layer_kind_name(cfg.kind) + ")");
        cur = std::move(next);
    }
    return cur;
}

Grads backward(const Model& model, const Trace& trace, const Tensor& dlogits) {
    const ModelSpec& spec = model.spec;
    const std::size_t L = spec.layers.size();
    if (spec.layers[L - 1].kind != LayerKind::softmax)
        fail(Errc::shape_mismatch, "backward expects a softmax-terminated model");

    Grads grads(L);
    for (std::size_t i = 0; i < L; ++i)
        for (const auto& p : model.params[i]) grads[i].push_back(Tensor(p.shape));

    // dlogits is already the gradient at the softmax input
    Tensor dcur = dlogits;
    for (std::size_t ii = L - 1; ii-- > 0;) {
        const LayerCfg& cfg = spec.layers[ii];
        const Tensor& in = trace.inputs[ii];
        Tensor dprev;
        switch (cfg.kind) {
            case LayerKind::conv: {
                dprev = Tensor(in.shape);
                conv_backward(in, model.params[ii][0], dcur, cfg.k, cfg.s, cfg.p, grads[ii][0],
                              grads[ii][1], dprev);
                break;
            }
            case LayerKind::ds_conv: {
                const Tensor& mid = trace.aux[ii];
                Tensor dmid(mid.shape);
                pointwise_backward(mid, model.params[ii][1], dcur, grads[ii][1], grads[ii][2],
                                   dmid);
                dprev = Tensor(in.shape);
                depthwise_backward(in, model.params[ii][0], dmid, cfg.k, cfg.s, cfg.p,
                                   grads[ii][0], dprev);
                break;
            }
            case LayerKind::relu: {
                dprev = dcur;
                for (std::size_t j = 0; j < dprev.data.size(); ++j)
                    if (in.data[j] <= 0.0f) dprev.data[j] = 0.0f;
                break;
            }
            case LayerKind::max_pool: {
                dprev = Tensor(in.shape);
                const auto& winners = trace.argmax[ii];
                for (std::size_t j = 0; j < dcur.data.size(); ++j)
                    dprev.data[static_cast<std::size_t>(winners[j])] += dcur.data[j];
                break;
            }
            case LayerKind::global_avg_pool: {
                const int N = in.shape[0], C = in.shape[1];
                const int HW = in.shape[2] * in.shape[3];
                dprev = Tensor(in.shape);
                for (int n = 0; n < N; ++n)
                    for (int c = 0; c < C; ++c) {
                        const float g =
                            dcur.data[static_cast<std::size_t>(n) * C + c] / static_cast<float>(HW);
                        float* dp =
                            dprev.data.data() + (static_cast<std::size_t>(n) * C + c) * HW;
                        for (int j = 0; j < HW; ++j) dp[j] = g;
                    }
                break;
            }
            case LayerKind::dense: {
                const int N = in.shape[0], D = in.shape[1];
                const int O = cfg.out;
                const Tensor& w = model.params[ii][0];
                dprev = Tensor(in.shape);
                for (int n = 0; n < N; ++n) {
                    const float* inp = in.data.data() + static_cast<std::size_t>(n) * D;
                    const float* dop = dcur.data.data() + static_cast<std::size_t>(n) * O;
                    float* dip = dprev.data.data() + static_cast<std::size_t>(n) * D;
                    for (int o = 0; o < O; ++o) {
                        const float g = dop[o];
                        grads[ii][1].data[o] += g;
                        if (g == 0.0f) continue;
                        const float* wrow = w.data.data() + static_cast<std::size_t>(o) * D;
                        float* dwrow =
                            grads[ii][0].data.data() + static_cast<std::size_t>(o) * D;
                        for (int d = 0; d < D; ++d) {
                            dwrow[d] += g * inp[d];
                            dip[d] += g * wrow[d];
                        }
                    }
                }
                break;
            }
            case LayerKind::softmax:
                fail(Errc::shape_mismatch, "softmax must be terminal");
        }
        dcur = std::move(dprev);
    }

    for (std::size_t i = 0; i < L; ++i)
        for (const auto& g : grads[i])
            check_finite(g, "gradient of layer " + std::to_string(i));
    return grads;
}

LossAndGrad cross_entropy(const Tensor& probs, const std::vector<int>& labels) {
    const int N = probs.shape[0], K = probs.shape[1];
    if (static_cast<std::size_t>(N) != labels.size())
        fail(Errc::shape_mismatch, "labels count does not match batch");
    LossAndGrad out;
    out.dlogits = Tensor(probs.shape);
    double loss = 0.0;
    for (int n = 0; n < N; ++n) {
        const int label = labels[n];
        if (label < 0 || label >= K)
            fail(Errc::label_out_of_range,
                 "label " + std::to_string(label) + " outside [0," + std::to_string(K) + ")");
        const double p =
            std::clamp(static_cast<double>(probs.data[static_cast<std::size_t>(n) * K + label]),
                       1e-7, 1.0);
        loss -= std::log(p);
        for (int k = 0; k < K; ++k) {
            const float pk = probs.data[static_cast<std::size_t>(n) * K + k];
            out.dlogits.data[static_cast<std::size_t>(n) * K + k] =
                (pk - (k == label ? 1.0f : 0.0f)) / static_cast<float>(N);
        }
    }
    out.loss = loss / N;
    return out;
}

int argmax_row(const Tensor& probs, int row) {
    const int K = probs.shape[1];
    const float* p = probs.data.data() + static_cast<std::size_t>(row) * K;
    int best = 0;
    for (int k = 1; k < K; ++k)
        if (p[k] > p[best]) best = k;
    return best;
}

// ---------------------------------------------------------------------------
// serialization

namespace {

std::vector<std::uint8_t> params_blob(const Model& model) {
    std::vector<std::uint8_t> blob;
    std::size_t total = 0;
    for (const auto& layer : model.params)
        for (const auto& t : layer) total += t.data.size();
    blob.reserve(total * 4);
    for (const auto& layer : model.params)
        for (const auto& t : layer) {
            const auto* p = reinterpret_cast<const std::uint8_t*>(t.data.data());
            blob.insert(blob.end(), p, p + t.data.size() * 4);
        }
    return blob;
}

constexpr int kModelSchemaVersion = 1;

}  // namespace

std::string weights_digest(const Model& model) { return sha256_hex(params_blob(model)); }

void save_model(const Model& model, const std::string& path) {
    for (const auto& layer : model.params)
        for (const auto& t : layer) check_finite(t, "model parameters");
    const auto blob = params_blob(model);
    json header = {{"schema_version", kModelSchemaVersion},
                   {"model_spec", spec_to_json(model.spec)},
                   {"seed", model.seed},
                   {"config_digest", model.config_digest},
                   {"blob_sha256", sha256_hex(blob)}};
    std::string head = header.dump();
    head += '\n';
    std::vector<std::uint8_t> bytes(head.begin(), head.end());
    bytes.insert(bytes.end(), blob.begin(), blob.end());
    write_binary_file(path, bytes.data(), bytes.size());
}

Model load_model(const std::string& path) {
    const auto bytes = read_binary_file(path);
    const auto nl = std::find(bytes.begin(), bytes.end(), static_cast<std::uint8_t>('\n'));
    if (nl == bytes.end()) fail(Errc::schema_error, path + ": missing model header");
    json header;
    try {
        header = json::parse(std::string(bytes.begin(), nl));
    } catch (const json::parse_error& e) {
        fail(Errc::schema_error, path + ": bad model header: " + e.what());
    }
    const int version = header.value("schema_version", -1);
    if (version != kModelSchemaVersion)
        fail(Errc::version_mismatch, path + ": file schema_version " + std::to_string(version) +
                                         ", this build reads " +
                                         std::to_string(kModelSchemaVersion));
    Model model;
    model.spec = spec_from_json(header.at("model_spec"));
    model.seed = header.value("seed", std::uint64_t{0});
    model.config_digest = header.value("config_digest", "");

    const std::size_t blob_off = static_cast<std::size_t>(nl - bytes.begin()) + 1;
    const std::size_t blob_len = bytes.size() - blob_off;
    const std::size_t expected = param_count(model.spec) * 4;
    if (blob_len != expected)
        fail(Errc::digest_mismatch, path + ": parameter blob is " + std::to_string(blob_len) +
                                        " bytes, expected " + std::to_string(expected));
    const std::string digest = sha256_hex(bytes.data() + blob_off, blob_len);
    if (digest != header.value("blob_sha256", ""))
        fail(Errc::digest_mismatch, path + ": parameter blob digest mismatch");

    const auto shapes = param_shapes(model.spec);
    model.params.resize(model.spec.layers.size());
    std::size_t off = blob_off;
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        for (const auto& shape : shapes[i]) {
            Tensor t(shape);
            std::memcpy(t.data.data(), bytes.data() + off, t.data.size() * 4);
            off += t.data.size() * 4;
            model.params[i].push_back(std::move(t));
        }
    }
    return model;
}

}  // namespace roadscope::nn
