#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "roadscope/nn/tensor.hpp"

namespace roadscope::nn {

enum class LayerKind { conv, ds_conv, relu, max_pool, global_avg_pool, dense, softmax };

const char* layer_kind_name(LayerKind k);

struct LayerCfg {
    LayerKind kind = LayerKind::relu;
    int k = 0;    // kernel size (conv/ds_conv/max_pool)
    int s = 1;    // stride
    int p = 0;    // zero padding (conv/ds_conv)
    int out = 0;  // output channels / units (conv/ds_conv/dense)
};

// Either a [C,H,W] image input or a flat [D] feature vector (the
// external-embedding head path).
struct InputShape {
    bool spatial = true;
    int c = 3, h = 0, w = 0;
    int dim = 0;

    std::vector<int> with_batch(int n) const {
        return spatial ? std::vector<int>{n, c, h, w} : std::vector<int>{n, dim};
    }
};

struct ModelSpec {
    InputShape input;
    std::vector<LayerCfg> layers;
};

// Shape chain-check. Spatial models must end GlobalAvgPool -> Dense(3) ->
// Softmax (the CAM contract); dense-only models Dense(3) -> Softmax.
// Also asserts the depthwise-separable parameter advantage for k > 1.
void validate_spec(const ModelSpec& spec);

nlohmann::json spec_to_json(const ModelSpec& spec);
ModelSpec spec_from_json(const nlohmann::json& j);

// Named defaults. input_size is the square input side in px.
ModelSpec make_named_spec(const std::string& name, int input_size);

struct Model {
    ModelSpec spec;
    // params[i] belongs to spec.layers[i]; conv: {w,b}, ds_conv:
    // {dw,pw,b}, dense: {w,b}, others empty
    std::vector<std::vector<Tensor>> params;
    std::uint64_t seed = 0;
    std::string config_digest;
};

// Fan-in-scaled uniform init (limit sqrt(6/fan_in)), zero biases,
// deterministic from seed.
Model init_model(const ModelSpec& spec, std::uint64_t seed);

std::size_t param_count(const ModelSpec& spec);

// Activations captured during a forward pass; inputs[i] is the tensor
// entering layer i (so inputs[gap_index] holds the final feature maps).
struct Trace {
    std::vector<Tensor> inputs;
    std::vector<Tensor> aux;               // ds_conv: depthwise output
    std::vector<std::vector<int>> argmax;  // max_pool winners
};

// Inputs are expected normalized to [0,1]; output rows are probability
// simplices. Any non-finite activation throws.
Tensor forward(const Model& model, const Tensor& batch, Trace* trace = nullptr);

using Grads = std::vector<std::vector<Tensor>>;

// dlogits = gradient w.r.t. the softmax input (softmax + cross-entropy
// are differentiated jointly).
Grads backward(const Model& model, const Trace& trace, const Tensor& dlogits);

struct LossAndGrad {
    double loss = 0.0;
    Tensor dlogits;
};

// Mean over the batch of -log p[label], p clipped to [1e-7, 1];
// dlogits = (p - onehot)/N.
LossAndGrad cross_entropy(const Tensor& probs, const std::vector<int>& labels);

// Argmax with ties broken toward the lower class index.
int argmax_row(const Tensor& probs, int row);

// Model file: one JSON header line + little-endian f32 blob in spec
// order, digest-checked.
void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

// sha256 over the serialized parameter blob.
std::string weights_digest(const Model& model);

}  // namespace roadscope::nn
