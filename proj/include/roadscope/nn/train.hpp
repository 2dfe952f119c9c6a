#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "roadscope/nn/model.hpp"

namespace roadscope::nn {

struct TrainConfig {
    double lr = 0.0001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int batch_size = 32;
    int epochs = 20;
    std::uint64_t seed = 42;
    int input_size = 128;  // square input side after area-average downscale
};

struct AdamState {
    std::vector<std::vector<Tensor>> m;
    std::vector<std::vector<Tensor>> v;
    std::int64_t t = 0;
};

AdamState make_adam_state(const Model& model);

// Bias-corrected Adam. A parameter tensor whose gradient is identically
// zero is left untouched for this step (its moments still decay), so a
// zero-gradient step never moves parameters regardless of state.
void adam_step(Model& model, const Grads& grads, AdamState& state, const TrainConfig& cfg);

// In-memory training set: one flat feature vector per sample.
struct SampleSet {
    InputShape shape;
    std::vector<std::vector<float>> xs;
    std::vector<int> labels;

    std::size_t size() const { return xs.size(); }
};

struct EpochStats {
    int epoch = 0;
    double loss = 0.0;
    double accuracy = 0.0;
    std::int64_t steps_done = 0;
};

using EpochCallback = std::function<void(const EpochStats&)>;

// Deterministic for fixed (seed, sample order, config): fixed init is the
// caller's job, shuffles are derived per epoch from cfg.seed.
std::vector<EpochStats> train(Model& model, const SampleSet& data, const TrainConfig& cfg,
                              const EpochCallback& on_epoch = nullptr);

// Assembles samples[order[first..first+count)] into a batch tensor.
Tensor make_batch(const SampleSet& data, const std::vector<std::size_t>& order, std::size_t first,
                  std::size_t count, std::vector<int>& labels_out);

}  // namespace roadscope::nn
