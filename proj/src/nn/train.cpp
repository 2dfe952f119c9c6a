#include "roadscope/nn/train.hpp"

#include <cmath>
#include <cstring>
#include <numeric>

#include "roadscope/error.hpp"
#include "roadscope/rng.hpp"

namespace roadscope::nn {

AdamState make_adam_state(const Model& model) {
    AdamState st;
    st.m.resize(model.params.size());
    st.v.resize(model.params.size());
    for (std::size_t i = 0; i < model.params.size(); ++i) {
        for (const auto& p : model.params[i]) {
            st.m[i].push_back(Tensor(p.shape));
            st.v[i].push_back(Tensor(p.shape));
        }
    }
    return st;
}

void adam_step(Model& model, const Grads& grads, AdamState& state, const TrainConfig& cfg) {
    state.t += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < model.params.size(); ++i) {
        for (std::size_t pi = 0; pi < model.params[i].size(); ++pi) {
            Tensor& theta = model.params[i][pi];
            const Tensor& g = grads[i][pi];
            Tensor& m = state.m[i][pi];
            Tensor& v = state.v[i][pi];
            if (!theta.same_shape(g))
                fail(Errc::shape_mismatch, "gradient shape mismatch at layer " + std::to_string(i));

            bool all_zero = true;
            for (float gv : g.data)
                if (gv != 0.0f) {
                    all_zero = false;
                    break;
                }
            if (all_zero) {
                // moments decay, parameters stay put
                for (std::size_t j = 0; j < m.data.size(); ++j) {
                    m.data[j] = static_cast<float>(cfg.beta1 * m.data[j]);
                    v.data[j] = static_cast<float>(cfg.beta2 * v.data[j]);
                }
                continue;
            }
            for (std::size_t j = 0; j < theta.data.size(); ++j) {
                const double gj = g.data[j];
                const double mj = cfg.beta1 * m.data[j] + (1.0 - cfg.beta1) * gj;
                const double vj = cfg.beta2 * v.data[j] + (1.0 - cfg.beta2) * gj * gj;
                m.data[j] = static_cast<float>(mj);
                v.data[j] = static_cast<float>(vj);
                const double mhat = mj / bc1;
                const double vhat = vj / bc2;
                theta.data[j] = static_cast<float>(theta.data[j] -
                                                   cfg.lr * mhat / (std::sqrt(vhat) + cfg.epsilon));
            }
        }
    }
}

Tensor make_batch(const SampleSet& data, const std::vector<std::size_t>& order, std::size_t first,
                  std::size_t count, std::vector<int>& labels_out) {
    const std::size_t sample_len = Tensor::numel_of(data.shape.with_batch(1));
    Tensor batch(data.shape.with_batch(static_cast<int>(count)));
    labels_out.resize(count);
    for (std::size_t b = 0; b < count; ++b) {
        const std::size_t idx = order[first + b];
        const auto& x = data.xs[idx];
        if (x.size() != sample_len)
            fail(Errc::shape_mismatch, "sample " + std::to_string(idx) + " has " +
                                           std::to_string(x.size()) + " values, expected " +
                                           std::to_string(sample_len));
        std::memcpy(batch.data.data() + b * sample_len, x.data(), sample_len * sizeof(float));
        labels_out[b] = data.labels[idx];
    }
    return batch;
}

std::vector<EpochStats> train(Model& model, const SampleSet& data, const TrainConfig& cfg,
                              const EpochCallback& on_epoch) {
    if (data.size() == 0) fail(Errc::empty_result, "training set is empty");
    if (data.labels.size() != data.xs.size())
        fail(Errc::shape_mismatch, "labels/samples count mismatch");
    if (cfg.batch_size < 1) fail(Errc::schema_error, "batch_size must be >= 1");

    AdamState state = make_adam_state(model);
    const Rng root{cfg.seed};
    std::vector<EpochStats> log;
    std::int64_t steps = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<std::size_t> order(data.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng shuffle_rng = root.fork("train/epoch/" + std::to_string(epoch));
        shuffle_rng.shuffle(order);

        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t first = 0; first < order.size(); first += cfg.batch_size) {
            const std::size_t count =
                std::min<std::size_t>(cfg.batch_size, order.size() - first);
            std::vector<int> labels;
            Tensor batch = make_batch(data, order, first, count, labels);
            Trace trace;
            Tensor probs;
            try {
                probs = forward(model, batch, &trace);
            } catch (const Error& e) {
                throw Error(e.code(), std::string(e.what()) + " (train step " +
                                          std::to_string(steps) + ")");
            }
            for (std::size_t b = 0; b < count; ++b)
                if (argmax_row(probs, static_cast<int>(b)) == labels[b]) ++correct;
            const LossAndGrad lg = cross_entropy(probs, labels);
            loss_sum += lg.loss * static_cast<double>(count);
            Grads grads = backward(model, trace, lg.dlogits);
            adam_step(model, grads, state, cfg);
            ++steps;
        }

        EpochStats st;
        st.epoch = epoch;
        st.loss = loss_sum / static_cast<double>(data.size());
        st.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
        st.steps_done = steps;
        log.push_back(st);
        if (on_epoch) on_epoch(st);
    }
    return log;
}

}  // namespace roadscope::nn
