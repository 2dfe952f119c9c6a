#pragma once

#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

namespace roadscope::nn {

// Dense row-major f32 tensor. All reductions in the stack run
// single-threaded in row-major order so results are reproducible.
struct Tensor {
    std::vector<int> shape;
    std::vector<float> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)), data(numel_of(shape), 0.0f) {}

    static std::size_t numel_of(const std::vector<int>& s) {
        std::size_t n = 1;
        for (int d : s) n *= static_cast<std::size_t>(d);
        return n;
    }
    std::size_t numel() const { return data.size(); }

    static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

std::string shape_str(const std::vector<int>& shape);

// Throws NonFinite naming `what` if any element is NaN/Inf.
void check_finite(const Tensor& t, const std::string& what);

}  // namespace roadscope::nn
