#pragma once

#include <cstdint>
#include <vector>

namespace roadscope::nn {

// Interleaved RGB bytes -> planar [3, dst, dst] floats in [0,1].
// Downscaling is a fractional box average (area-weighted), accumulated in
// f64 so the result is order-independent of nothing and reproducible.
// Masked-black pixels stay exactly 0 because no offset is applied.
std::vector<float> tile_to_chw(const std::vector<std::uint8_t>& rgb, int src_size, int dst_size);

}  // namespace roadscope::nn
