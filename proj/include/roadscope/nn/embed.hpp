#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "roadscope/nn/model.hpp"

namespace roadscope::nn {

// Client side of the external-embedding protocol. The backend is a child
// process speaking over stdin/stdout:
//
//   child -> "EMBED v1 dim=<D>\n"
//   parent -> "TILE <size> <n_bytes>\n" + raw interleaved RGB bytes
//   child -> "VEC\n" + D little-endian f32
//
// Any deviation is a ProtocolError; a child that dies between tiles is
// BackendUnavailable (the message carries the last good tile index).
class EmbedBackend {
  public:
    explicit EmbedBackend(const std::string& command);
    ~EmbedBackend();

    EmbedBackend(const EmbedBackend&) = delete;
    EmbedBackend& operator=(const EmbedBackend&) = delete;

    int dim() const { return dim_; }
    std::vector<float> embed(const std::uint8_t* rgb, int tile_size);

  private:
    std::string read_line();

    int dim_ = 0;
    int to_child_ = -1;
    int from_child_ = -1;
    long pid_ = -1;
    std::int64_t tiles_done_ = 0;
};

// FFN head trained on external embeddings:
// Dense(64) -> ReLU -> Dense(3) -> Softmax.
ModelSpec make_embedding_head_spec(int dim);

}  // namespace roadscope::nn
