// Test backend for the external-embedding protocol. Speaks EMBED v1 on
// stdin/stdout and supports fault-injection flags so protocol error paths
// are exercisable:
//   --dim N        declared embedding dimension (default 8)
//   --short        send N-1 floats for the first tile, then exit
//   --die-after K  exit cleanly before reading tile K (0-based)
//   --fixed        emit constant vectors instead of block means

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

namespace {

bool read_exact(std::FILE* f, void* buf, std::size_t len) {
    return std::fread(buf, 1, len, f) == len;
}

}  // namespace

int main(int argc, char** argv) {
    int dim = 8;
    bool send_short = false;
    bool fixed = false;
    long die_after = -1;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--dim" && i + 1 < argc) dim = std::atoi(argv[++i]);
        else if (arg == "--short") send_short = true;
        else if (arg == "--fixed") fixed = true;
        else if (arg == "--die-after" && i + 1 < argc) die_after = std::atol(argv[++i]);
        else {
            std::fprintf(stderr, "embed_stub: unknown arg %s\n", arg.c_str());
            return 2;
        }
    }
    if (dim < 1) return 2;

    std::printf("EMBED v1 dim=%d\n", dim);
    std::fflush(stdout);

    std::vector<std::uint8_t> tile;
    for (long tile_idx = 0;; ++tile_idx) {
        if (die_after >= 0 && tile_idx >= die_after) return 0;

        char line[128];
        if (!std::fgets(line, sizeof(line), stdin)) return 0;  // parent closed
        int size = 0;
        long n_bytes = 0;
        if (std::sscanf(line, "TILE %d %ld", &size, &n_bytes) != 2 || n_bytes <= 0) {
            std::fprintf(stderr, "embed_stub: bad tile header: %s", line);
            return 2;
        }
        tile.resize(static_cast<std::size_t>(n_bytes));
        if (!read_exact(stdin, tile.data(), tile.size())) return 2;

        std::vector<float> vec(static_cast<std::size_t>(dim));
        if (fixed) {
            for (int d = 0; d < dim; ++d) vec[d] = 0.125f * static_cast<float>(d);
        } else {
            // block means: dim horizontal bands, channels averaged
            const std::size_t npx = tile.size() / 3;
            for (int d = 0; d < dim; ++d) {
                const std::size_t lo = npx * d / dim;
                const std::size_t hi = npx * (d + 1) / dim;
                double acc = 0.0;
                for (std::size_t i = lo; i < hi; ++i)
                    acc += tile[i * 3] + tile[i * 3 + 1] + tile[i * 3 + 2];
                vec[d] = hi > lo ? static_cast<float>(acc / (3.0 * 255.0 * (hi - lo))) : 0.0f;
            }
        }

        std::printf("VEC\n");
        std::fflush(stdout);
        const std::size_t count = send_short ? vec.size() - 1 : vec.size();
        std::fwrite(vec.data(), 4, count, stdout);
        std::fflush(stdout);
        if (send_short) return 0;
    }
}
