#include "roadscope/nn/embed.hpp"

#include <cmath>
#include <csignal>
#include <cstdio>
#include <cstring>

#include <sys/wait.h>
#include <unistd.h>

#include "roadscope/error.hpp"

namespace roadscope::nn {

namespace {

void write_all(int fd, const void* data, std::size_t len, std::int64_t tiles_done) {
    const char* p = static_cast<const char*>(data);
    while (len > 0) {
        const ssize_t n = ::write(fd, p, len);
        if (n <= 0)
            fail(Errc::backend_unavailable,
                 "backend stopped accepting input after tile " + std::to_string(tiles_done));
        p += n;
        len -= static_cast<std::size_t>(n);
    }
}

// Returns bytes read; short count means EOF.
std::size_t read_exact(int fd, void* data, std::size_t len) {
    char* p = static_cast<char*>(data);
    std::size_t got = 0;
    while (got < len) {
        const ssize_t n = ::read(fd, p + got, len - got);
        if (n <= 0) break;
        got += static_cast<std::size_t>(n);
    }
    return got;
}

}  // namespace

EmbedBackend::EmbedBackend(const std::string& command) {
    // a dead child must surface as an error code, not SIGPIPE
    ::signal(SIGPIPE, SIG_IGN);

    int in_pipe[2];   // parent -> child
    int out_pipe[2];  // child -> parent
    if (::pipe(in_pipe) != 0 || ::pipe(out_pipe) != 0)
        fail(Errc::backend_unavailable, "pipe() failed");

    const pid_t pid = ::fork();
    if (pid < 0) fail(Errc::backend_unavailable, "fork() failed");
    if (pid == 0) {
        ::dup2(in_pipe[0], STDIN_FILENO);
        ::dup2(out_pipe[1], STDOUT_FILENO);
        ::close(in_pipe[0]);
        ::close(in_pipe[1]);
        ::close(out_pipe[0]);
        ::close(out_pipe[1]);
        ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    to_child_ = in_pipe[1];
    from_child_ = out_pipe[0];
    pid_ = pid;

    const std::string hello = read_line();
    int dim = 0;
    if (std::sscanf(hello.c_str(), "EMBED v1 dim=%d", &dim) != 1 || dim < 1)
        fail(Errc::protocol_error, "bad handshake line: \"" + hello + "\"");
    dim_ = dim;
}

EmbedBackend::~EmbedBackend() {
    if (to_child_ >= 0) ::close(to_child_);
    if (from_child_ >= 0) ::close(from_child_);
    if (pid_ > 0) {
        int status = 0;
        for (int i = 0; i < 200; ++i) {
            if (::waitpid(static_cast<pid_t>(pid_), &status, WNOHANG) != 0) return;
            ::usleep(10000);
        }
        ::kill(static_cast<pid_t>(pid_), SIGKILL);
        ::waitpid(static_cast<pid_t>(pid_), &status, 0);
    }
}

std::string EmbedBackend::read_line() {
    std::string line;
    char c;
    while (true) {
        const ssize_t n = ::read(from_child_, &c, 1);
        if (n <= 0)
            fail(Errc::backend_unavailable,
                 "backend exited; last good tile index " + std::to_string(tiles_done_ - 1));
        if (c == '\n') return line;
        line.push_back(c);
        if (line.size() > 4096) fail(Errc::protocol_error, "unterminated line from backend");
    }
}

std::vector<float> EmbedBackend::embed(const std::uint8_t* rgb, int tile_size) {
    const std::size_t n_bytes = static_cast<std::size_t>(tile_size) * tile_size * 3;
    const std::string header =
        "TILE " + std::to_string(tile_size) + " " + std::to_string(n_bytes) + "\n";
    write_all(to_child_, header.data(), header.size(), tiles_done_);
    write_all(to_child_, rgb, n_bytes, tiles_done_);

    const std::string reply = read_line();
    if (reply != "VEC") fail(Errc::protocol_error, "expected \"VEC\", got \"" + reply + "\"");

    std::vector<float> vec(static_cast<std::size_t>(dim_));
    const std::size_t want = vec.size() * 4;
    const std::size_t got = read_exact(from_child_, vec.data(), want);
    if (got != want)
        fail(Errc::dimension_mismatch, "backend declared dim " + std::to_string(dim_) +
                                           " but sent " + std::to_string(got / 4) + " floats");
    for (float v : vec)
        if (!std::isfinite(v)) fail(Errc::protocol_error, "non-finite embedding value");
    ++tiles_done_;
    return vec;
}

ModelSpec make_embedding_head_spec(int dim) {
    ModelSpec spec;
    spec.input = InputShape{false, 0, 0, 0, dim};
    spec.layers = {LayerCfg{LayerKind::dense, 0, 1, 0, 64}, LayerCfg{LayerKind::relu, 0, 1, 0, 0},
                   LayerCfg{LayerKind::dense, 0, 1, 0, 3},
                   LayerCfg{LayerKind::softmax, 0, 1, 0, 0}};
    validate_spec(spec);
    return spec;
}

}  // namespace roadscope::nn
