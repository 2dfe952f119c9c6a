#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace roadscope {

// Runs fn(i) for i in [0, n). Each index owns its output slot, so results
// are identical for any thread count; threads <= 1 runs inline.
inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::size_t nthreads = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(nthreads);
    for (std::size_t t = 0; t < nthreads; ++t) {
        pool.emplace_back([&, t]() {
            try {
                for (std::size_t i = t; i < n; i += nthreads) fn(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace roadscope
