#pragma once

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace stokes_robin {

/// Runs body(i) for i in [0, count) on up to `threads` workers with a static
/// interleaved schedule. Results must go to per-index slots; with threads <= 1
/// the loop runs in order on the calling thread. The exception of the lowest
/// failing index is rethrown.
template <typename Body>
void parallel_for(int count, int threads, Body&& body) {
    if (count <= 0) return;
    const int workers = std::clamp(threads, 1, count);
    if (workers == 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::exception_ptr> errors(count);
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (int i = w; i < count; i += workers) {
                    try {
                        body(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        }
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace stokes_robin
