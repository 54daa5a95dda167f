#include "stf/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace stf {

std::size_t thread_count() {
    static const std::size_t count = [] {
        const char* env = std::getenv("STF_THREADS");
        if (!env) return std::size_t{1};
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end == env || v < 1) return std::size_t{1};
        return std::min<std::size_t>(static_cast<std::size_t>(v), 256);
    }();
    return count;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn) {
    const std::size_t workers = std::min(thread_count(), n == 0 ? std::size_t{1} : n);
    if (workers <= 1) {
        fn(0, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&fn, begin, end] { fn(begin, end); });
    }
    for (std::thread& t : pool) t.join();
}

}  // namespace stf
