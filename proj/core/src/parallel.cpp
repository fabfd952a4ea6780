#include "kmax/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace kmax {

int resolve_workers(int requested) {
    if (requested > 0) return std::min(requested, 64);
    const unsigned hw = std::thread::hardware_concurrency();
    return static_cast<int>(std::clamp<unsigned>(hw == 0 ? 1 : hw, 1, 64));
}

void parallel_for_blocks(std::int64_t count, std::int64_t block_size, int workers,
                         const std::function<void(std::int64_t, std::int64_t, std::int64_t)>& body) {
    if (count <= 0) return;
    const std::int64_t n_blocks = (count + block_size - 1) / block_size;
    workers = static_cast<int>(std::min<std::int64_t>(resolve_workers(workers), n_blocks));

    if (workers <= 1) {
        for (std::int64_t b = 0; b < n_blocks; ++b) {
            const std::int64_t begin = b * block_size;
            body(begin, std::min(begin + block_size, count), b);
        }
        return;
    }

    std::atomic<std::int64_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto drain = [&] {
        try {
            for (;;) {
                const std::int64_t b = next.fetch_add(1, std::memory_order_relaxed);
                if (b >= n_blocks) return;
                const std::int64_t begin = b * block_size;
                body(begin, std::min(begin + block_size, count), b);
            }
        } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers) - 1);
    for (int w = 1; w < workers; ++w) pool.emplace_back(drain);
    drain();
    for (auto& t : pool) t.join();

    if (error) std::rethrow_exception(error);
}

}  // namespace kmax
