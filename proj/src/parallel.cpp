#include "mulog/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>

namespace mulog {

namespace {

std::atomic<int> g_threads{0};

int resolve_threads() {
    int n = g_threads.load(std::memory_order_relaxed);
    if (n > 0) return n;
    if (const char* env = std::getenv("MULOG_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

constexpr std::size_t kBlock = 4096;

} // namespace

void set_thread_count(int n) { g_threads.store(n, std::memory_order_relaxed); }

int thread_count() { return resolve_threads(); }

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn) {
    if (n == 0) return;
    int workers = resolve_threads();
    if (workers <= 1 || n < 2 * kBlock) {
        fn(0, n);
        return;
    }
    // Chunk layout depends only on n, never on the worker count. Workers pull
    // chunks off a shared counter; scheduling varies, chunk contents do not.
    std::size_t chunks = (n + kBlock - 1) / kBlock;
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> error_chunk{chunks};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&] {
        for (;;) {
            std::size_t c = next.fetch_add(1, std::memory_order_relaxed);
            if (c >= chunks) return;
            if (c > error_chunk.load(std::memory_order_relaxed)) continue;
            std::size_t b = c * kBlock;
            try {
                fn(b, std::min(b + kBlock, n));
            } catch (...) {
                // Keep only the lowest-index failing chunk so the surfaced
                // error is identical for every thread count.
                std::lock_guard<std::mutex> lock(error_mutex);
                if (c < error_chunk.load(std::memory_order_relaxed)) {
                    error_chunk.store(c, std::memory_order_relaxed);
                    error = std::current_exception();
                }
            }
        }
    };
    std::vector<std::thread> pool;
    int spawn = static_cast<int>(std::min<std::size_t>(workers, chunks)) - 1;
    pool.reserve(spawn);
    for (int i = 0; i < spawn; ++i) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    if (error_chunk.load(std::memory_order_relaxed) < chunks) std::rethrow_exception(error);
}

double block_sum(const double* data, std::size_t n) {
    return block_sum(n, [data](std::size_t i) { return data[i]; });
}

double block_sum(std::size_t n, const std::function<double(std::size_t)>& gen) {
    if (n == 0) return 0.0;
    std::size_t blocks = (n + kBlock - 1) / kBlock;
    std::vector<double> partial(blocks, 0.0);
    parallel_for(n, [&](std::size_t b, std::size_t e) {
        // parallel_for chunks at kBlock boundaries, so [b, e) covers whole
        // blocks (the last may be short).
        for (std::size_t blk = b / kBlock; blk * kBlock < e; ++blk) {
            double s = 0.0;
            std::size_t hi = std::min((blk + 1) * kBlock, e);
            for (std::size_t i = blk * kBlock; i < hi; ++i) s += gen(i);
            partial[blk] = s;
        }
    });
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

} // namespace mulog
