#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace kpplab {

// Runs jobs 0..n-1 on up to `threads` workers. Results land in a vector slot
// per job index, so the aggregate is byte-identical regardless of thread
// count or completion order (reduction order is fixed by job index).
template <class T>
std::vector<T> run_indexed_jobs(std::size_t n, int threads, const std::function<T(std::size_t)>& job) {
    std::vector<T> results(n);
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) results[i] = job(i);
        return results;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr err;
    std::atomic<bool> failed{false};
    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= n || failed.load()) return;
            try {
                results[i] = job(i);
            } catch (...) {
                if (!failed.exchange(true)) err = std::current_exception();
                return;
            }
        }
    };
    int nw = std::min<std::size_t>(threads, n);
    pool.reserve(nw);
    for (int i = 0; i < nw; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failed.load() && err) std::rethrow_exception(err);
    return results;
}

}  // namespace kpplab
