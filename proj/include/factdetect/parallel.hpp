#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <vector>

#include <omp.h>

namespace factdetect {

struct TaskOutcome {
    std::vector<char> done;       // done[i] != 0 when task i finished without throwing
    std::exception_ptr error;     // error of the lowest failing index, if any
    std::size_t error_index = 0;

    bool ok() const noexcept { return !error; }
    void rethrow_if_error() const {
        if (error) std::rethrow_exception(error);
    }
};

// Runs task(i) for i in [0, n) on up to `threads` OpenMP threads with dynamic scheduling.
// Exceptions are caught per task; after the first failure no new tasks start.
template <typename Task>
TaskOutcome run_tasks(std::size_t n, int threads, Task&& task) {
    TaskOutcome out;
    out.done.assign(n, 0);
    std::atomic<bool> failed{false};
    std::mutex mu;
    const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads > 0 ? threads : 1)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
        if (failed.load(std::memory_order_relaxed)) continue;
        try {
            task(static_cast<std::size_t>(i));
            out.done[static_cast<std::size_t>(i)] = 1;
        } catch (...) {
            std::lock_guard lock(mu);
            if (!out.error || static_cast<std::size_t>(i) < out.error_index) {
                out.error = std::current_exception();
                out.error_index = static_cast<std::size_t>(i);
            }
            failed.store(true);
        }
    }
    return out;
}

}  // namespace factdetect
