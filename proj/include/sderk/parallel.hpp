/*
   Copyright 2026 The sderk Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <limits>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "sderk/error.hpp"

namespace sderk {

/// Failure of one unit of work inside an ensemble; carries the unit index.
class TrajectoryError : public Error {
public:
    TrajectoryError(std::size_t index, const std::string& cause)
        : Error("trajectory " + std::to_string(index) + " failed: " + cause), index_(index),
          cause_(cause) {}

    std::size_t index() const noexcept { return index_; }
    const std::string& cause() const noexcept { return cause_; }

private:
    std::size_t index_;
    std::string cause_;
};

/// Runs body(i) for i in [0, count) on `workers` threads, fail-fast.
///
/// Work is handed out through a shared counter; the body must only write
/// to storage owned by index i. On failure the remaining work is abandoned
/// and the failure with the smallest index is rethrown as TrajectoryError.
template <class Body>
void parallel_for(std::size_t count, unsigned workers, Body&& body) {
    workers = std::max(1u, workers);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::mutex mu;
    std::size_t failed_index = std::numeric_limits<std::size_t>::max();
    std::string failed_cause;

    auto run = [&] {
        for (;;) {
            if (stop.load(std::memory_order_relaxed)) return;
            const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= count) return;
            try {
                body(i);
            } catch (const std::exception& e) {
                std::lock_guard lock(mu);
                if (i < failed_index) {
                    failed_index = i;
                    failed_cause = e.what();
                }
                stop.store(true, std::memory_order_relaxed);
                return;
            }
        }
    };

    if (workers == 1 || count <= 1) {
        run();
    } else {
        std::vector<std::thread> pool;
        const unsigned spawn = static_cast<unsigned>(std::min<std::size_t>(workers, count));
        pool.reserve(spawn);
        for (unsigned w = 0; w < spawn; ++w) pool.emplace_back(run);
        for (auto& th : pool) th.join();
    }
    if (failed_index != std::numeric_limits<std::size_t>::max()) {
        throw TrajectoryError(failed_index, failed_cause);
    }
}

} // namespace sderk
