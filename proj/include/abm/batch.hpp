#pragma once

// Monte Carlo batches. Run k of every scenario uses seed master + k, so
// scenarios share random numbers; results land in fixed slots, so the output
// does not depend on thread count or scheduling.

#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "config.hpp"
#include "engine.hpp"

namespace abm {

struct BatchTask {
    std::size_t scenario = 0;  // index into the scenario list
    int run = 0;
    std::uint64_t seed = 0;
};

struct BatchResult {
    BatchTask task;
    std::optional<Trace> trace;  // empty on failure
    std::string error;
    bool audit_failure = false;
};

inline std::vector<BatchTask> plan_batch(const std::vector<Scenario>& scenarios, int runs, std::uint64_t master_seed) {
    if (runs < 1) throw std::invalid_argument("batch: runs must be >= 1");
    std::vector<BatchTask> tasks;
    for (std::size_t s = 0; s < scenarios.size(); ++s)
        for (int k = 0; k < runs; ++k) tasks.push_back({s, k, master_seed + static_cast<std::uint64_t>(k)});
    return tasks;
}

/// Executes every task on `threads` workers. `on_done` (optional) is called
/// under a lock as each run finishes, in completion order.
inline std::vector<BatchResult> run_batch(const Params& base, const std::vector<Scenario>& scenarios,
                                          const std::vector<BatchTask>& tasks, const RunOptions& opt, int threads,
                                          const std::function<void(const BatchResult&)>& on_done = {}) {
    if (threads < 1) throw std::invalid_argument("batch: parallelism must be >= 1");
    std::vector<BatchResult> out(tasks.size());
    std::atomic<std::size_t> next{0};
    std::mutex mu;
    auto worker = [&] {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= tasks.size()) return;
            BatchResult& r = out[k];
            r.task = tasks[k];
            try {
                r.trace = run(base, scenarios.at(r.task.scenario), r.task.seed, opt);
            } catch (const AuditFailure& e) {
                r.error = e.what();
                r.audit_failure = true;
            } catch (const std::exception& e) {
                r.error = e.what();
            }
            if (on_done) {
                const std::lock_guard<std::mutex> lock(mu);
                on_done(r);
            }
        }
    };
    const auto n = static_cast<std::size_t>(threads) < tasks.size() ? static_cast<std::size_t>(threads) : tasks.size();
    if (n <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return out;
}

}  // namespace abm
