#pragma once

// Multi-replication experiment driver. Replications are independent (each
// derives its streams from (seed, replication)), so workers claim replication
// indices from a shared counter while a single collector thread consumes
// completed results; numeric output is identical for any worker count.

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <exception>
#include <mutex>
#include <thread>
#include <utility>
#include <vector>

#include "config.hpp"
#include "engine.hpp"
#include "metrics.hpp"

namespace ssim {

struct RunOptions {
  int replications = 100;
  std::uint64_t seed = 1;
  unsigned threads = 0;  // 0 = hardware concurrency
};

// Seed for a strategy's run when the runs must be independent rather than
// coupled. Under common random numbers every strategy uses the master seed
// itself; this splitmix-style mix gives decorrelated per-strategy seeds.
inline std::uint64_t independent_seed(std::uint64_t master, std::size_t strategy_index) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ull * (strategy_index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Runs `opt.replications` replications of one strategy, invoking
// sink(replication_index, result) from the calling thread in completion
// order. The queue is bounded, so memory stays proportional to the worker
// count rather than the replication count.
template <typename Sink>
void run_replications(const ScenarioConfig& config, Strategy strategy, const RunOptions& opt,
                      Sink&& sink) {
  const int n = opt.replications;
  unsigned workers = opt.threads != 0 ? opt.threads : std::thread::hardware_concurrency();
  if (workers == 0) workers = 1;
  workers = std::min<unsigned>(workers, static_cast<unsigned>(std::max(n, 1)));

  if (workers <= 1) {
    for (int rep = 0; rep < n; ++rep) {
      sink(rep, simulate_replication(config, strategy, opt.seed, rep));
    }
    return;
  }

  std::mutex mu;
  std::condition_variable queue_space, queue_item;
  std::deque<std::pair<int, ReplicationResult>> ready;
  const std::size_t capacity = 2 * workers;
  int claimed = 0;
  std::exception_ptr failure;

  const auto worker = [&] {
    for (;;) {
      int rep;
      {
        std::lock_guard lock(mu);
        if (failure || claimed >= n) return;
        rep = claimed++;
      }
      try {
        ReplicationResult result = simulate_replication(config, strategy, opt.seed, rep);
        std::unique_lock lock(mu);
        queue_space.wait(lock, [&] { return ready.size() < capacity || failure; });
        if (failure) return;
        ready.emplace_back(rep, std::move(result));
        queue_item.notify_one();
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        queue_item.notify_all();
        queue_space.notify_all();
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned i = 0; i < workers; ++i) pool.emplace_back(worker);

  int consumed = 0;
  std::exception_ptr sink_failure;
  while (consumed < n) {
    std::pair<int, ReplicationResult> item;
    {
      std::unique_lock lock(mu);
      queue_item.wait(lock, [&] { return !ready.empty() || failure; });
      if (ready.empty()) break;  // workers failed with nothing left to drain
      item = std::move(ready.front());
      ready.pop_front();
      queue_space.notify_one();
    }
    if (!sink_failure) {
      try {
        sink(item.first, std::move(item.second));
      } catch (...) {
        sink_failure = std::current_exception();
        std::lock_guard lock(mu);
        if (!failure) failure = sink_failure;
        queue_space.notify_all();
      }
    }
    ++consumed;
  }

  for (auto& t : pool) t.join();
  if (sink_failure) std::rethrow_exception(sink_failure);
  if (failure) std::rethrow_exception(failure);
}

// Convenience wrapper retaining only per-replication metric tables, in
// replication order.
inline StrategyMetrics run_strategy_metrics(const ScenarioConfig& config, Strategy strategy,
                                            const RunOptions& opt) {
  StrategyMetrics out;
  out.strategy = strategy;
  out.per_replication.resize(static_cast<std::size_t>(opt.replications));
  run_replications(config, strategy, opt, [&](int rep, ReplicationResult result) {
    out.per_replication[static_cast<std::size_t>(rep)] =
        replication_metrics(result.youths, config);
  });
  return out;
}

}  // namespace ssim
