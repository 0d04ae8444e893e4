#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "hcl/training.hpp"

namespace hcl {

struct RunOutcome {
  Strategy strategy = Strategy::random_baseline;
  std::uint64_t seed = 0;
  std::map<std::string, double> metrics;  // final_metrics of the run
  double final_offdiag_mass = 0.0;
};

// Trains every (strategy, seed) pair with otherwise identical settings.
// Runs are independent and may execute on `threads` workers; the result is
// ordered by (strategy, seed) regardless of completion order.
inline std::vector<RunOutcome> run_compare(const Dataset& ds, const EmotionWheel& wheel,
                                           const TrainConfig& base,
                                           const std::vector<Strategy>& strategies,
                                           const std::vector<std::uint64_t>& seeds,
                                           std::size_t threads = 1) {
  base.validate();
  std::vector<RunOutcome> out;
  for (auto s : strategies)
    for (auto seed : seeds) out.push_back({s, seed, {}, 0.0});

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < out.size(); i = next++) {
      try {
        TrainConfig cfg = base;
        cfg.strategy = out[i].strategy;
        cfg.seed = out[i].seed;
        const auto res = train(ds, wheel, cfg);
        out[i].metrics = res.log.final_metrics;
        if (!res.log.steps.empty()) out[i].final_offdiag_mass = res.log.steps.back().offdiag_mass;
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(out.size(), 1));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::sort(out.begin(), out.end(), [](const RunOutcome& a, const RunOutcome& b) {
    return std::pair(a.strategy, a.seed) < std::pair(b.strategy, b.seed);
  });
  return out;
}

struct Summary {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation; 0 for a single run
  std::size_t n = 0;
};

// Mean and sd of `metric` per strategy. Runs are sorted by (strategy, seed)
// first so the sums are taken in a fixed order.
inline std::map<Strategy, Summary> aggregate(std::vector<RunOutcome> runs,
                                             const std::string& metric) {
  std::sort(runs.begin(), runs.end(), [](const RunOutcome& a, const RunOutcome& b) {
    return std::pair(a.strategy, a.seed) < std::pair(b.strategy, b.seed);
  });
  std::map<Strategy, std::vector<double>> values;
  for (const auto& r : runs) {
    auto it = r.metrics.find(metric);
    if (it == r.metrics.end()) throw DataError("aggregate: run lacks metric '" + metric + "'");
    values[r.strategy].push_back(it->second);
  }
  std::map<Strategy, Summary> out;
  for (const auto& [s, v] : values) {
    Summary sm;
    sm.n = v.size();
    for (double x : v) sm.mean += x;
    sm.mean /= static_cast<double>(sm.n);
    if (sm.n > 1) {
      double ss = 0.0;
      for (double x : v) ss += (x - sm.mean) * (x - sm.mean);
      sm.sd = std::sqrt(ss / static_cast<double>(sm.n - 1));
    }
    out[s] = sm;
  }
  return out;
}

}  // namespace hcl
