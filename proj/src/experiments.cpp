#include "whittle/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>

#include <omp.h>

namespace whittle {

Estimate estimate(const std::vector<double>& xs) {
  Estimate e;
  e.n = static_cast<long>(xs.size());
  if (xs.empty()) {
    e.mean = e.se = std::numeric_limits<double>::quiet_NaN();
    return e;
  }
  double sum = 0.0;
  for (double x : xs) sum += x;
  e.mean = sum / static_cast<double>(e.n);
  if (e.n < 2) {
    e.se = std::numeric_limits<double>::quiet_NaN();
    return e;
  }
  double ss = 0.0;
  for (double x : xs) ss += (x - e.mean) * (x - e.mean);
  e.se = std::sqrt(ss / static_cast<double>(e.n - 1) / static_cast<double>(e.n));
  return e;
}

double median(std::vector<double> xs) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(xs.begin(), xs.end());
  const std::size_t m = xs.size() / 2;
  return xs.size() % 2 ? xs[m] : 0.5 * (xs[m - 1] + xs[m]);
}

int worker_count() {
  if (const char* env = std::getenv("WHITTLE_WORKERS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
  }
  return omp_get_max_threads();
}

std::vector<std::uint64_t> seed_range(std::uint64_t first, long count) {
  std::vector<std::uint64_t> out;
  for (long i = 0; i < count; ++i) out.push_back(first + static_cast<std::uint64_t>(i));
  return out;
}

ThroughputReport run_throughput(const SimConfig& base, const std::vector<std::uint64_t>& seeds,
                                const IndexTable& table, const RelaxedSolution* relaxed) {
  const long n = static_cast<long>(seeds.size());
  ThroughputReport rep;
  rep.belief.resize(n);
  rep.realized.resize(n);
  rep.activation.resize(n);
  fan_out(n, [&](long i) {
    SimConfig cfg = base;
    cfg.seed = seeds[i];
    SimRun run(cfg, table, relaxed);
    run.run(cfg.horizon);
    rep.belief[i] = run.belief_throughput();
    rep.realized[i] = run.realized_throughput();
    rep.activation[i] = run.activation_rate();
  });
  rep.belief_est = estimate(rep.belief);
  rep.realized_est = estimate(rep.realized);
  rep.activation_est = estimate(rep.activation);
  return rep;
}

long hitting_time(const SimConfig& config, const IndexTable& table, const RelaxedSolution* relaxed, double epsilon,
                  const StateVector& zeta, long max_t) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  SimRun run(config, table, relaxed);
  for (long t = 0;; ++t) {
    if ((run.empirical_state() - zeta).norm() <= epsilon) return t;
    if (t >= max_t) return -1;
    run.step();
  }
}

HittingReport hitting_times(const SimConfig& base, const std::vector<std::uint64_t>& seeds, const IndexTable& table,
                            const RelaxedSolution* relaxed, double epsilon, const StateVector& zeta, long max_t) {
  HittingReport rep;
  rep.times.assign(seeds.size(), -1);
  fan_out(static_cast<long>(seeds.size()), [&](long i) {
    SimConfig cfg = base;
    cfg.seed = seeds[i];
    rep.times[i] = hitting_time(cfg, table, relaxed, epsilon, zeta, max_t);
  });
  std::vector<double> hit;
  for (long t : rep.times) {
    if (t < 0) ++rep.misses;
    else hit.push_back(static_cast<double>(t));
  }
  rep.est = estimate(hit);
  return rep;
}

double occupancy(const SimConfig& config, const IndexTable& table, const RelaxedSolution* relaxed, double epsilon,
                 const StateVector& zeta) {
  const long burn = config.effective_burn_in();
  if (burn >= config.horizon) throw std::invalid_argument("burn-in must be shorter than the horizon");
  SimRun run(config, table, relaxed);
  long inside = 0;
  for (long t = 0; t < config.horizon; ++t) {
    if (t >= burn && (run.empirical_state() - zeta).norm() <= epsilon) ++inside;
    run.step();
  }
  return static_cast<double>(inside) / static_cast<double>(config.horizon - burn);
}

double trajectory_deviation(const SimConfig& config, const IndexTable& table, const RelaxedSolution* relaxed,
                            const FluidModel& fluid) {
  SimRun run(config, table, relaxed);
  StateVector z = run.empirical_state();
  double sup = 0.0;
  for (long t = 0; t < config.horizon; ++t) {
    sup = std::max(sup, (run.empirical_state() - z).norm());
    run.step();
    z = fluid.step(z);
  }
  return sup;
}

}  // namespace whittle
