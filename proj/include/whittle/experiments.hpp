#pragma once

#include <cstdint>
#include <vector>

#include "whittle/fluid.hpp"
#include "whittle/simulator.hpp"

namespace whittle {

/// Mean and standard error of independent replicates; se is NaN for n < 2.
struct Estimate {
  double mean = 0.0;
  double se = 0.0;
  long n = 0;
};

Estimate estimate(const std::vector<double>& xs);
double median(std::vector<double> xs);

/// Worker count for seed fan-out: WHITTLE_WORKERS if set, else the OpenMP
/// default.
int worker_count();

/// Calls fn(i) for i in [0, n) on the worker pool. Each call must write
/// only to its own slot of a pre-sized output.
template <class F>
void fan_out(long n, F&& fn) {
#pragma omp parallel for schedule(dynamic, 1) num_threads(worker_count())
  for (long i = 0; i < n; ++i) fn(i);
}

struct ThroughputReport {
  std::vector<double> belief;
  std::vector<double> realized;
  std::vector<double> activation;
  Estimate belief_est, realized_est, activation_est;
};

/// One run per seed with `base` otherwise unchanged; per-user per-slot
/// rates after burn-in.
ThroughputReport run_throughput(const SimConfig& base, const std::vector<std::uint64_t>& seeds,
                                const IndexTable& table, const RelaxedSolution* relaxed = nullptr);

/// First slot t with ||Z[t] - zeta|| <= epsilon, or -1 if not reached by
/// max_t.
long hitting_time(const SimConfig& config, const IndexTable& table, const RelaxedSolution* relaxed, double epsilon,
                  const StateVector& zeta, long max_t);

struct HittingReport {
  /// Per seed; -1 marks a run that never hit.
  std::vector<long> times;
  long misses = 0;
  /// Over the runs that hit.
  Estimate est;
};

HittingReport hitting_times(const SimConfig& base, const std::vector<std::uint64_t>& seeds, const IndexTable& table,
                            const RelaxedSolution* relaxed, double epsilon, const StateVector& zeta, long max_t);

/// Fraction of slots in [burn_in, horizon) with ||Z[t] - zeta|| <= epsilon.
double occupancy(const SimConfig& config, const IndexTable& table, const RelaxedSolution* relaxed, double epsilon,
                 const StateVector& zeta);

/// sup_{t < T} ||Z[t] - z[t]|| with the fluid started at the empirical
/// start state. Uses config.horizon as T.
double trajectory_deviation(const SimConfig& config, const IndexTable& table, const RelaxedSolution* relaxed,
                            const FluidModel& fluid);

std::vector<std::uint64_t> seed_range(std::uint64_t first, long count);

}  // namespace whittle
