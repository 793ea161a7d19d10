#pragma once

#include <cstdint>
#include <vector>

#include "whittle/index.hpp"
#include "whittle/relaxed.hpp"

namespace whittle {

enum class Policy { Whittle, Relaxed };

enum class StartKind {
  /// Every user just observed its channel OFF.
  AllOff,
  /// No observation yet: every user at the stationary belief.
  AllStationary,
  /// A given state vector, rounded onto the 1/N lattice.
  Explicit,
};

struct InitialState {
  StartKind kind = StartKind::AllStationary;
  StateVector z;

  static InitialState all_off() { return {StartKind::AllOff, {}}; }
  static InitialState all_stationary() { return {StartKind::AllStationary, {}}; }
  static InitialState at(StateVector z) { return {StartKind::Explicit, std::move(z)}; }
};

/// Serial is the reference kernel; Parallel splits the per-user passes over
/// OpenMP threads and produces bit-identical results.
enum class Kernel { Serial, Parallel };

struct SimConfig {
  ClassMix mix;
  long N = 0;
  long horizon = 1;
  std::uint64_t seed = 0;
  Policy policy = Policy::Whittle;
  InitialState start;
  /// Slots excluded from the accumulators; negative means horizon / 10.
  long burn_in = -1;
  Kernel kernel = Kernel::Serial;

  long effective_burn_in() const { return burn_in >= 0 ? burn_in : horizon / 10; }
  /// Users per class (gamma_k N, which must be an integer).
  std::vector<long> class_sizes() const;
  /// alpha N, which must be an integer.
  long slots_per_step() const;
  /// Throws std::invalid_argument on non-integral alpha N / gamma_k N.
  void validate() const;
};

/// Per-class user counts at each coordinate for a state vector: floors of
/// z_c N with the remainder of each class handed out by largest fractional
/// part. Throws when class sums differ from gamma_k.
std::vector<long> lattice_counts(const StateVector& z, const StateLayout& layout, const std::vector<long>& class_sizes);

struct StepMetrics {
  long scheduled = 0;
  long successes = 0;
  /// Sum of beliefs of the scheduled users.
  double belief_reward = 0.0;
};

class SimRun {
 public:
  /// `relaxed` is required for Policy::Relaxed and must be non-degenerate.
  SimRun(const SimConfig& config, const IndexTable& table, const RelaxedSolution* relaxed = nullptr);

  StepMetrics step();
  void run(long slots);

  long time() const { return t_; }
  long N() const { return config_.N; }
  const SimConfig& config() const { return config_; }

  /// Users per coordinate at the current slot.
  const std::vector<long>& counts() const { return counts_; }
  StateVector empirical_state() const;

  int coord_of(long user) const { return coord_[user]; }
  int channel_of(long user) const { return chan_[user]; }
  int class_of(long user) const;
  /// Activation decisions of the last step, one per user.
  const std::vector<std::uint8_t>& last_active() const { return active_; }

  /// Accumulated over slots t >= burn_in.
  struct Totals {
    long slots = 0;
    long activations = 0;
    long successes = 0;
    /// Activations per coordinate; the belief reward is their dot product
    /// with the beliefs, so it is exact and independent of the kernel.
    std::vector<long long> active_per_coord;
    double belief_reward(const IndexTable& table) const;
  };
  const Totals& totals() const { return totals_; }

  /// Per-user per-slot averages over the accumulated slots.
  double belief_throughput() const;
  double realized_throughput() const;
  double activation_rate() const;

 private:
  void schedule_whittle();
  void schedule_relaxed();
  void advance(StepMetrics& out);

  SimConfig config_;
  const IndexTable* table_;
  const RelaxedSolution* relaxed_;
  long t_ = 0;
  long k_slots_ = 0;

  std::vector<std::uint16_t> coord_;
  std::vector<std::uint8_t> chan_;
  std::vector<std::uint8_t> active_;
  std::vector<long> counts_;

  // Per-coordinate lookups.
  std::vector<int> idle_next_, reset_on_, reset_off_, rung_, cls_;
  std::vector<std::uint64_t> stay_on_thr_, turn_on_thr_, act_thr_;
  std::vector<double> act_prob_;
  std::vector<std::uint16_t> next_;
  std::vector<std::uint64_t> chan_thr_;
  std::vector<std::uint8_t> always_;

  std::vector<std::pair<std::uint64_t, std::uint32_t>> boundary_;
  Totals totals_;
};

/// Exactly k users with the largest indices; ties on the boundary rung are
/// broken by uniform random keys derived from (seed, slot). Returns a 0/1
/// flag per user.
std::vector<std::uint8_t> schedule_whittle(const std::vector<int>& coords, const IndexTable& table, long k,
                                           std::uint64_t seed, std::uint64_t slot);

/// Independent per-user decisions of the relaxed policy: active above
/// omega*, Bernoulli(rho*) on the omega* rung, idle below.
std::vector<std::uint8_t> schedule_relaxed(const std::vector<int>& coords, const RelaxedSolution& solution,
                                           std::uint64_t seed, std::uint64_t slot);

}  // namespace whittle
