#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace whittle {

/// Two-state (ON/OFF) Markov channel statistics for one user class.
///
/// `p` is P(ON -> ON), `r` is P(OFF -> ON). Only positively correlated
/// channels are supported (0 < r < p < 1). `tau` is the number of idle
/// slots after which the scheduler forgets the channel history and falls
/// back to the stationary belief.
struct ChannelClass {
  double p = 0.0;
  double r = 0.0;
  int tau = 0;

  /// Validating constructor; throws std::invalid_argument.
  static ChannelClass make(double p, double r, int tau);

  double stationary_belief() const { return r / (1.0 + r - p); }
  /// Contraction factor of the idle belief map, p - r.
  double memory() const { return p - r; }

  friend bool operator==(const ChannelClass&, const ChannelClass&) = default;
};

enum class BeliefKind : std::uint8_t { OffAge, OnAge, Stationary };

/// A point of the truncated belief lattice: last observation OFF (or ON)
/// `age` slots ago, or the stationary (history forgotten) state.
struct BeliefState {
  BeliefKind kind = BeliefKind::Stationary;
  int age = 0;

  static constexpr BeliefState off(int l) { return {BeliefKind::OffAge, l}; }
  static constexpr BeliefState on(int l) { return {BeliefKind::OnAge, l}; }
  static constexpr BeliefState stationary() { return {BeliefKind::Stationary, 0}; }

  bool valid_for(int tau) const;
  std::string to_string() const;

  friend bool operator==(const BeliefState&, const BeliefState&) = default;
};

/// Closed-form belief value of `s`.
double belief_value(const ChannelClass& cls, BeliefState s);

/// Belief `l` slots after observing `last_obs`, by literally iterating the
/// one-step update pi <- pi*p + (1-pi)*r starting from p (ON) or r (OFF).
/// No truncation is applied; used to cross-check the closed forms.
double belief_value_by_iteration(const ChannelClass& cls, int last_obs, int l);

/// One idle slot: ages increase, age tau falls back to Stationary.
BeliefState step_idle(const ChannelClass& cls, BeliefState s);

/// Belief state right after a scheduled slot revealed `observed_on`.
constexpr BeliefState step_feedback(bool observed_on) {
  return observed_on ? BeliefState::on(1) : BeliefState::off(1);
}

/// Channel classes together with their population proportions and the
/// schedulable fraction alpha. One or two classes; all share one tau.
struct ClassMix {
  std::vector<ChannelClass> classes;
  std::vector<double> gamma;
  double alpha = 0.0;

  /// Validating constructor; throws std::invalid_argument.
  static ClassMix make(std::vector<ChannelClass> classes, std::vector<double> gamma, double alpha);

  int num_classes() const { return static_cast<int>(classes.size()); }
  int tau() const { return classes.front().tau; }
};

/// Coordinate layout of the system state vector. Each class owns a block
/// of 2*tau+1 entries ordered
///   [Off(1) .. Off(tau), Stationary, On(tau) .. On(1)].
class StateLayout {
 public:
  StateLayout() = default;
  StateLayout(int num_classes, int tau) : num_classes_(num_classes), tau_(tau) {}

  int tau() const { return tau_; }
  int num_classes() const { return num_classes_; }
  int block() const { return 2 * tau_ + 1; }
  int dim() const { return num_classes_ * block(); }

  int local(BeliefState s) const;
  int coord(int cls, BeliefState s) const { return cls * block() + local(s); }
  BeliefState state_at(int coord) const;
  int class_of(int coord) const { return coord / block(); }
  int block_begin(int cls) const { return cls * block(); }

 private:
  int num_classes_ = 0;
  int tau_ = 0;
};

}  // namespace whittle
