#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "whittle/belief.hpp"
#include "whittle/index.hpp"

namespace whittle {

/// Proportion of users at each coordinate of a StateLayout.
using StateVector = Eigen::VectorXd;

/// Long-run fraction of slots a single channel is active when it transmits
/// at every Off-rooted age above `threshold_age`, with probability `rho` at
/// `threshold_age`, and at every state of the stationary region.
double activation_fraction(const ChannelClass& cls, int threshold_age, double rho);

/// Same quantity from the stationary distribution of the explicit
/// single-channel belief chain (dense linear solve).
double activation_fraction_oracle(const ChannelClass& cls, int threshold_age, double rho);

/// Threshold policy followed by one class under the relaxed constraint.
struct ClassPolicy {
  int threshold_age = 1;
  double rho = 1.0;
  /// The class threshold sits at or above its stationary-region index: the
  /// class ends up never transmitting.
  bool silent = false;
};

/// Per-coordinate activation probability induced by class policies.
std::vector<double> coordinate_activation(const StateLayout& layout, const std::vector<ClassPolicy>& policy);

enum class RelaxedStatus {
  Ok,
  /// rho* == 1: the constraint is met by a deterministic threshold policy.
  RhoIsOne,
  /// omega* reaches a class's stationary-region rung; that class is
  /// transient and no stationary occupancy exists.
  Transient,
};

std::string to_string(RelaxedStatus s);

class RangeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DegenerateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Optimal policy of the average-constrained (relaxed) problem.
struct RelaxedSolution {
  ClassMix mix;
  RelaxedStatus status = RelaxedStatus::Ok;
  double omega_star = 0.0;
  /// Ladder position of the omega* rung.
  int omega_rung = -1;
  /// NaN when status == Transient.
  double rho_star = 0.0;
  std::vector<ClassPolicy> policy;
  /// Per-class long-run activation fraction A_k.
  std::vector<double> activation;
  /// Per-coordinate activation probability.
  std::vector<double> coord_activation;
  /// Class that goes silent when status == Transient, else -1.
  int transient_class = -1;
  std::vector<std::string> warnings;
  /// r(gamma, alpha); NaN when status == Transient.
  double throughput_per_user = 0.0;
  /// Empty when status == Transient.
  StateVector zeta;

  bool degenerate() const { return status == RelaxedStatus::Transient; }
  /// Classes with a state on the omega* rung (randomized classes).
  std::vector<int> randomized_classes(const IndexTable& table) const;
};

RelaxedSolution solve_relaxed(const ClassMix& mix, const IndexTable& table);

/// r(gamma, alpha) from the stationary occupancy; throws DegenerateError.
double per_user_throughput(const RelaxedSolution& solution);

/// Stationary occupancy of the relaxed policy in the full state layout,
/// class blocks summing to gamma_k; throws DegenerateError.
StateVector compute_zeta(const RelaxedSolution& solution);

}  // namespace whittle
