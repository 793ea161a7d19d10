#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "whittle/index.hpp"
#include "whittle/relaxed.hpp"

namespace whittle {

/// Deterministic mean-field dynamics of the state vector under Whittle's
/// index policy with a hard activation budget alpha.
class FluidModel {
 public:
  FluidModel(const IndexTable& table, double alpha);

  const IndexTable& table() const { return *table_; }
  double alpha() const { return alpha_; }
  int dim() const { return table_->dim(); }

  /// Fraction of mass activated at every coordinate. Rungs are served in
  /// descending index order; tied coordinates share a common fraction.
  Eigen::VectorXd activation_profile(const StateVector& z) const;

  /// Q(z): columns sum to zero and step(z) = z + Q(z) z.
  Eigen::MatrixXd transition_matrix(const StateVector& z) const;

  /// Q(z) z, evaluated by pushing mass along at most three edges per state.
  StateVector drift(const StateVector& z) const;

  StateVector step(const StateVector& z) const;

 private:
  const IndexTable* table_;
  double alpha_;
};

/// Affine form of the fluid map on the region where exactly the indices
/// at or above omega* are served.
struct LinearizedSystem {
  Eigen::MatrixXd Q_star;
  Eigen::VectorXd a_star;
  Eigen::MatrixXd U_star;
  Eigen::VectorXd b_star;
  /// Coordinates dropped by the class-sum identities (one per class).
  std::vector<int> eliminated;
  /// Coordinates kept in the reduced vector, ascending.
  std::vector<int> kept;
  int omega_rung = -1;
  double alpha = 0.0;
  std::vector<double> gamma;

  /// sum_{w > w*} z < alpha <= sum_{w >= w*} z.
  bool in_region(const IndexTable& table, const StateVector& z) const;
  Eigen::VectorXd reduce(const StateVector& z) const;
  StateVector expand(const Eigen::VectorXd& reduced, const StateLayout& layout) const;
};

class NonGenericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Extract Q*, a* by differencing the fluid map at zeta and reduce them.
/// Throws NonGenericError when zeta is on the region boundary (rho* in
/// {0, 1}) or the omega* rung holds more than one coordinate.
LinearizedSystem linearize(const FluidModel& model, const RelaxedSolution& solution);

/// Coordinate eliminated for class `cls` by linearize().
int eliminated_coordinate(const IndexTable& table, const RelaxedSolution& solution, int cls);

/// Closed-form blocks of U*: the randomized class block, the other class
/// block and the coupling B, assembled in the natural class order.
struct AnalyticBlocks {
  int randomized_class = 0;
  Eigen::MatrixXd Q_randomized;
  Eigen::MatrixXd Q_other;
  Eigen::MatrixXd B;
  Eigen::MatrixXd U_star;
};

class AnalyticFormUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

AnalyticBlocks analytic_blocks(const RelaxedSolution& solution, const IndexTable& table);

/// Gelfand-formula estimates of the spectral radius of U* + I.
struct StabilityCertificate {
  std::vector<std::pair<int, double>> estimates;
  bool certified = false;
};

StabilityCertificate stability_certificate(const Eigen::MatrixXd& U_star, std::vector<int> powers = {64, 128, 256});

struct FluidTrajectory {
  /// ||z[t] - zeta||_2 for t = 0..T.
  std::vector<double> distance;
  /// Stored states (every `stride`-th step, plus the last); may be empty.
  std::vector<std::pair<long, StateVector>> states;
  bool stayed_in_region = true;
  StateVector final_state;
};

FluidTrajectory fluid_trajectory(const FluidModel& model, const StateVector& z0, long steps, const StateVector& zeta,
                                 const LinearizedSystem* region = nullptr, long stride = 0);

}  // namespace whittle

namespace whittle {

/// zeta moved by exactly `delta` (Euclidean) along a seeded random direction
/// that keeps class sums and stays on the support of zeta. Throws
/// std::invalid_argument when the move would leave the simplex.
StateVector perturb_within_simplex(const StateVector& zeta, const StateLayout& layout, double delta,
                                   std::uint64_t seed);

}  // namespace whittle
