#pragma once

#include <stdexcept>
#include <vector>

#include "whittle/belief.hpp"

namespace whittle {

/// Closed-form Whittle index of belief state `s`.
///
/// Off-rooted states use the indifference formula between activation
/// thresholds at ages l and l+1; every state with belief at or above the
/// stationary belief (On-rooted states and Stationary) shares the limit
/// value r / ((1-p)(1+r-p) + r).
double whittle_index(const ChannelClass& cls, BeliefState s);

/// Index shared by all states at or above the stationary belief.
double stationary_region_index(const ChannelClass& cls);

/// Long-run reward-plus-subsidy of the single-channel policy that transmits
/// at every belief >= b_{0,l} and idles below it, under subsidy omega.
double subsidy_value(const ChannelClass& cls, double omega, int threshold_age);

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Result of solving the single-channel omega-subsidy problem on the
/// truncated lattice (indexed by local coordinate, see StateLayout).
struct SubsidySolution {
  double omega = 0.0;
  double gain = 0.0;
  /// Q(active) - Q(passive) per local coordinate.
  std::vector<double> advantage;
  long iterations = 0;

  bool active(int local, double eps = 1e-9) const { return advantage[local] > eps; }
  bool passive(int local, double eps = 1e-9) const { return advantage[local] < -eps; }
};

/// Average-reward relative value iteration for the omega-subsidy problem.
/// Throws ConvergenceError when the span stop is not met within max_iter.
SubsidySolution solve_subsidy_problem(const ChannelClass& cls, double omega, double span_tol = 1e-10,
                                      long max_iter = 1'000'000);

/// Index computed independently of the closed form: bisection over the
/// subsidy for the point where the optimal action at `s` flips.
double whittle_index_oracle(const ChannelClass& cls, BeliefState s, double tol);

/// One rung of the merged index ladder: a distinct index value and every
/// state-vector coordinate attaining it.
struct Rung {
  double value = 0.0;
  std::vector<int> coords;
};

/// Belief and index values for every coordinate of a ClassMix layout, plus
/// the descending ladder of distinct index values.
class IndexTable {
 public:
  /// Index values closer than this are merged into one rung.
  static constexpr double kTieTolerance = 1e-12;

  explicit IndexTable(const ClassMix& mix);

  const ClassMix& mix() const { return mix_; }
  const StateLayout& layout() const { return layout_; }
  int dim() const { return layout_.dim(); }

  double belief(int coord) const { return belief_[coord]; }
  double index(int coord) const { return index_[coord]; }
  const std::vector<double>& beliefs() const { return belief_; }
  const std::vector<double>& indices() const { return index_; }

  /// Rungs in descending index order.
  const std::vector<Rung>& ladder() const { return ladder_; }
  /// Position in ladder() of the rung containing `coord` (0 = highest).
  int rung_of(int coord) const { return rung_of_[coord]; }
  /// Rung holding the stationary-region states of class `cls`.
  int top_rung(int cls) const;

  /// Coordinate reached after one idle slot.
  int idle_next(int coord) const { return idle_next_[coord]; }
  int on_reset(int cls) const { return layout_.coord(cls, BeliefState::on(1)); }
  int off_reset(int cls) const { return layout_.coord(cls, BeliefState::off(1)); }

 private:
  ClassMix mix_;
  StateLayout layout_;
  std::vector<double> belief_;
  std::vector<double> index_;
  std::vector<int> idle_next_;
  std::vector<Rung> ladder_;
  std::vector<int> rung_of_;
};

inline IndexTable build_index_table(const ClassMix& mix) { return IndexTable(mix); }

}  // namespace whittle
