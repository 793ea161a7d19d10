#include "whittle/index.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace whittle {

double stationary_region_index(const ChannelClass& cls) {
  return cls.r / ((1.0 - cls.p) * (1.0 + cls.r - cls.p) + cls.r);
}

double whittle_index(const ChannelClass& cls, BeliefState s) {
  if (s.kind != BeliefKind::OffAge) return stationary_region_index(cls);
  // Untruncated b_{0,l+1} even at l = tau: the index is a property of the
  // belief value, not of the truncated successor.
  const int l = s.age;
  const double b = belief_value(cls, BeliefState::off(l));
  const double b_next = belief_value(cls, BeliefState::off(l + 1));
  const double gap = b - b_next;
  return (gap * (l + 1) + b_next) / (1.0 - cls.p + gap * l + b_next);
}

double subsidy_value(const ChannelClass& cls, double omega, int threshold_age) {
  const int l = threshold_age;
  const double b = belief_value(cls, BeliefState::off(l));
  return (b + omega * (1.0 - cls.p) * (l - 1)) / (b + (1.0 - cls.p) * l);
}

namespace {

// Self-loop weight applied to every transition so that relative value
// iteration also converges on the periodic aging cycles.
constexpr double kAperiodicity = 0.5;

}  // namespace

SubsidySolution solve_subsidy_problem(const ChannelClass& cls, double omega, double span_tol, long max_iter) {
  const StateLayout layout(1, cls.tau);
  const int n = layout.block();
  std::vector<double> belief(n);
  std::vector<int> idle(n);
  for (int c = 0; c < n; ++c) {
    const BeliefState s = layout.state_at(c);
    belief[c] = belief_value(cls, s);
    idle[c] = layout.local(step_idle(cls, s));
  }
  const int on1 = layout.local(BeliefState::on(1));
  const int off1 = layout.local(BeliefState::off(1));
  const int ref = layout.local(BeliefState::stationary());

  std::vector<double> h(n, 0.0), next(n);
  SubsidySolution sol;
  sol.omega = omega;
  for (long it = 1; it <= max_iter; ++it) {
    double lo = INFINITY, hi = -INFINITY;
    for (int c = 0; c < n; ++c) {
      const double passive = omega + kAperiodicity * h[idle[c]];
      const double active = belief[c] + kAperiodicity * (belief[c] * h[on1] + (1.0 - belief[c]) * h[off1]);
      next[c] = std::max(passive, active) + (1.0 - kAperiodicity) * h[c];
      const double d = next[c] - h[c];
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
    const double shift = next[ref];
    for (int c = 0; c < n; ++c) h[c] = next[c] - shift;
    if (hi - lo < span_tol) {
      sol.gain = 0.5 * (hi + lo);
      sol.iterations = it;
      sol.advantage.resize(n);
      for (int c = 0; c < n; ++c) {
        const double active = belief[c] + kAperiodicity * (belief[c] * h[on1] + (1.0 - belief[c]) * h[off1]);
        const double passive = omega + kAperiodicity * h[idle[c]];
        sol.advantage[c] = active - passive;
      }
      return sol;
    }
  }
  throw ConvergenceError("relative value iteration did not converge for omega=" + std::to_string(omega) +
                         " after " + std::to_string(max_iter) + " iterations");
}

double whittle_index_oracle(const ChannelClass& cls, BeliefState s, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("oracle tolerance must be positive");
  const int c = StateLayout(1, cls.tau).local(s);
  double lo = 0.0, hi = 1.0;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (solve_subsidy_problem(cls, mid).advantage[c] > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

IndexTable::IndexTable(const ClassMix& mix) : mix_(mix), layout_(mix.num_classes(), mix.tau()) {
  const int d = layout_.dim();
  belief_.resize(d);
  index_.resize(d);
  idle_next_.resize(d);
  for (int c = 0; c < d; ++c) {
    const int k = layout_.class_of(c);
    const ChannelClass& cls = mix_.classes[k];
    const BeliefState s = layout_.state_at(c);
    belief_[c] = belief_value(cls, s);
    index_[c] = whittle_index(cls, s);
    idle_next_[c] = layout_.coord(k, step_idle(cls, s));
  }

  std::vector<int> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return index_[a] > index_[b]; });
  rung_of_.assign(d, -1);
  for (int c : order) {
    if (ladder_.empty() || ladder_.back().value - index_[c] > kTieTolerance) {
      ladder_.push_back(Rung{index_[c], {}});
    }
    ladder_.back().coords.push_back(c);
    rung_of_[c] = static_cast<int>(ladder_.size()) - 1;
  }
  for (auto& rung : ladder_) std::sort(rung.coords.begin(), rung.coords.end());
}

int IndexTable::top_rung(int cls) const { return rung_of_[layout_.coord(cls, BeliefState::stationary())]; }

}  // namespace whittle
