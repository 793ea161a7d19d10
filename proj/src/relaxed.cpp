#include "whittle/relaxed.hpp"

#include <cmath>
#include <limits>

namespace whittle {

namespace {

// Belief one idle slot after Off(h) on the truncated lattice.
double next_off_belief(const ChannelClass& cls, int h) {
  return belief_value(cls, step_idle(cls, BeliefState::off(h)));
}

void check_threshold(const ChannelClass& cls, int h, double rho) {
  if (h < 1 || h > cls.tau) throw std::invalid_argument("threshold age must lie in [1, tau]");
  if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("rho must lie in [0, 1]");
}

double class_activation(const ChannelClass& cls, const ClassPolicy& pol) {
  return pol.silent ? 0.0 : activation_fraction(cls, pol.threshold_age, pol.rho);
}

// Policy of class k when the threshold sits on ladder rung j, randomizing
// with probability rho on that rung.
ClassPolicy policy_at_rung(const IndexTable& table, int k, int j, double rho) {
  const StateLayout& lay = table.layout();
  const int tau = lay.tau();
  if (j <= table.top_rung(k)) return ClassPolicy{tau, 0.0, true};
  for (int l = 1; l <= tau; ++l) {
    const int rung = table.rung_of(lay.coord(k, BeliefState::off(l)));
    if (rung == j) return ClassPolicy{l, rho, false};
    if (rung < j) return ClassPolicy{l, 1.0, false};
  }
  // Threshold between Off(tau) and the stationary region: only the
  // truncation fallback to Stationary brings the class back into service.
  return ClassPolicy{tau, 0.0, false};
}

std::vector<ClassPolicy> policies_at_rung(const IndexTable& table, int j, double rho) {
  std::vector<ClassPolicy> out;
  for (int k = 0; k < table.mix().num_classes(); ++k) out.push_back(policy_at_rung(table, k, j, rho));
  return out;
}

double total_activation(const ClassMix& mix, const std::vector<ClassPolicy>& pol) {
  double s = 0.0;
  for (int k = 0; k < mix.num_classes(); ++k) s += mix.gamma[k] * class_activation(mix.classes[k], pol[k]);
  return s;
}

}  // namespace

double activation_fraction(const ChannelClass& cls, int threshold_age, double rho) {
  check_threshold(cls, threshold_age, rho);
  const int h = threshold_age;
  const double idle_cycle = (1.0 - cls.p) * (h - rho);
  const double denom = rho * belief_value(cls, BeliefState::off(h)) + (1.0 - rho) * next_off_belief(cls, h) +
                       (1.0 - cls.p) * (h + 1 - rho);
  return 1.0 - idle_cycle / denom;
}

double activation_fraction_oracle(const ChannelClass& cls, int threshold_age, double rho) {
  check_threshold(cls, threshold_age, rho);
  const StateLayout lay(1, cls.tau);
  const int n = lay.block();
  const std::vector<double> act = coordinate_activation(lay, {ClassPolicy{threshold_age, rho, false}});
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
  const int on1 = lay.local(BeliefState::on(1));
  const int off1 = lay.local(BeliefState::off(1));
  for (int c = 0; c < n; ++c) {
    const BeliefState s = lay.state_at(c);
    const double b = belief_value(cls, s);
    P(c, lay.local(step_idle(cls, s))) += 1.0 - act[c];
    P(c, on1) += act[c] * b;
    P(c, off1) += act[c] * (1.0 - b);
  }
  Eigen::MatrixXd A = P.transpose() - Eigen::MatrixXd::Identity(n, n);
  A.row(n - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(n - 1) = 1.0;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  if (!lu.isInvertible()) throw std::runtime_error("singular belief chain");
  const Eigen::VectorXd pi = lu.solve(rhs);
  double a = 0.0;
  for (int c = 0; c < n; ++c) a += pi(c) * act[c];
  return a;
}

std::vector<double> coordinate_activation(const StateLayout& layout, const std::vector<ClassPolicy>& policy) {
  std::vector<double> act(layout.dim(), 0.0);
  for (int c = 0; c < layout.dim(); ++c) {
    const ClassPolicy& pol = policy[layout.class_of(c)];
    if (pol.silent) continue;
    const BeliefState s = layout.state_at(c);
    if (s.kind != BeliefKind::OffAge || s.age > pol.threshold_age) {
      act[c] = 1.0;
    } else if (s.age == pol.threshold_age) {
      act[c] = pol.rho;
    }
  }
  return act;
}

std::string to_string(RelaxedStatus s) {
  switch (s) {
    case RelaxedStatus::Ok: return "ok";
    case RelaxedStatus::RhoIsOne: return "rho_is_one";
    case RelaxedStatus::Transient: return "transient";
  }
  return "?";
}

std::vector<int> RelaxedSolution::randomized_classes(const IndexTable& table) const {
  std::vector<int> out;
  if (omega_rung < 0) return out;
  for (int k = 0; k < mix.num_classes(); ++k) {
    for (int c : table.ladder()[omega_rung].coords) {
      if (table.layout().class_of(c) == k) {
        out.push_back(k);
        break;
      }
    }
  }
  return out;
}

RelaxedSolution solve_relaxed(const ClassMix& mix, const IndexTable& table) {
  const double alpha = mix.alpha;
  const int rungs = static_cast<int>(table.ladder().size());
  // All users active at the lowest rung; the mix invariant keeps alpha <= 1.
  const double capacity = total_activation(mix, policies_at_rung(table, rungs - 1, 1.0));
  if (!(alpha > 0.0) || alpha > capacity + 1e-12) {
    throw RangeError("alpha outside (0, capacity]");
  }

  RelaxedSolution sol;
  sol.mix = mix;
  int j = 0;
  for (; j < rungs; ++j) {
    if (total_activation(mix, policies_at_rung(table, j, 1.0)) >= alpha - 1e-12) break;
  }
  // Below a class's stationary-region rung the class switches from silent
  // to cycling through the truncation fallback, so the activation curve
  // jumps there; alpha inside the jump belongs to the rung above.
  if (j > 0 && total_activation(mix, policies_at_rung(table, j, 0.0)) > alpha + 1e-12) --j;
  sol.omega_rung = j;
  sol.omega_star = table.ladder()[j].value;

  for (int k = 0; k < mix.num_classes(); ++k) {
    if (j <= table.top_rung(k)) {
      sol.status = RelaxedStatus::Transient;
      sol.transient_class = k;
      sol.warnings.push_back("transient class " + std::to_string(k) +
                             ": omega* is at or above its stationary-region index; the class goes silent");
    }
  }
  if (sol.status == RelaxedStatus::Transient) {
    sol.rho_star = std::numeric_limits<double>::quiet_NaN();
    sol.throughput_per_user = std::numeric_limits<double>::quiet_NaN();
    sol.policy = policies_at_rung(table, j, 1.0);
    for (int k = 0; k < mix.num_classes(); ++k) sol.activation.push_back(class_activation(mix.classes[k], sol.policy[k]));
    sol.coord_activation = coordinate_activation(table.layout(), sol.policy);
    return sol;
  }

  const double full = total_activation(mix, policies_at_rung(table, j, 1.0));
  if (std::abs(full - alpha) <= 1e-12) {
    sol.rho_star = 1.0;
    sol.status = RelaxedStatus::RhoIsOne;
    sol.warnings.push_back(j == rungs - 1 ? "capacity boundary: every user is always active, rho* = 1"
                                          : "rho* = 1: the constraint is met by a deterministic threshold");
  } else {
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      if (total_activation(mix, policies_at_rung(table, j, mid)) < alpha) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    const double f_lo = total_activation(mix, policies_at_rung(table, j, lo)) - alpha;
    const double f_hi = total_activation(mix, policies_at_rung(table, j, hi)) - alpha;
    sol.rho_star = std::abs(f_lo) < std::abs(f_hi) ? lo : hi;
  }

  sol.policy = policies_at_rung(table, j, sol.rho_star);
  for (int k = 0; k < mix.num_classes(); ++k) sol.activation.push_back(class_activation(mix.classes[k], sol.policy[k]));
  sol.coord_activation = coordinate_activation(table.layout(), sol.policy);
  sol.zeta = compute_zeta(sol);
  sol.throughput_per_user = per_user_throughput(sol);
  return sol;
}

StateVector compute_zeta(const RelaxedSolution& solution) {
  if (solution.degenerate()) throw DegenerateError("no stationary occupancy: a class is transient");
  const ClassMix& mix = solution.mix;
  const StateLayout lay(mix.num_classes(), mix.tau());
  StateVector zeta = StateVector::Zero(lay.dim());
  for (int k = 0; k < mix.num_classes(); ++k) {
    const ChannelClass& cls = mix.classes[k];
    const ClassPolicy& pol = solution.policy[k];
    const int h = pol.threshold_age;
    const double rho = pol.rho;
    // Recurrent cycle: On(1) -> ... -> Off(1) -> idle through Off(h) ->
    // (with prob 1-rho) one more idle slot -> active again.
    const double feedback = rho * belief_value(cls, BeliefState::off(h)) + (1.0 - rho) * next_off_belief(cls, h);
    const double m0 = (1.0 - cls.p) / (feedback + (1.0 - cls.p) * (h + 1 - rho));
    for (int l = 1; l <= h; ++l) zeta(lay.coord(k, BeliefState::off(l))) = mix.gamma[k] * m0;
    zeta(lay.coord(k, step_idle(cls, BeliefState::off(h)))) += mix.gamma[k] * (1.0 - rho) * m0;
    zeta(lay.coord(k, BeliefState::on(1))) += mix.gamma[k] * m0 * feedback / (1.0 - cls.p);
  }
  return zeta;
}

double per_user_throughput(const RelaxedSolution& solution) {
  if (solution.degenerate()) throw DegenerateError("no per-user throughput: a class is transient");
  const StateVector zeta = solution.zeta.size() ? solution.zeta : compute_zeta(solution);
  const StateLayout lay(solution.mix.num_classes(), solution.mix.tau());
  double r = 0.0;
  for (int c = 0; c < lay.dim(); ++c) {
    const double b = belief_value(solution.mix.classes[lay.class_of(c)], lay.state_at(c));
    r += zeta(c) * b * solution.coord_activation[c];
  }
  return r;
}

}  // namespace whittle
