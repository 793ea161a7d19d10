#include "whittle/fluid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace whittle {

FluidModel::FluidModel(const IndexTable& table, double alpha) : table_(&table), alpha_(alpha) {}

Eigen::VectorXd FluidModel::activation_profile(const StateVector& z) const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(dim());
  double above = 0.0;
  for (const Rung& rung : table_->ladder()) {
    double mass = 0.0;
    for (int c : rung.coords) mass += z(c);
    const double remaining = alpha_ - above;
    double frac;
    if (mass > 0.0) {
      frac = std::clamp(remaining / mass, 0.0, 1.0);
    } else {
      frac = remaining > 0.0 ? 1.0 : 0.0;
    }
    for (int c : rung.coords) g(c) = frac;
    above += mass;
  }
  return g;
}

Eigen::MatrixXd FluidModel::transition_matrix(const StateVector& z) const {
  const int d = dim();
  const Eigen::VectorXd g = activation_profile(z);
  // q(i, j): one-step transition probability of a single user.
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    const int k = table_->layout().class_of(i);
    const double b = table_->belief(i);
    q(i, table_->idle_next(i)) += 1.0 - g(i);
    q(i, table_->on_reset(k)) += g(i) * b;
    q(i, table_->off_reset(k)) += g(i) * (1.0 - b);
  }
  Eigen::MatrixXd Q = q.transpose();
  for (int i = 0; i < d; ++i) Q(i, i) = -(q.row(i).sum() - q(i, i));
  return Q;
}

StateVector FluidModel::step(const StateVector& z) const {
  const int d = dim();
  const Eigen::VectorXd g = activation_profile(z);
  StateVector out = StateVector::Zero(d);
  for (int i = 0; i < d; ++i) {
    const int k = table_->layout().class_of(i);
    const double active = z(i) * g(i);
    const double on = active * table_->belief(i);
    out(table_->idle_next(i)) += z(i) - active;
    out(table_->on_reset(k)) += on;
    out(table_->off_reset(k)) += active - on;
  }
  return out;
}

StateVector FluidModel::drift(const StateVector& z) const { return step(z) - z; }

bool LinearizedSystem::in_region(const IndexTable& table, const StateVector& z) const {
  double above = 0.0, at = 0.0;
  for (int c = 0; c < z.size(); ++c) {
    const int rung = table.rung_of(c);
    if (rung < omega_rung) above += z(c);
    else if (rung == omega_rung) at += z(c);
  }
  return above < alpha && alpha <= above + at;
}

Eigen::VectorXd LinearizedSystem::reduce(const StateVector& z) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(kept.size()));
  for (std::size_t m = 0; m < kept.size(); ++m) out(static_cast<Eigen::Index>(m)) = z(kept[m]);
  return out;
}

StateVector LinearizedSystem::expand(const Eigen::VectorXd& reduced, const StateLayout& layout) const {
  StateVector z = StateVector::Zero(layout.dim());
  for (std::size_t m = 0; m < kept.size(); ++m) z(kept[m]) = reduced(static_cast<Eigen::Index>(m));
  for (int e : eliminated) {
    const int k = layout.class_of(e);
    double rest = 0.0;
    for (int c = layout.block_begin(k); c < layout.block_begin(k) + layout.block(); ++c) {
      if (c != e) rest += z(c);
    }
    z(e) = gamma[k] - rest;
  }
  return z;
}

int eliminated_coordinate(const IndexTable& table, const RelaxedSolution& solution, int cls) {
  const StateLayout& lay = table.layout();
  for (int c : table.ladder()[solution.omega_rung].coords) {
    if (lay.class_of(c) == cls) return c;
  }
  // Highest idle Off-rooted state of a class served deterministically.
  const ClassPolicy& pol = solution.policy[cls];
  const int h = pol.threshold_age;
  if (pol.rho == 0.0) return lay.coord(cls, BeliefState::off(h));
  return lay.coord(cls, BeliefState::off(std::max(1, h - 1)));
}

LinearizedSystem linearize(const FluidModel& model, const RelaxedSolution& solution) {
  if (solution.degenerate()) throw NonGenericError("relaxed solution is degenerate");
  if (solution.status == RelaxedStatus::RhoIsOne || !(solution.rho_star > 0.0 && solution.rho_star < 1.0)) {
    throw NonGenericError("non-generic alpha: rho* must lie strictly inside (0, 1)");
  }
  const IndexTable& table = model.table();
  if (table.ladder()[solution.omega_rung].coords.size() != 1) {
    throw NonGenericError("omega* rung is shared by several states; the fluid map is not affine there");
  }
  const StateLayout& lay = table.layout();
  const int d = lay.dim();
  const StateVector& zeta = solution.zeta;

  LinearizedSystem sys;
  sys.omega_rung = solution.omega_rung;
  sys.alpha = model.alpha();
  sys.gamma = solution.mix.gamma;

  double above = 0.0, at = 0.0;
  for (int c = 0; c < d; ++c) {
    if (table.rung_of(c) < sys.omega_rung) above += zeta(c);
    else if (table.rung_of(c) == sys.omega_rung) at += zeta(c);
  }
  const double margin = std::min(sys.alpha - above, above + at - sys.alpha);
  if (!(margin > 0.0)) throw NonGenericError("zeta lies on the boundary of the linear region");
  // The map is exactly affine on the region, so any step that stays inside
  // gives the same columns; a large one keeps rounding error small.
  const double h = 0.25 * margin;

  const StateVector base = model.drift(zeta);
  sys.Q_star.resize(d, d);
  for (int j = 0; j < d; ++j) {
    StateVector z = zeta;
    z(j) += h;
    sys.Q_star.col(j) = (model.drift(z) - base) / h;
  }
  sys.a_star = base - sys.Q_star * zeta;

  for (int k = 0; k < lay.num_classes(); ++k) sys.eliminated.push_back(eliminated_coordinate(table, solution, k));
  for (int c = 0; c < d; ++c) {
    if (std::find(sys.eliminated.begin(), sys.eliminated.end(), c) == sys.eliminated.end()) sys.kept.push_back(c);
  }
  const int n = static_cast<int>(sys.kept.size());
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(d, n);
  Eigen::VectorXd offset = Eigen::VectorXd::Zero(d);
  for (int m = 0; m < n; ++m) {
    const int c = sys.kept[m];
    P(c, m) = 1.0;
    const int e = sys.eliminated[lay.class_of(c)];
    P(e, m) = -1.0;
  }
  for (int e : sys.eliminated) offset(e) = sys.gamma[lay.class_of(e)];

  Eigen::MatrixXd rows(n, d);
  Eigen::VectorXd a_rows(n);
  for (int m = 0; m < n; ++m) {
    rows.row(m) = sys.Q_star.row(sys.kept[m]);
    a_rows(m) = sys.a_star(sys.kept[m]);
  }
  sys.U_star = rows * P;
  sys.b_star = rows * offset + a_rows;
  return sys;
}

AnalyticBlocks analytic_blocks(const RelaxedSolution& solution, const IndexTable& table) {
  if (solution.degenerate() || solution.status != RelaxedStatus::Ok) {
    throw AnalyticFormUnavailable("analytic form needs a non-degenerate solution with rho* in (0, 1)");
  }
  const auto& rung = table.ladder()[solution.omega_rung];
  if (rung.coords.size() != 1) throw AnalyticFormUnavailable("omega* rung is shared by several states");
  const StateLayout& lay = table.layout();
  const int tau = lay.tau();
  const int r = lay.class_of(rung.coords.front());
  const int o = 1 - r;
  const int nk = 2 * tau;
  if (lay.num_classes() == 2) {
    const ClassPolicy& po = solution.policy[o];
    if (po.silent || po.rho != 1.0 || po.threshold_age < 2) {
      throw AnalyticFormUnavailable("analytic form needs the deterministic class to idle at Off(1)");
    }
  }

  // Kept coordinates of a class block, ascending; `skip` is eliminated.
  auto kept_of = [&](int k, int skip) {
    std::vector<int> out;
    for (int c = lay.block_begin(k); c < lay.block_begin(k) + lay.block(); ++c) {
      if (c != skip) out.push_back(c);
    }
    return out;
  };
  auto belief = [&](int c) { return table.belief(c); };
  auto is_active = [&](int c) { return solution.coord_activation[c] == 1.0; };

  AnalyticBlocks out;
  out.randomized_class = r;

  // Randomized class: threshold h with randomization at Off(h).
  {
    const int h = solution.policy[r].threshold_age;
    const int elim = lay.coord(r, BeliefState::off(h));
    const double bh = belief(elim);
    const int nxt = table.idle_next(elim);
    const int off1 = lay.coord(r, BeliefState::off(1));
    const int on1 = lay.coord(r, BeliefState::on(1));
    const auto kept = kept_of(r, elim);
    out.Q_randomized = Eigen::MatrixXd::Zero(nk, nk);
    for (int a = 0; a < nk; ++a) {
      const int i = kept[a];
      for (int b = 0; b < nk; ++b) {
        const int j = kept[b];
        double v = 0.0;
        if (i == off1) {
          if (j == off1) v = -1.0;
          else if (is_active(j)) v = bh - belief(j);
        } else if (i == nxt) {
          if (!is_active(j) || j == i) v = -1.0;
        } else if (i == on1) {
          if (is_active(j)) v = belief(j) - bh - (j == i ? 1.0 : 0.0);
        } else if (!is_active(i)) {
          // Idle Off(l), 2 <= l < h: pure aging.
          if (j == i) v = -1.0;
          else if (table.idle_next(j) == i) v = 1.0;
        } else if (j == i) {
          v = -1.0;
        }
        out.Q_randomized(a, b) = v;
      }
    }

    if (lay.num_classes() == 2) {
      const int ho = solution.policy[o].threshold_age;
      const int elim_o = lay.coord(o, BeliefState::off(ho - 1));
      const int off1_o = lay.coord(o, BeliefState::off(1));
      const int on1_o = lay.coord(o, BeliefState::on(1));
      const int head_o = lay.coord(o, BeliefState::off(ho));
      const auto kept_o = kept_of(o, elim_o);
      out.Q_other = Eigen::MatrixXd::Zero(nk, nk);
      out.B = Eigen::MatrixXd::Zero(nk, nk);
      for (int a = 0; a < nk; ++a) {
        const int i = kept_o[a];
        for (int b = 0; b < nk; ++b) {
          const int j = kept_o[b];
          double v = 0.0;
          if (i == off1_o) {
            if (j == off1_o) v = -1.0;
            else if (is_active(j)) v = 1.0 - belief(j);
          } else if (i == head_o) {
            v = j == i ? -2.0 : -1.0;
          } else if (i == on1_o) {
            if (is_active(j)) v = belief(j) - (j == i ? 1.0 : 0.0);
          } else if (!is_active(i)) {
            if (j == i) v = -1.0;
            else if (table.idle_next(j) == i) v = 1.0;
          } else if (j == i) {
            v = -1.0;
          }
          out.Q_other(a, b) = v;
        }
      }
      for (int a = 0; a < nk; ++a) {
        const int i = kept[a];
        for (int b = 0; b < nk; ++b) {
          if (!is_active(kept_o[b])) continue;
          if (i == off1) out.B(a, b) = bh - 1.0;
          else if (i == nxt) out.B(a, b) = 1.0;
          else if (i == on1) out.B(a, b) = -bh;
        }
      }
    }
  }

  const int n = lay.num_classes() * nk;
  out.U_star = Eigen::MatrixXd::Zero(n, n);
  out.U_star.block(r * nk, r * nk, nk, nk) = out.Q_randomized;
  if (lay.num_classes() == 2) {
    out.U_star.block(o * nk, o * nk, nk, nk) = out.Q_other;
    out.U_star.block(r * nk, o * nk, nk, nk) = out.B;
  }
  return out;
}

StabilityCertificate stability_certificate(const Eigen::MatrixXd& U_star, std::vector<int> powers) {
  std::sort(powers.begin(), powers.end());
  const Eigen::MatrixXd M = U_star + Eigen::MatrixXd::Identity(U_star.rows(), U_star.cols());
  StabilityCertificate cert;
  Eigen::MatrixXd P = M;
  int k = 1;
  for (int target : powers) {
    while (k < target) {
      if (2 * k <= target) {
        P = P * P;
        k *= 2;
      } else {
        P = P * M;
        k += 1;
      }
    }
    const double norm = P.norm();
    cert.estimates.emplace_back(target, std::pow(norm, 1.0 / target));
  }
  cert.certified = !cert.estimates.empty();
  for (std::size_t i = 0; i < cert.estimates.size(); ++i) {
    if (!(cert.estimates[i].second < 1.0)) cert.certified = false;
    if (i > 0 && cert.estimates[i].second > cert.estimates[i - 1].second) cert.certified = false;
  }
  return cert;
}

FluidTrajectory fluid_trajectory(const FluidModel& model, const StateVector& z0, long steps, const StateVector& zeta,
                                 const LinearizedSystem* region, long stride) {
  FluidTrajectory traj;
  traj.distance.reserve(static_cast<std::size_t>(steps) + 1);
  StateVector z = z0;
  auto record = [&](long t) {
    traj.distance.push_back((z - zeta).norm());
    if (region && !region->in_region(model.table(), z)) traj.stayed_in_region = false;
    if (stride > 0 && (t % stride == 0 || t == steps)) traj.states.emplace_back(t, z);
  };
  record(0);
  for (long t = 1; t <= steps; ++t) {
    z = model.step(z);
    record(t);
  }
  traj.final_state = z;
  return traj;
}

}  // namespace whittle

namespace whittle {

StateVector perturb_within_simplex(const StateVector& zeta, const StateLayout& layout, double delta,
                                   std::uint64_t seed) {
  if (delta == 0.0) return zeta;
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  StateVector v = StateVector::Zero(zeta.size());
  for (int k = 0; k < layout.num_classes(); ++k) {
    std::vector<int> support;
    for (int c = layout.block_begin(k); c < layout.block_begin(k) + layout.block(); ++c) {
      if (zeta(c) > 0.0) support.push_back(c);
    }
    if (support.size() < 2) continue;
    double mean = 0.0;
    for (int c : support) {
      v(c) = normal(gen);
      mean += v(c);
    }
    mean /= static_cast<double>(support.size());
    for (int c : support) v(c) -= mean;
  }
  if (!(v.norm() > 0.0)) throw std::invalid_argument("zeta has no room for a class-preserving perturbation");
  const StateVector z = zeta + delta / v.norm() * v;
  if (z.minCoeff() < 0.0) throw std::invalid_argument("perturbation leaves the simplex; use a smaller delta");
  return z;
}

}  // namespace whittle
