#include <doctest.h>

#include <cmath>

#include "whittle/relaxed.hpp"

using namespace whittle;

namespace {

ClassMix single(double alpha) { return ClassMix::make({ChannelClass::make(0.8, 0.2, 16)}, {1.0}, alpha); }

ClassMix two_class() {
  return ClassMix::make({ChannelClass::make(0.9, 0.45, 16), ChannelClass::make(0.8, 0.3, 16)}, {0.45, 0.55}, 0.6);
}

// Stationary distribution of one class's belief chain under its policy,
// by dense linear solve on the full truncated lattice.
Eigen::VectorXd chain_stationary(const ChannelClass& cls, const std::vector<double>& act) {
  const StateLayout lay(1, cls.tau);
  const int n = lay.block();
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
  for (int c = 0; c < n; ++c) {
    const BeliefState s = lay.state_at(c);
    const double b = belief_value(cls, s);
    P(c, lay.local(step_idle(cls, s))) += 1.0 - act[c];
    P(c, lay.local(BeliefState::on(1))) += act[c] * b;
    P(c, lay.local(BeliefState::off(1))) += act[c] * (1.0 - b);
  }
  // Power iteration from uniform: slow but independent of LU code paths.
  Eigen::VectorXd pi = Eigen::VectorXd::Constant(n, 1.0 / n);
  for (int it = 0; it < 200000; ++it) pi = 0.5 * pi + 0.5 * (P.transpose() * pi);
  return pi;
}

}  // namespace

TEST_CASE("activation fraction examples") {
  const ChannelClass c = ChannelClass::make(0.8, 0.2, 16);
  CHECK(activation_fraction(c, 1, 1.0) == doctest::Approx(1.0));
  CHECK(activation_fraction(c, 2, 1.0) == doctest::Approx(2.6 / 3.6).epsilon(1e-14));
  CHECK(activation_fraction(c, 1, 1.0 / 6.0) == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(activation_fraction_oracle(c, 2, 1.0) == doctest::Approx(2.6 / 3.6).epsilon(1e-12));
  CHECK(activation_fraction_oracle(c, 1, 1.0 / 6.0) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK_THROWS_AS(activation_fraction(c, 0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(activation_fraction(c, 17, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(activation_fraction(c, 3, 1.5), std::invalid_argument);
}

TEST_CASE("activation fraction matches the chain oracle and is monotone") {
  for (double p : {0.65, 0.8, 0.95}) {
    for (double r : {0.05, 0.3, 0.6}) {
      if (r >= p) continue;
      const ChannelClass c = ChannelClass::make(p, r, 10);
      double prev = 2.0;
      for (int h = 1; h <= 10; ++h) {
        for (double rho : {1.0, 0.7, 0.3, 0.0}) {
          const double a = activation_fraction(c, h, rho);
          CHECK(std::abs(a - activation_fraction_oracle(c, h, rho)) < 1e-10);
          // At h = tau the idle path falls back to the stationary belief, which can
          // lengthen the On sojourn enough to break monotonicity.
          if (h < 10) CHECK(a <= prev + 1e-15);
          prev = a;
        }
        if (h < 10) CHECK(activation_fraction(c, h, 0.0) == doctest::Approx(activation_fraction(c, h + 1, 1.0)));
      }
    }
  }
}

TEST_CASE("single class (0.8, 0.2), alpha = 0.75") {
  const ClassMix mix = single(0.75);
  const IndexTable t(mix);
  const RelaxedSolution s = solve_relaxed(mix, t);
  CHECK(s.status == RelaxedStatus::Ok);
  CHECK(s.omega_star == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(std::abs(s.rho_star - 1.0 / 6.0) < 1e-9);
  CHECK(std::abs(s.throughput_per_user - 0.45) < 1e-9);
  CHECK(s.policy[0].threshold_age == 1);
  const StateLayout& lay = t.layout();
  CHECK(s.zeta(lay.coord(0, BeliefState::on(1))) == doctest::Approx(0.45).epsilon(1e-12));
  CHECK(s.zeta(lay.coord(0, BeliefState::off(1))) == doctest::Approx(0.30).epsilon(1e-12));
  CHECK(s.zeta(lay.coord(0, BeliefState::off(2))) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(std::abs(s.zeta.sum() - 1.0) < 1e-14);
  CHECK(s.zeta.minCoeff() >= 0.0);
  CHECK((s.zeta.array() > 0.0).count() == 3);
  CHECK(s.randomized_classes(t) == std::vector<int>{0});
}

TEST_CASE("capacity boundary alpha = 1") {
  const ClassMix mix = single(1.0);
  const IndexTable t(mix);
  const RelaxedSolution s = solve_relaxed(mix, t);
  CHECK(s.status == RelaxedStatus::RhoIsOne);
  CHECK(s.rho_star == 1.0);
  REQUIRE(s.warnings.size() == 1);
  CHECK(s.warnings[0].find("capacity boundary") != std::string::npos);
  CHECK(s.throughput_per_user == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("alpha outside (0, capacity] is rejected") {
  ClassMix mix = single(0.5);
  mix.alpha = 1.5;
  const IndexTable t(mix);
  CHECK_THROWS_AS(solve_relaxed(mix, t), RangeError);
  mix.alpha = 0.0;
  CHECK_THROWS_AS(solve_relaxed(mix, t), RangeError);
}

TEST_CASE("two-class preset meets the constraint and matches the chain oracle") {
  const ClassMix mix = two_class();
  const IndexTable t(mix);
  const RelaxedSolution s = solve_relaxed(mix, t);
  CHECK(s.status == RelaxedStatus::Ok);
  double used = 0.0;
  for (int k = 0; k < 2; ++k) used += mix.gamma[k] * s.activation[k];
  CHECK(std::abs(used - 0.6) < 1e-12);
  CHECK(s.policy[0].threshold_age == 3);
  CHECK(s.policy[0].rho == 1.0);
  CHECK(s.policy[1].threshold_age == 6);
  CHECK(s.omega_star == doctest::Approx(whittle_index(mix.classes[1], BeliefState::off(6))).epsilon(1e-15));
  CHECK(s.throughput_per_user <= mix.alpha);

  const StateLayout& lay = t.layout();
  double r = 0.0;
  for (int k = 0; k < 2; ++k) {
    std::vector<double> act(s.coord_activation.begin() + lay.block_begin(k),
                            s.coord_activation.begin() + lay.block_begin(k) + lay.block());
    const Eigen::VectorXd pi = chain_stationary(mix.classes[k], act);
    for (int c = 0; c < lay.block(); ++c) {
      CHECK(std::abs(mix.gamma[k] * pi(c) - s.zeta(lay.block_begin(k) + c)) < 1e-10);
      r += mix.gamma[k] * pi(c) * act[c] * belief_value(mix.classes[k], lay.state_at(c));
    }
    CHECK(s.zeta.segment(lay.block_begin(k), lay.block()).sum() == doctest::Approx(mix.gamma[k]).epsilon(1e-14));
  }
  CHECK(std::abs(r - s.throughput_per_user) < 1e-10);
}

TEST_CASE("transient class is reported, not fabricated") {
  // Equal stationary beliefs; a small budget pushes omega* above the
  // faster-fading class's stationary-region index.
  const ClassMix mix =
      ClassMix::make({ChannelClass::make(0.93, 0.07, 16), ChannelClass::make(0.75, 0.25, 16)}, {0.5, 0.5}, 0.1);
  const IndexTable t(mix);
  const RelaxedSolution s = solve_relaxed(mix, t);
  CHECK(s.status == RelaxedStatus::Transient);
  CHECK(s.degenerate());
  CHECK(s.transient_class == 1);
  CHECK(std::isnan(s.rho_star));
  CHECK(s.zeta.size() == 0);
  CHECK(s.policy[1].silent);
  CHECK_THROWS_AS(compute_zeta(s), DegenerateError);
  CHECK_THROWS_AS(per_user_throughput(s), DegenerateError);
}
