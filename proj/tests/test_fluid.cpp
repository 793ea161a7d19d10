#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "whittle/fluid.hpp"

using namespace whittle;

namespace {

ClassMix fig2(double alpha = 0.75) { return ClassMix::make({ChannelClass::make(0.8, 0.2, 16)}, {1.0}, alpha); }

ClassMix two_class() {
  return ClassMix::make({ChannelClass::make(0.9, 0.45, 16), ChannelClass::make(0.8, 0.3, 16)}, {0.45, 0.55}, 0.6);
}

StateVector random_simplex(const StateLayout& lay, const std::vector<double>& gamma, std::mt19937_64& gen) {
  std::exponential_distribution<double> e;
  StateVector z(lay.dim());
  for (int k = 0; k < lay.num_classes(); ++k) {
    double s = 0.0;
    for (int c = lay.block_begin(k); c < lay.block_begin(k) + lay.block(); ++c) s += (z(c) = e(gen));
    for (int c = lay.block_begin(k); c < lay.block_begin(k) + lay.block(); ++c) z(c) *= gamma[k] / s;
  }
  return z;
}

}  // namespace

TEST_CASE("activation profile at the single-class fixed point") {
  const ClassMix mix = fig2();
  const IndexTable t(mix);
  const RelaxedSolution s = solve_relaxed(mix, t);
  const FluidModel f(t, mix.alpha);
  const Eigen::VectorXd g = f.activation_profile(s.zeta);
  const StateLayout& lay = t.layout();
  CHECK(g(lay.coord(0, BeliefState::on(1))) == 1.0);
  CHECK(g(lay.coord(0, BeliefState::off(2))) == 1.0);
  CHECK(g(lay.coord(0, BeliefState::off(1))) == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
  CHECK(g.dot(s.zeta) == doctest::Approx(0.75).epsilon(1e-14));
}

TEST_CASE("activation profile edge cases") {
  const ClassMix mix = fig2(1.0);
  const IndexTable t(mix);
  const FluidModel f(t, 1.0);
  std::mt19937_64 gen(1);
  const StateVector z = random_simplex(t.layout(), mix.gamma, gen);
  CHECK(f.activation_profile(z).minCoeff() == doctest::Approx(1.0).epsilon(1e-12));

  const IndexTable t2(fig2());
  const FluidModel f2(t2, 0.75);
  // Empty marginal rungs with capacity left are fully served.
  StateVector y = StateVector::Zero(t2.dim());
  y(t2.layout().coord(0, BeliefState::off(1))) = 1.0;
  const Eigen::VectorXd g = f2.activation_profile(y);
  CHECK(g(t2.layout().coord(0, BeliefState::off(2))) == 1.0);
  CHECK(g(t2.layout().coord(0, BeliefState::off(1))) == doctest::Approx(0.75));
}

TEST_CASE("transition matrix conserves mass and reproduces the step") {
  const ClassMix mix = two_class();
  const IndexTable t(mix);
  const FluidModel f(t, mix.alpha);
  std::mt19937_64 gen(2);
  for (int trial = 0; trial < 20; ++trial) {
    const StateVector z = random_simplex(t.layout(), mix.gamma, gen);
    const Eigen::MatrixXd Q = f.transition_matrix(z);
    CHECK(Q.colwise().sum().cwiseAbs().maxCoeff() < 1e-14);
    CHECK((z + Q * z - f.step(z)).norm() < 1e-14);
  }
}

TEST_CASE("idle-only mass ages deterministically") {
  const ClassMix mix = fig2(0.05);
  const IndexTable t(mix);
  const FluidModel f(t, 0.05);
  const StateLayout& lay = t.layout();
  // All capacity goes to the stationary rung; Off states stay idle.
  StateVector z = StateVector::Zero(t.dim());
  z(lay.coord(0, BeliefState::stationary())) = 0.5;
  z(lay.coord(0, BeliefState::off(3))) = 0.5;
  const StateVector n = f.step(z);
  CHECK(n(lay.coord(0, BeliefState::off(4))) == doctest::Approx(0.5));
  CHECK(n(lay.coord(0, BeliefState::on(1))) == doctest::Approx(0.05 * 0.5));
  CHECK(n(lay.coord(0, BeliefState::off(1))) == doctest::Approx(0.05 * 0.5));
  CHECK(n(lay.coord(0, BeliefState::stationary())) == doctest::Approx(0.45));
}

TEST_CASE("fixed point, conservation, nonnegativity") {
  for (const ClassMix& mix : {fig2(), two_class()}) {
    const IndexTable t(mix);
    const RelaxedSolution s = solve_relaxed(mix, t);
    const FluidModel f(t, mix.alpha);
    CHECK(f.drift(s.zeta).norm() < 1e-10);
    std::mt19937_64 gen(3);
    for (int trial = 0; trial < 5; ++trial) {
      StateVector z = random_simplex(t.layout(), mix.gamma, gen);
      for (int step = 0; step < 10000; ++step) z = f.step(z);
      CHECK(z.minCoeff() >= 0.0);
      for (int k = 0; k < mix.num_classes(); ++k) {
        CHECK(std::abs(z.segment(t.layout().block_begin(k), t.layout().block()).sum() - mix.gamma[k]) < 1e-14);
      }
    }
  }
}

TEST_CASE("linearization is exact on the region and agrees with the analytic blocks") {
  for (const ClassMix& mix : {fig2(), two_class()}) {
    const IndexTable t(mix);
    const RelaxedSolution s = solve_relaxed(mix, t);
    const FluidModel f(t, mix.alpha);
    const LinearizedSystem sys = linearize(f, s);
    CHECK(sys.U_star.rows() == 2 * 16 * mix.num_classes());
    CHECK(sys.in_region(t, s.zeta));
    CHECK((sys.U_star * sys.reduce(s.zeta) + sys.b_star).norm() < 1e-12);
    CHECK((sys.expand(sys.reduce(s.zeta), t.layout()) - s.zeta).norm() < 1e-15);

    std::mt19937_64 gen(4);
    int tested = 0;
    for (int trial = 0; trial < 200 && tested < 20; ++trial) {
      const StateVector z = perturb_within_simplex(s.zeta, t.layout(), 0.02, gen());
      if (!sys.in_region(t, z)) continue;
      ++tested;
      CHECK((f.drift(z) - (sys.Q_star * z + sys.a_star)).norm() < 1e-12);
      const Eigen::VectorXd zr = sys.reduce(z);
      CHECK((sys.reduce(f.step(z)) - (zr + sys.U_star * zr + sys.b_star)).norm() < 1e-12);
    }
    CHECK(tested >= 10);

    const AnalyticBlocks blocks = analytic_blocks(s, t);
    CHECK((blocks.U_star - sys.U_star).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("analytic block shapes") {
  const ClassMix mix = two_class();
  const IndexTable t(mix);
  const RelaxedSolution s = solve_relaxed(mix, t);
  const AnalyticBlocks b = analytic_blocks(s, t);
  CHECK(b.randomized_class == 1);
  // Class 2 randomizes at Off(6): its aging block has ones below a -1
  // diagonal for Off(2..5).
  for (int l = 2; l <= 5; ++l) {
    CHECK(b.Q_randomized(l - 1, l - 2) == 1.0);
    CHECK(b.Q_randomized(l - 1, l - 1) == -1.0);
  }
  // Coupling rows: Off(1), the successor of Off(6) and On(1) only.
  for (int row = 0; row < b.B.rows(); ++row) {
    const bool nonzero = b.B.row(row).cwiseAbs().maxCoeff() > 0.0;
    CHECK(nonzero == (row == 0 || row == 5 || row == b.B.rows() - 1));
  }
  // Columns start at the first active state of the other class, Off(3),
  // which sits at reduced position 1 after dropping Off(2).
  CHECK(b.B.col(0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(b.B.col(1).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("non-generic alpha is refused") {
  const ClassMix mix = fig2(1.0);
  const IndexTable t(mix);
  const RelaxedSolution s = solve_relaxed(mix, t);
  const FluidModel f(t, 1.0);
  CHECK_THROWS_AS(linearize(f, s), NonGenericError);
  CHECK_THROWS_AS(analytic_blocks(s, t), AnalyticFormUnavailable);
}

TEST_CASE("stability certificate") {
  for (const ClassMix& mix : {fig2(), two_class()}) {
    const IndexTable t(mix);
    const RelaxedSolution s = solve_relaxed(mix, t);
    const LinearizedSystem sys = linearize(FluidModel(t, mix.alpha), s);
    const StabilityCertificate cert = stability_certificate(sys.U_star);
    CHECK(cert.certified);
    REQUIRE(cert.estimates.size() == 3);
    // Gelfand estimates bound the spectral radius from above.
    const Eigen::MatrixXd M = sys.U_star + Eigen::MatrixXd::Identity(sys.U_star.rows(), sys.U_star.cols());
    const double radius = Eigen::EigenSolver<Eigen::MatrixXd>(M).eigenvalues().cwiseAbs().maxCoeff();
    CHECK(radius < 1.0);
    for (const auto& [k, est] : cert.estimates) CHECK(est >= radius - 1e-9);
    CHECK(cert.estimates.back().second - radius < 0.05);
  }
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(4, 4);
  const StabilityCertificate zero = stability_certificate(-I);
  CHECK(zero.certified);
  CHECK(zero.estimates.back().second == 0.0);
  CHECK_FALSE(stability_certificate(Eigen::MatrixXd::Zero(4, 4)).certified);
  CHECK_FALSE(stability_certificate(0.5 * I).certified);
}

TEST_CASE("fluid trajectories") {
  const ClassMix mix = two_class();
  const IndexTable t(mix);
  const RelaxedSolution s = solve_relaxed(mix, t);
  const FluidModel f(t, mix.alpha);
  const LinearizedSystem sys = linearize(f, s);

  const FluidTrajectory still = fluid_trajectory(f, s.zeta, 100, s.zeta, &sys);
  CHECK(still.distance.back() < 1e-13);
  CHECK(still.stayed_in_region);

  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const StateVector z0 = perturb_within_simplex(s.zeta, t.layout(), 1e-3, seed);
    CHECK((z0 - s.zeta).norm() == doctest::Approx(1e-3).epsilon(1e-9));
    const FluidTrajectory tr = fluid_trajectory(f, z0, 10000, s.zeta);
    CHECK(tr.distance.front() == doctest::Approx(1e-3));
    CHECK(tr.distance.back() < 1e-8);
  }

  StateVector x = StateVector::Zero(t.dim());
  x(t.layout().coord(0, BeliefState::off(1))) = 0.45;
  x(t.layout().coord(1, BeliefState::off(1))) = 0.55;
  const FluidTrajectory tr = fluid_trajectory(f, x, 2000, s.zeta, nullptr, 500);
  CHECK(tr.states.size() == 5);
  for (const auto& [step, z] : tr.states) CHECK(z.minCoeff() >= 0.0);
  CHECK(tr.final_state.sum() == doctest::Approx(1.0).epsilon(1e-14));
}
