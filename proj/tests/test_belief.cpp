#include <doctest.h>

#include <cmath>

#include "whittle/belief.hpp"
#include "whittle/exact.hpp"

using namespace whittle;

TEST_CASE("closed-form beliefs match literal iteration of the update") {
  for (double p : {0.6, 0.7, 0.8, 0.9, 0.95}) {
    for (double frac : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      const ChannelClass c = ChannelClass::make(p, frac * p, 16);
      for (int l = 1; l <= 16; ++l) {
        CHECK(belief_value(c, BeliefState::off(l)) == doctest::Approx(belief_value_by_iteration(c, 0, l)).epsilon(1e-12));
        CHECK(belief_value(c, BeliefState::on(l)) == doctest::Approx(belief_value_by_iteration(c, 1, l)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("belief endpoints") {
  const ChannelClass c = ChannelClass::make(0.8, 0.2, 16);
  CHECK(belief_value(c, BeliefState::off(1)) == doctest::Approx(0.2));
  CHECK(belief_value(c, BeliefState::on(1)) == doctest::Approx(0.8));
  CHECK(belief_value(c, BeliefState::off(2)) == doctest::Approx(0.32));
  CHECK(belief_value(c, BeliefState::stationary()) == doctest::Approx(0.5));
  // Off beliefs rise and On beliefs fall toward b_s.
  for (int l = 1; l < 16; ++l) {
    CHECK(belief_value(c, BeliefState::off(l)) < belief_value(c, BeliefState::off(l + 1)));
    CHECK(belief_value(c, BeliefState::on(l)) > belief_value(c, BeliefState::on(l + 1)));
    CHECK(belief_value(c, BeliefState::on(l + 1)) > 0.5);
  }
  CHECK_THROWS_AS(belief_value_by_iteration(c, 0, 0), std::invalid_argument);
}

TEST_CASE("idle and feedback transitions") {
  const ChannelClass c = ChannelClass::make(0.8, 0.2, 4);
  CHECK(step_idle(c, BeliefState::off(1)) == BeliefState::off(2));
  CHECK(step_idle(c, BeliefState::off(4)) == BeliefState::stationary());
  CHECK(step_idle(c, BeliefState::on(4)) == BeliefState::stationary());
  CHECK(step_idle(c, BeliefState::on(2)) == BeliefState::on(3));
  CHECK(step_idle(c, BeliefState::stationary()) == BeliefState::stationary());
  CHECK(step_feedback(true) == BeliefState::on(1));
  CHECK(step_feedback(false) == BeliefState::off(1));
}

TEST_CASE("validation of classes and mixes") {
  CHECK_THROWS_AS(ChannelClass::make(0.5, 0.6, 16), std::invalid_argument);
  CHECK_THROWS_AS(ChannelClass::make(1.0, 0.2, 16), std::invalid_argument);
  CHECK_THROWS_AS(ChannelClass::make(0.8, 0.0, 16), std::invalid_argument);
  CHECK_THROWS_AS(ChannelClass::make(0.8, 0.2, 1), std::invalid_argument);
  const ChannelClass a = ChannelClass::make(0.8, 0.2, 16);
  const ChannelClass b = ChannelClass::make(0.9, 0.45, 16);
  CHECK_THROWS_AS(ClassMix::make({}, {}, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(ClassMix::make({a, b}, {0.5, 0.6}, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(ClassMix::make({a, b}, {0.5}, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(ClassMix::make({a}, {1.0}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(ClassMix::make({a}, {1.0}, 1.2), std::invalid_argument);
  CHECK_THROWS_AS(ClassMix::make({a, ChannelClass::make(0.9, 0.45, 8)}, {0.5, 0.5}, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(ClassMix::make({a, b, a}, {0.3, 0.3, 0.4}, 0.5), std::invalid_argument);
  CHECK_NOTHROW(ClassMix::make({a, b}, {0.45, 0.55}, 0.6));
}

TEST_CASE("state layout round trip") {
  const StateLayout lay(2, 5);
  CHECK(lay.block() == 11);
  CHECK(lay.dim() == 22);
  CHECK(lay.local(BeliefState::off(1)) == 0);
  CHECK(lay.local(BeliefState::off(5)) == 4);
  CHECK(lay.local(BeliefState::stationary()) == 5);
  CHECK(lay.local(BeliefState::on(5)) == 6);
  CHECK(lay.local(BeliefState::on(1)) == 10);
  for (int c = 0; c < lay.dim(); ++c) {
    const BeliefState s = lay.state_at(c);
    CHECK(s.valid_for(5));
    CHECK(lay.coord(lay.class_of(c), s) == c);
  }
  CHECK(BeliefState::off(3).to_string() == "off3");
  CHECK_FALSE(BeliefState::off(6).valid_for(5));
}

TEST_CASE("exact rational beliefs and the idle gap bound") {
  using exact::Rational;
  const Rational p = exact::parse_decimal("0.8"), r = exact::parse_decimal("0.2");
  CHECK(p == Rational(4, 5));
  CHECK(exact::off_belief(p, r, 1) == r);
  CHECK(exact::off_belief(p, r, 2) == Rational(8, 25));
  CHECK(exact::on_belief(p, r, 1) == p);
  const ChannelClass c = ChannelClass::make(0.8, 0.2, 16);
  for (int l = 1; l <= 16; ++l) {
    CHECK(static_cast<double>(exact::off_belief(p, r, l)) == doctest::Approx(belief_value(c, BeliefState::off(l))));
    CHECK(exact::idle_gap_bound_holds(p, r, l));
  }
  CHECK_THROWS_AS(exact::parse_decimal("0.8e1"), std::invalid_argument);
  CHECK_THROWS_AS(exact::idle_gap_bound_holds(p, r, 0), std::invalid_argument);
}
