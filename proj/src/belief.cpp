#include "whittle/belief.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace whittle {

ChannelClass ChannelClass::make(double p, double r, int tau) {
  if (!(r > 0.0 && r < p && p < 1.0)) {
    throw std::invalid_argument("channel class requires 0 < r < p < 1 (got p=" + std::to_string(p) +
                                ", r=" + std::to_string(r) + ")");
  }
  if (tau < 2) throw std::invalid_argument("truncation depth tau must be >= 2");
  return ChannelClass{p, r, tau};
}

bool BeliefState::valid_for(int tau) const {
  switch (kind) {
    case BeliefKind::Stationary: return age == 0;
    case BeliefKind::OffAge:
    case BeliefKind::OnAge: return age >= 1 && age <= tau;
  }
  return false;
}

std::string BeliefState::to_string() const {
  switch (kind) {
    case BeliefKind::OffAge: return "off" + std::to_string(age);
    case BeliefKind::OnAge: return "on" + std::to_string(age);
    case BeliefKind::Stationary: return "stationary";
  }
  return "?";
}

double belief_value(const ChannelClass& cls, BeliefState s) {
  const double denom = 1.0 + cls.r - cls.p;
  switch (s.kind) {
    case BeliefKind::OffAge: {
      const double decay = std::pow(cls.memory(), s.age);
      return (cls.r - decay * cls.r) / denom;
    }
    case BeliefKind::OnAge: {
      const double decay = std::pow(cls.memory(), s.age);
      return (cls.r + (1.0 - cls.p) * decay) / denom;
    }
    case BeliefKind::Stationary: return cls.r / denom;
  }
  return cls.r / denom;
}

double belief_value_by_iteration(const ChannelClass& cls, int last_obs, int l) {
  if (l < 1) throw std::invalid_argument("belief age must be >= 1");
  double pi = last_obs ? cls.p : cls.r;
  for (int i = 1; i < l; ++i) pi = pi * cls.p + (1.0 - pi) * cls.r;
  return pi;
}

BeliefState step_idle(const ChannelClass& cls, BeliefState s) {
  if (s.kind == BeliefKind::Stationary) return s;
  if (s.age >= cls.tau) return BeliefState::stationary();
  return {s.kind, s.age + 1};
}

ClassMix ClassMix::make(std::vector<ChannelClass> classes, std::vector<double> gamma, double alpha) {
  if (classes.empty() || classes.size() > 2) {
    throw std::invalid_argument("class mix needs one or two channel classes");
  }
  if (gamma.size() != classes.size()) {
    throw std::invalid_argument("gamma must have one proportion per class");
  }
  for (double g : gamma) {
    if (!(g > 0.0)) throw std::invalid_argument("class proportions must be positive");
  }
  if (std::abs(std::accumulate(gamma.begin(), gamma.end(), 0.0) - 1.0) > 1e-12) {
    throw std::invalid_argument("class proportions must sum to 1");
  }
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (0, 1]");
  for (const auto& c : classes) {
    if (c.tau != classes.front().tau) throw std::invalid_argument("all classes must share one tau");
  }
  return ClassMix{std::move(classes), std::move(gamma), alpha};
}

int StateLayout::local(BeliefState s) const {
  switch (s.kind) {
    case BeliefKind::OffAge: return s.age - 1;
    case BeliefKind::Stationary: return tau_;
    case BeliefKind::OnAge: return 2 * tau_ + 1 - s.age;
  }
  return tau_;
}

BeliefState StateLayout::state_at(int coord) const {
  const int l = coord % block();
  if (l < tau_) return BeliefState::off(l + 1);
  if (l == tau_) return BeliefState::stationary();
  return BeliefState::on(2 * tau_ + 1 - l);
}

}  // namespace whittle
