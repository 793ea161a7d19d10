#include "whittle/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <omp.h>

#include "whittle/rng.hpp"

namespace whittle {

namespace {

long integral_count(double fraction, long N, const char* what) {
  const double exact = fraction * static_cast<double>(N);
  const long rounded = std::lround(exact);
  if (std::abs(exact - static_cast<double>(rounded)) > 1e-6) {
    throw std::invalid_argument(std::string(what) + " * N must be an integer (got " + std::to_string(exact) + ")");
  }
  return rounded;
}

using Candidate = std::pair<std::uint64_t, std::uint32_t>;

// Marks the k_rem candidates with the smallest (key, id) pairs.
void pick_boundary(std::vector<Candidate>& cand, long k_rem, std::uint8_t* active) {
  if (k_rem <= 0) return;
  if (k_rem < static_cast<long>(cand.size())) {
    std::nth_element(cand.begin(), cand.begin() + k_rem, cand.end());
  }
  const long n = std::min<long>(k_rem, static_cast<long>(cand.size()));
  for (long m = 0; m < n; ++m) active[cand[m].second] = 1;
}

// Boundary rung and how many of its users still get a slot.
std::pair<int, long> boundary_rung(const IndexTable& table, const std::vector<long>& counts, long k) {
  std::vector<long> per_rung(table.ladder().size(), 0);
  for (std::size_t c = 0; c < counts.size(); ++c) per_rung[table.rung_of(static_cast<int>(c))] += counts[c];
  long taken = 0;
  for (std::size_t j = 0; j < per_rung.size(); ++j) {
    if (taken + per_rung[j] > k) return {static_cast<int>(j), k - taken};
    taken += per_rung[j];
  }
  return {static_cast<int>(per_rung.size()), 0};
}

}  // namespace

std::vector<long> SimConfig::class_sizes() const {
  std::vector<long> out;
  long total = 0;
  for (double g : mix.gamma) {
    out.push_back(integral_count(g, N, "gamma_k"));
    total += out.back();
  }
  if (total != N) throw std::invalid_argument("class sizes do not add up to N");
  return out;
}

long SimConfig::slots_per_step() const { return integral_count(mix.alpha, N, "alpha"); }

void SimConfig::validate() const {
  if (N < 1) throw std::invalid_argument("N must be positive");
  if (N > static_cast<long>(UINT32_MAX)) throw std::invalid_argument("N too large");
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  if (2 * (2 * mix.tau() + 1) > UINT16_MAX) throw std::invalid_argument("tau too large");
  class_sizes();
  slots_per_step();
}

std::vector<long> lattice_counts(const StateVector& z, const StateLayout& layout, const std::vector<long>& class_sizes) {
  if (z.size() != layout.dim()) throw std::invalid_argument("state vector has the wrong dimension");
  std::vector<long> counts(layout.dim(), 0);
  long total = 0;
  for (long n : class_sizes) total += n;
  for (int k = 0; k < layout.num_classes(); ++k) {
    const long n = class_sizes[k];
    const int begin = layout.block_begin(k);
    double mass = 0.0;
    for (int c = begin; c < begin + layout.block(); ++c) {
      if (z(c) < -1e-12) throw std::invalid_argument("state vector has negative entries");
      mass += z(c);
    }
    if (std::abs(mass - static_cast<double>(n) / static_cast<double>(total)) > 1e-9) {
      throw std::invalid_argument("state vector class sums differ from gamma");
    }
    const double class_size = static_cast<double>(n);
    std::vector<std::pair<double, int>> rest;
    long given = 0;
    for (int c = begin; c < begin + layout.block(); ++c) {
      // Scale to the exact class size so rounding never leaves the class.
      const double want = mass > 0.0 ? std::max(0.0, z(c)) / mass * class_size : 0.0;
      const long fl = static_cast<long>(std::floor(want));
      counts[c] = fl;
      given += fl;
      rest.emplace_back(want - static_cast<double>(fl), c);
    }
    std::stable_sort(rest.begin(), rest.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (long m = 0; m < n - given; ++m) ++counts[rest[m % rest.size()].second];
  }
  return counts;
}

SimRun::SimRun(const SimConfig& config, const IndexTable& table, const RelaxedSolution* relaxed)
    : config_(config), table_(&table), relaxed_(relaxed) {
  config_.validate();
  if (!(config_.mix.classes == table.mix().classes)) throw std::invalid_argument("index table built for another mix");
  if (config_.policy == Policy::Relaxed) {
    if (!relaxed_ || relaxed_->degenerate()) throw std::invalid_argument("relaxed policy needs a non-degenerate solution");
  }
  k_slots_ = config_.slots_per_step();
  const StateLayout& lay = table.layout();
  const int d = lay.dim();
  const auto sizes = config_.class_sizes();

  idle_next_.resize(d);
  reset_on_.resize(d);
  reset_off_.resize(d);
  rung_.resize(d);
  cls_.resize(d);
  stay_on_thr_.resize(d);
  turn_on_thr_.resize(d);
  act_thr_.assign(d, 0);
  act_prob_.assign(d, 0.0);
  next_.resize(4 * d);
  chan_thr_.resize(2 * d);
  always_.assign(d, 0);
  for (int c = 0; c < d; ++c) {
    const int k = lay.class_of(c);
    const ChannelClass& cls = config_.mix.classes[k];
    idle_next_[c] = table.idle_next(c);
    reset_on_[c] = table.on_reset(k);
    reset_off_[c] = table.off_reset(k);
    rung_[c] = table.rung_of(c);
    cls_[c] = k;
    stay_on_thr_[c] = rng::threshold32(cls.p);
    turn_on_thr_[c] = rng::threshold32(cls.r);
    chan_thr_[2 * c] = turn_on_thr_[c];
    chan_thr_[2 * c + 1] = stay_on_thr_[c];
    // next_[4c + 2a + ch]: idle, idle, observed OFF, observed ON.
    next_[4 * c] = next_[4 * c + 1] = static_cast<std::uint16_t>(idle_next_[c]);
    next_[4 * c + 2] = static_cast<std::uint16_t>(reset_off_[c]);
    next_[4 * c + 3] = static_cast<std::uint16_t>(reset_on_[c]);
    if (relaxed_) {
      act_prob_[c] = relaxed_->coord_activation[c];
      act_thr_[c] = rng::threshold32(act_prob_[c]);
      always_[c] = act_prob_[c] >= 1.0;
    }
  }

  switch (config_.start.kind) {
    case StartKind::AllOff:
    case StartKind::AllStationary: {
      counts_.assign(d, 0);
      const BeliefState s =
          config_.start.kind == StartKind::AllOff ? BeliefState::off(1) : BeliefState::stationary();
      for (int k = 0; k < lay.num_classes(); ++k) counts_[lay.coord(k, s)] = sizes[k];
      break;
    }
    case StartKind::Explicit: counts_ = lattice_counts(config_.start.z, lay, sizes); break;
  }

  const long N = config_.N;
  coord_.resize(N);
  chan_.resize(N);
  active_.assign(N, 0);
  long i = 0;
  for (int c = 0; c < d; ++c) {
    for (long m = 0; m < counts_[c]; ++m) coord_[i++] = static_cast<std::uint16_t>(c);
  }
  const std::uint64_t key = rng::slot_key(config_.seed, 0, rng::kInitialChannel);
  for (long u = 0; u < N; ++u) {
    chan_[u] = rng::draw(key, u) < rng::threshold(table.belief(coord_[u])) ? 1 : 0;
  }
  totals_.active_per_coord.assign(d, 0);
}

int SimRun::class_of(long user) const { return cls_[coord_[user]]; }

StateVector SimRun::empirical_state() const {
  StateVector z(static_cast<Eigen::Index>(counts_.size()));
  for (std::size_t c = 0; c < counts_.size(); ++c) {
    z(static_cast<Eigen::Index>(c)) = static_cast<double>(counts_[c]) / static_cast<double>(config_.N);
  }
  return z;
}

void SimRun::schedule_whittle() {
  const auto [b, k_rem] = boundary_rung(*table_, counts_, k_slots_);
  const long N = config_.N;
  const std::uint64_t key = rng::slot_key(config_.seed, static_cast<std::uint64_t>(t_), rng::kTieBreak);
  boundary_.clear();
  if (config_.kernel == Kernel::Serial) {
    for (long i = 0; i < N; ++i) {
      const int rung = rung_[coord_[i]];
      active_[i] = rung < b;
      if (rung == b && k_rem > 0) boundary_.emplace_back(rng::draw(key, i), static_cast<std::uint32_t>(i));
    }
  } else {
#pragma omp parallel
    {
      std::vector<Candidate> local;
#pragma omp for schedule(static) nowait
      for (long i = 0; i < N; ++i) {
        const int rung = rung_[coord_[i]];
        active_[i] = rung < b;
        if (rung == b && k_rem > 0) local.emplace_back(rng::draw(key, i), static_cast<std::uint32_t>(i));
      }
#pragma omp critical
      boundary_.insert(boundary_.end(), local.begin(), local.end());
    }
  }
  pick_boundary(boundary_, k_rem, active_.data());
}

void SimRun::advance(StepMetrics& out) {
  const long N = config_.N;
  const int d = static_cast<int>(counts_.size());
  const bool relaxed = config_.policy == Policy::Relaxed;
  const std::uint64_t t = static_cast<std::uint64_t>(t_);
  const std::uint64_t key_ch = rng::slot_key(config_.seed, t, rng::kChannel);
  const std::uint64_t key_rel = rng::slot_key(config_.seed, t, rng::kRelaxed);

  std::vector<long> next_counts(d, 0);
  std::vector<long long> act(d, 0);
  long succ = 0;

  // Raw pointers: the uint8 stores below would otherwise force the
  // compiler to reload every vector's data pointer on each iteration. The
  // loop body is branch-free; table lookups replace the data-dependent
  // branches on the channel bit and the activation decision.
  std::uint16_t* __restrict coord = coord_.data();
  std::uint8_t* __restrict chan = chan_.data();
  std::uint8_t* __restrict active = active_.data();
  const std::uint16_t* __restrict next = next_.data();
  const std::uint64_t* __restrict chan_thr = chan_thr_.data();
  const std::uint64_t* __restrict act_thr = act_thr_.data();
  const std::uint8_t* __restrict always = always_.data();

  const long stride = d;
  auto body = [=](long lo, long hi, long* __restrict cnt, long long* __restrict act_c, long& s) {
    long succ_local = 0;
    auto user = [&](long i, std::uint32_t u_ch, std::uint32_t u_rel) {
      const unsigned c = coord[i];
      const unsigned ch = chan[i];
      unsigned a;
      if (relaxed) {
        a = (u_rel < act_thr[c]) | always[c];
        active[i] = static_cast<std::uint8_t>(a);
      } else {
        a = active[i];
      }
      chan[i] = u_ch < chan_thr[2 * c + ch];
      const unsigned nc = next[4 * c + 2 * a + ch];
      coord[i] = static_cast<std::uint16_t>(nc);
      // Four interleaved histograms break the store-to-load chains on
      // popular coordinates; fold() sums them.
      const long lane = (i & 3) * stride;
      ++cnt[lane + nc];
      act_c[lane + c] += a;
      succ_local += a & ch;
    };
    // One 64-bit draw feeds the 32-bit uniforms of users 2j and 2j+1.
    for (long i = lo; i < hi; i += 2) {
      const std::uint64_t x = rng::draw(key_ch, static_cast<std::uint64_t>(i) >> 1);
      const std::uint64_t y = relaxed ? rng::draw(key_rel, static_cast<std::uint64_t>(i) >> 1) : 0;
      user(i, rng::low32(x), rng::low32(y));
      if (i + 1 < hi) user(i + 1, rng::high32(x), rng::high32(y));
    }
    s += succ_local;
  };

  auto fold = [&](const std::vector<long>& cnt, const std::vector<long long>& act_l, long s) {
    for (int c = 0; c < d; ++c) {
      for (int lane = 0; lane < 4; ++lane) {
        next_counts[c] += cnt[lane * d + c];
        act[c] += act_l[lane * d + c];
      }
    }
    succ += s;
  };

  if (config_.kernel == Kernel::Serial) {
    std::vector<long> cnt(4 * d, 0);
    std::vector<long long> act_l(4 * d, 0);
    long s = 0;
    body(0, N, cnt.data(), act_l.data(), s);
    fold(cnt, act_l, s);
  } else {
#pragma omp parallel
    {
      std::vector<long> cnt(4 * d, 0);
      std::vector<long long> act_l(4 * d, 0);
      long s = 0;
      const long nt = omp_get_num_threads();
      const long tid = omp_get_thread_num();
      body((N * tid / nt) & ~1L, tid + 1 == nt ? N : (N * (tid + 1) / nt) & ~1L, cnt.data(), act_l.data(), s);
#pragma omp critical
      fold(cnt, act_l, s);
    }
  }

  counts_ = std::move(next_counts);
  out.successes = succ;
  for (int c = 0; c < d; ++c) {
    out.scheduled += act[c];
    out.belief_reward += static_cast<double>(act[c]) * table_->belief(c);
  }
  if (t_ >= config_.effective_burn_in()) {
    ++totals_.slots;
    totals_.activations += out.scheduled;
    totals_.successes += succ;
    for (int c = 0; c < d; ++c) totals_.active_per_coord[c] += act[c];
  }
}

StepMetrics SimRun::step() {
  StepMetrics m;
  if (config_.policy == Policy::Whittle) schedule_whittle();
  advance(m);
  ++t_;
  return m;
}

void SimRun::run(long slots) {
  for (long s = 0; s < slots; ++s) step();
}

double SimRun::Totals::belief_reward(const IndexTable& table) const {
  double r = 0.0;
  for (std::size_t c = 0; c < active_per_coord.size(); ++c) {
    r += static_cast<double>(active_per_coord[c]) * table.belief(static_cast<int>(c));
  }
  return r;
}

double SimRun::belief_throughput() const {
  return totals_.belief_reward(*table_) / (static_cast<double>(totals_.slots) * static_cast<double>(config_.N));
}

double SimRun::realized_throughput() const {
  return static_cast<double>(totals_.successes) / (static_cast<double>(totals_.slots) * static_cast<double>(config_.N));
}

double SimRun::activation_rate() const {
  return static_cast<double>(totals_.activations) / (static_cast<double>(totals_.slots) * static_cast<double>(config_.N));
}

std::vector<std::uint8_t> schedule_whittle(const std::vector<int>& coords, const IndexTable& table, long k,
                                           std::uint64_t seed, std::uint64_t slot) {
  std::vector<long> counts(table.dim(), 0);
  for (int c : coords) ++counts[c];
  const auto [b, k_rem] = boundary_rung(table, counts, k);
  const std::uint64_t key = rng::slot_key(seed, slot, rng::kTieBreak);
  std::vector<std::uint8_t> active(coords.size(), 0);
  std::vector<Candidate> cand;
  for (std::size_t i = 0; i < coords.size(); ++i) {
    const int rung = table.rung_of(coords[i]);
    active[i] = rung < b;
    if (rung == b && k_rem > 0) cand.emplace_back(rng::draw(key, i), static_cast<std::uint32_t>(i));
  }
  pick_boundary(cand, k_rem, active.data());
  return active;
}

std::vector<std::uint8_t> schedule_relaxed(const std::vector<int>& coords, const RelaxedSolution& solution,
                                           std::uint64_t seed, std::uint64_t slot) {
  if (solution.degenerate()) throw DegenerateError("relaxed policy is undefined for a transient class");
  const std::uint64_t key = rng::slot_key(seed, slot, rng::kRelaxed);
  std::vector<std::uint8_t> active(coords.size(), 0);
  for (std::size_t i = 0; i < coords.size(); ++i) {
    const double prob = solution.coord_activation[coords[i]];
    active[i] = rng::uniform32(key, i) < rng::threshold32(prob);
  }
  return active;
}

}  // namespace whittle
