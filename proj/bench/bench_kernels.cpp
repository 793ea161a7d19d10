// Serial vs OpenMP simulation kernel: slots per second and a bitwise
// equality check of the final state.
//
//   bench_kernels [N] [slots]

#include <chrono>
#include <cstdio>
#include <cstdlib>

#include <omp.h>

#include "whittle/simulator.hpp"

using namespace whittle;

namespace {

double time_run(SimRun& run, long slots) {
  const auto t0 = std::chrono::steady_clock::now();
  run.run(slots);
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  const long N = argc > 1 ? std::atol(argv[1]) : 100000;
  const long slots = argc > 2 ? std::atol(argv[2]) : 200;
  if (N <= 0 || slots <= 0) {
    std::fprintf(stderr, "usage: bench_kernels [N] [slots]   (N a multiple of 20)\n");
    return 2;
  }

  const ClassMix mix = ClassMix::make({ChannelClass::make(0.9, 0.45, 16), ChannelClass::make(0.8, 0.3, 16)},
                                      {0.45, 0.55}, 0.6);
  const IndexTable table(mix);
  const RelaxedSolution sol = solve_relaxed(mix, table);

  std::printf("threads=%d N=%ld slots=%ld\n", omp_get_max_threads(), N, slots);
  std::printf("%-8s %-9s %12s %14s %s\n", "policy", "kernel", "seconds", "ns/user-slot", "match");
  for (Policy policy : {Policy::Whittle, Policy::Relaxed}) {
    SimConfig cfg;
    cfg.mix = mix;
    cfg.N = N;
    cfg.horizon = slots;
    cfg.seed = 7;
    cfg.policy = policy;
    cfg.start = InitialState::all_off();

    cfg.kernel = Kernel::Serial;
    SimRun serial(cfg, table, &sol);
    const double ts = time_run(serial, slots);
    cfg.kernel = Kernel::Parallel;
    SimRun parallel(cfg, table, &sol);
    const double tp = time_run(parallel, slots);

    bool match = serial.counts() == parallel.counts() &&
                 serial.totals().active_per_coord == parallel.totals().active_per_coord &&
                 serial.totals().successes == parallel.totals().successes;
    for (long i = 0; match && i < N; ++i) {
      match = serial.coord_of(i) == parallel.coord_of(i) && serial.channel_of(i) == parallel.channel_of(i);
    }
    const char* name = policy == Policy::Whittle ? "whittle" : "relaxed";
    const double per = 1e9 / (static_cast<double>(N) * static_cast<double>(slots));
    std::printf("%-8s %-9s %12.4f %14.3f\n", name, "serial", ts, ts * per);
    std::printf("%-8s %-9s %12.4f %14.3f %s\n", name, "parallel", tp, tp * per, match ? "yes" : "NO");
    if (!match) return 1;
  }
  return 0;
}
