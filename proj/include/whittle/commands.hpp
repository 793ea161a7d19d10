#pragma once

#include <iosfwd>
#include <string>

#include "whittle/config.hpp"

namespace whittle {

/// Every command writes its CSV/JSON artifacts into cfg.out_dir, prints a
/// short summary to `out` and returns the process exit code (0 success,
/// 1 failed check, 2 config error).
int cmd_index_table(const ExperimentConfig& cfg, std::ostream& out);
int cmd_solve_relaxed(const ExperimentConfig& cfg, std::ostream& out);
int cmd_fluid_run(const ExperimentConfig& cfg, std::ostream& out);
int cmd_stability(const ExperimentConfig& cfg, std::ostream& out);
int cmd_simulate(const ExperimentConfig& cfg, std::ostream& out);
int cmd_hitting_time(const ExperimentConfig& cfg, std::ostream& out);
int cmd_occupancy(const ExperimentConfig& cfg, std::ostream& out);
int cmd_deviation(const ExperimentConfig& cfg, std::ostream& out);
int cmd_pipeline(const ExperimentConfig& cfg, std::ostream& out);
int cmd_sweep(const ExperimentConfig& cfg, std::ostream& out);

/// Shortest round-trip decimal form; NaN becomes an empty field.
std::string format_number(double x);

}  // namespace whittle
