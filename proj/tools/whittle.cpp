// Command-line driver: whittle <subcommand> [--config FILE | --preset NAME]
// [--out DIR] [--seeds a,b,c]

#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "whittle/commands.hpp"
#include "whittle/config.hpp"

namespace {

using Command = int (*)(const whittle::ExperimentConfig&, std::ostream&);

struct Sub {
  const char* name;
  const char* help;
  Command fn;
};

const Sub kSubs[] = {
    {"index-table", "Belief and index per state -> index_table.csv (class,state,age,belief,index)",
     whittle::cmd_index_table},
    {"solve-relaxed", "Optimal relaxed policy -> relaxed.json, zeta.csv (class,state,age,zeta)",
     whittle::cmd_solve_relaxed},
    {"fluid-run", "Fluid trajectory from starts[0] -> fluid_trajectory.csv (t,distance,in_region,z0..)",
     whittle::cmd_fluid_run},
    {"stability", "Spectral radius estimates of U*+I -> stability.csv (K,rho_hat); exit 1 if not certified",
     whittle::cmd_stability},
    {"simulate",
     "Throughput per N and seed -> simulate.csv (N,policy,seed,belief_throughput,realized_throughput,"
     "activation_rate), simulate_summary.csv",
     whittle::cmd_simulate},
    {"hitting-time", "Hitting time of the epsilon-ball around zeta -> hitting_time.csv (N,start,mean,se,seeds,misses)",
     whittle::cmd_hitting_time},
    {"occupancy", "Fraction of post burn-in slots inside the epsilon-ball -> occupancy.csv "
                  "(N,start,epsilon,mean,se,seeds)",
     whittle::cmd_occupancy},
    {"deviation", "sup_t ||Z[t]-z[t]|| over the horizon -> deviation.csv (N,start,median,mean,se,seeds), "
                  "deviation_runs.csv",
     whittle::cmd_deviation},
    {"pipeline", "Solve, fixed point, stability (and simulation if experiment.simulate) -> report.json; "
                 "exit 1 if a check fails",
     whittle::cmd_pipeline},
    {"sweep", "Sweep over N: hitting-time or throughput-gap -> sweep.csv", whittle::cmd_sweep},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Whittle index scheduling: index tables, relaxed policy, fluid model and simulation.\n"
               "Standard errors are left empty when only one seed is given.\n"
               "WHITTLE_WORKERS sets the number of parallel simulation workers."};
  app.require_subcommand(1, 1);

  std::string config_path, preset_name, out_dir, seeds;
  std::map<std::string, Command> commands;
  for (const Sub& s : kSubs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    sub->add_option("--config", config_path, "JSON experiment config (schema 1)");
    sub->add_option("--preset", preset_name, "Built-in config: two-class, fig2, fig5, assumption-psi, throughput-gap");
    sub->add_option("--out", out_dir, "Output directory (default: config 'out' or .)");
    sub->add_option("--seeds", seeds, "Comma-separated seed list overriding the config");
    commands[s.name] = s.fn;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    if (config_path.empty() == preset_name.empty()) {
      throw whittle::ConfigError("give exactly one of --config or --preset");
    }
    whittle::ExperimentConfig cfg =
        preset_name.empty() ? whittle::load_config_file(config_path) : whittle::preset(preset_name);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (!seeds.empty()) cfg.exp.seeds = whittle::parse_seed_list(seeds);
    return commands.at(name)(cfg, std::cout);
  } catch (const whittle::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
