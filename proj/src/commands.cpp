#include "whittle/commands.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <variant>

#include "whittle/experiments.hpp"
#include "whittle/fluid.hpp"

namespace whittle {

using nlohmann::json;

std::string format_number(double x) {
  if (std::isnan(x)) return "";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

namespace {

using Field = std::variant<std::string, long, double>;

class CsvWriter {
 public:
  CsvWriter(const ExperimentConfig& cfg, const std::string& file, const std::vector<std::string>& header) {
    std::filesystem::create_directories(cfg.out_dir);
    path_ = (std::filesystem::path(cfg.out_dir) / file).string();
    out_.open(path_);
    if (!out_) throw std::runtime_error("cannot write " + path_);
    out_ << "# whittle-sched " << kVersion << " config=" << config_hash(cfg) << " seeds=";
    for (std::size_t i = 0; i < cfg.exp.seeds.size(); ++i) out_ << (i ? ";" : "") << cfg.exp.seeds[i];
    out_ << "\n";
    row_strings(header);
  }

  void row(const std::vector<Field>& fields) {
    std::vector<std::string> s;
    for (const auto& f : fields) {
      if (const auto* str = std::get_if<std::string>(&f)) s.push_back(*str);
      else if (const auto* l = std::get_if<long>(&f)) s.push_back(std::to_string(*l));
      else s.push_back(format_number(std::get<double>(f)));
    }
    row_strings(s);
  }

  const std::string& path() const { return path_; }

 private:
  void row_strings(const std::vector<std::string>& s) {
    for (std::size_t i = 0; i < s.size(); ++i) out_ << (i ? "," : "") << s[i];
    out_ << "\n";
  }

  std::string path_;
  std::ofstream out_;
};

void write_json(const ExperimentConfig& cfg, const std::string& file, const json& j) {
  std::filesystem::create_directories(cfg.out_dir);
  std::ofstream out(std::filesystem::path(cfg.out_dir) / file);
  if (!out) throw std::runtime_error("cannot write " + file);
  out << j.dump(2) << "\n";
}

// Everything the simulation-facing commands need, solved once.
struct Model {
  IndexTable table;
  RelaxedSolution solution;

  explicit Model(const ClassMix& mix) : table(mix) {
    try {
      solution = solve_relaxed(mix, table);
    } catch (const RangeError& e) {
      throw ConfigError(e.what());
    }
  }

  const RelaxedSolution* relaxed() const { return solution.degenerate() ? nullptr : &solution; }
};

std::string state_kind(BeliefState s) {
  switch (s.kind) {
    case BeliefKind::OffAge: return "off";
    case BeliefKind::OnAge: return "on";
    case BeliefKind::Stationary: return "stationary";
  }
  return "?";
}

StateVector start_vector(const std::string& name, const Model& m, const ExperimentConfig& cfg) {
  const StateLayout& lay = m.table.layout();
  StateVector z = StateVector::Zero(lay.dim());
  if (name == "x" || name == "y") {
    const BeliefState s = name == "x" ? BeliefState::off(1) : BeliefState::stationary();
    for (int k = 0; k < lay.num_classes(); ++k) z(lay.coord(k, s)) = cfg.mix.gamma[k];
    return z;
  }
  if (m.solution.degenerate()) throw ConfigError("start '" + name + "' needs a stationary occupancy (transient regime)");
  if (name == "zeta") return m.solution.zeta;
  try {
    return perturb_within_simplex(m.solution.zeta, lay, cfg.exp.delta, cfg.exp.seeds.front());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

InitialState start_state(const std::string& name, const Model& m, const ExperimentConfig& cfg) {
  if (name == "x") return InitialState::all_off();
  if (name == "y") return InitialState::all_stationary();
  return InitialState::at(start_vector(name, m, cfg));
}

SimConfig sim_config(const ExperimentConfig& cfg, const Model& m, long N, const std::string& start) {
  SimConfig s;
  s.mix = cfg.mix;
  s.N = N;
  s.horizon = cfg.exp.horizon;
  s.burn_in = cfg.exp.burn_in;
  s.policy = cfg.exp.policy;
  s.start = start_state(start, m, cfg);
  s.seed = cfg.exp.seeds.front();
  return s;
}

const StateVector& require_zeta(const Model& m) {
  if (m.solution.degenerate()) {
    throw ConfigError("transient regime: class " + std::to_string(m.solution.transient_class) +
                      " goes silent and there is no stationary occupancy");
  }
  return m.solution.zeta;
}

void require_relaxed_policy_ok(const ExperimentConfig& cfg, const Model& m) {
  if (cfg.exp.policy == Policy::Relaxed) require_zeta(m);
}

json solution_json(const Model& m) {
  const RelaxedSolution& s = m.solution;
  json classes = json::array();
  for (int k = 0; k < s.mix.num_classes(); ++k) {
    const ClassPolicy& p = s.policy[k];
    classes.push_back({{"threshold", p.silent ? "silent" : BeliefState::off(p.threshold_age).to_string()},
                       {"rho", p.rho},
                       {"activation", s.activation[k]}});
  }
  return {{"status", to_string(s.status)},
          {"omega_star", s.omega_star},
          {"rho_star", std::isnan(s.rho_star) ? json(nullptr) : json(s.rho_star)},
          {"throughput_per_user", std::isnan(s.throughput_per_user) ? json(nullptr) : json(s.throughput_per_user)},
          {"classes", classes},
          {"warnings", s.warnings}};
}

void write_zeta(const ExperimentConfig& cfg, const Model& m) {
  CsvWriter csv(cfg, "zeta.csv", {"class", "state", "age", "zeta"});
  const StateLayout& lay = m.table.layout();
  for (int c = 0; c < lay.dim(); ++c) {
    const BeliefState s = lay.state_at(c);
    csv.row({static_cast<long>(lay.class_of(c)), state_kind(s), static_cast<long>(s.age), m.solution.zeta(c)});
  }
}

}  // namespace

int cmd_index_table(const ExperimentConfig& cfg, std::ostream& out) {
  const IndexTable table(cfg.mix);
  const StateLayout& lay = table.layout();
  CsvWriter csv(cfg, "index_table.csv", {"class", "state", "age", "belief", "index"});
  for (int c = 0; c < lay.dim(); ++c) {
    const BeliefState s = lay.state_at(c);
    csv.row({static_cast<long>(lay.class_of(c)), state_kind(s), static_cast<long>(s.age), table.belief(c),
             table.index(c)});
  }
  out << "wrote " << csv.path() << "\n";
  return 0;
}

int cmd_solve_relaxed(const ExperimentConfig& cfg, std::ostream& out) {
  const Model m(cfg.mix);
  const json j = solution_json(m);
  write_json(cfg, "relaxed.json", j);
  if (!m.solution.degenerate()) write_zeta(cfg, m);
  out << j.dump(2) << "\n";
  return 0;
}

int cmd_fluid_run(const ExperimentConfig& cfg, std::ostream& out) {
  const Model m(cfg.mix);
  const StateVector& zeta = require_zeta(m);
  const FluidModel fluid(m.table, cfg.mix.alpha);
  std::optional<LinearizedSystem> region;
  try {
    region = linearize(fluid, m.solution);
  } catch (const NonGenericError&) {
  }
  const std::string start = cfg.exp.starts.front();
  const StateVector z0 = start_vector(start, m, cfg);

  std::vector<std::string> header{"t", "distance", "in_region"};
  for (int c = 0; c < m.table.dim(); ++c) header.push_back("z" + std::to_string(c));
  CsvWriter csv(cfg, "fluid_trajectory.csv", header);
  StateVector z = z0;
  for (long t = 0; t <= cfg.exp.steps; ++t) {
    std::vector<Field> row{t, (z - zeta).norm(), region ? std::string(region->in_region(m.table, z) ? "1" : "0")
                                                         : std::string("")};
    for (int c = 0; c < z.size(); ++c) row.emplace_back(z(c));
    csv.row(row);
    if (t < cfg.exp.steps) z = fluid.step(z);
  }
  out << "start=" << start << " steps=" << cfg.exp.steps << " final_distance=" << format_number((z - zeta).norm())
      << "\nwrote " << csv.path() << "\n";
  return 0;
}

int cmd_stability(const ExperimentConfig& cfg, std::ostream& out) {
  const Model m(cfg.mix);
  require_zeta(m);
  const FluidModel fluid(m.table, cfg.mix.alpha);
  LinearizedSystem sys;
  try {
    sys = linearize(fluid, m.solution);
  } catch (const NonGenericError& e) {
    out << "stability not certified: " << e.what() << "\n";
    return 1;
  }
  const StabilityCertificate cert = stability_certificate(sys.U_star);
  CsvWriter csv(cfg, "stability.csv", {"K", "rho_hat"});
  for (const auto& [k, est] : cert.estimates) csv.row({static_cast<long>(k), est});
  out << (cert.certified ? "stability certified" : "stability not certified") << "\n";
  for (const auto& [k, est] : cert.estimates) out << "  K=" << k << " rho_hat=" << format_number(est) << "\n";
  return cert.certified ? 0 : 1;
}

int cmd_simulate(const ExperimentConfig& cfg, std::ostream& out) {
  const Model m(cfg.mix);
  require_relaxed_policy_ok(cfg, m);
  const std::string start = cfg.exp.starts.front();
  CsvWriter runs(cfg, "simulate.csv",
                 {"N", "policy", "seed", "belief_throughput", "realized_throughput", "activation_rate"});
  CsvWriter summary(cfg, "simulate_summary.csv",
                    {"N", "policy", "belief_mean", "belief_se", "realized_mean", "realized_se", "activation_mean",
                     "activation_se", "relaxed_bound", "seeds"});
  for (long N : cfg.exp.N) {
    const SimConfig base = sim_config(cfg, m, N, start);
    const ThroughputReport rep = run_throughput(base, cfg.exp.seeds, m.table, m.relaxed());
    for (std::size_t i = 0; i < cfg.exp.seeds.size(); ++i) {
      runs.row({N, policy_name(cfg.exp.policy), static_cast<long>(cfg.exp.seeds[i]), rep.belief[i], rep.realized[i],
                rep.activation[i]});
    }
    summary.row({N, policy_name(cfg.exp.policy), rep.belief_est.mean, rep.belief_est.se, rep.realized_est.mean,
                 rep.realized_est.se, rep.activation_est.mean, rep.activation_est.se,
                 m.solution.throughput_per_user, static_cast<long>(cfg.exp.seeds.size())});
    out << "N=" << N << " belief_throughput=" << format_number(rep.belief_est.mean)
        << " se=" << format_number(rep.belief_est.se) << "\n";
  }
  return 0;
}

namespace {

void hitting_rows(const ExperimentConfig& cfg, const Model& m, CsvWriter& csv, std::ostream& out) {
  const StateVector& zeta = require_zeta(m);
  for (long N : cfg.exp.N) {
    for (const auto& start : cfg.exp.starts) {
      const SimConfig base = sim_config(cfg, m, N, start);
      const HittingReport rep =
          hitting_times(base, cfg.exp.seeds, m.table, m.relaxed(), cfg.exp.epsilon, zeta, cfg.exp.max_t);
      csv.row({N, start, rep.est.mean, rep.est.se, static_cast<long>(cfg.exp.seeds.size()), rep.misses});
      out << "N=" << N << " start=" << start << " mean=" << format_number(rep.est.mean)
          << " misses=" << rep.misses << "\n";
    }
  }
}

}  // namespace

int cmd_hitting_time(const ExperimentConfig& cfg, std::ostream& out) {
  const Model m(cfg.mix);
  require_relaxed_policy_ok(cfg, m);
  CsvWriter csv(cfg, "hitting_time.csv", {"N", "start", "mean", "se", "seeds", "misses"});
  hitting_rows(cfg, m, csv, out);
  return 0;
}

int cmd_occupancy(const ExperimentConfig& cfg, std::ostream& out) {
  const Model m(cfg.mix);
  const StateVector& zeta = require_zeta(m);
  CsvWriter csv(cfg, "occupancy.csv", {"N", "start", "epsilon", "mean", "se", "seeds"});
  for (long N : cfg.exp.N) {
    for (const auto& start : cfg.exp.starts) {
      const SimConfig base = sim_config(cfg, m, N, start);
      std::vector<double> occ(cfg.exp.seeds.size());
      fan_out(static_cast<long>(occ.size()), [&](long i) {
        SimConfig c = base;
        c.seed = cfg.exp.seeds[i];
        occ[i] = occupancy(c, m.table, m.relaxed(), cfg.exp.epsilon, zeta);
      });
      const Estimate e = estimate(occ);
      csv.row({N, start, cfg.exp.epsilon, e.mean, e.se, static_cast<long>(occ.size())});
      out << "N=" << N << " start=" << start << " occupancy=" << format_number(e.mean) << "\n";
    }
  }
  return 0;
}

int cmd_deviation(const ExperimentConfig& cfg, std::ostream& out) {
  const Model m(cfg.mix);
  require_relaxed_policy_ok(cfg, m);
  const FluidModel fluid(m.table, cfg.mix.alpha);
  CsvWriter csv(cfg, "deviation.csv", {"N", "start", "median", "mean", "se", "seeds"});
  CsvWriter runs(cfg, "deviation_runs.csv", {"N", "start", "seed", "sup_deviation"});
  for (long N : cfg.exp.N) {
    for (const auto& start : cfg.exp.starts) {
      const SimConfig base = sim_config(cfg, m, N, start);
      std::vector<double> dev(cfg.exp.seeds.size());
      fan_out(static_cast<long>(dev.size()), [&](long i) {
        SimConfig c = base;
        c.seed = cfg.exp.seeds[i];
        dev[i] = trajectory_deviation(c, m.table, m.relaxed(), fluid);
      });
      for (std::size_t i = 0; i < dev.size(); ++i) {
        runs.row({N, start, static_cast<long>(cfg.exp.seeds[i]), dev[i]});
      }
      const Estimate e = estimate(dev);
      csv.row({N, start, median(dev), e.mean, e.se, static_cast<long>(dev.size())});
      out << "N=" << N << " start=" << start << " median_sup_deviation=" << format_number(median(dev)) << "\n";
    }
  }
  return 0;
}

int cmd_sweep(const ExperimentConfig& cfg, std::ostream& out) {
  const Model m(cfg.mix);
  if (cfg.exp.sweep == "hitting-time") {
    require_relaxed_policy_ok(cfg, m);
    CsvWriter csv(cfg, "sweep.csv", {"N", "start", "mean", "se", "seeds", "misses"});
    hitting_rows(cfg, m, csv, out);
    return 0;
  }
  require_zeta(m);
  const double r = m.solution.throughput_per_user;
  CsvWriter csv(cfg, "sweep.csv", {"N", "start", "belief_mean", "belief_se", "relaxed_bound", "gap", "seeds"});
  for (long N : cfg.exp.N) {
    for (const auto& start : cfg.exp.starts) {
      SimConfig base = sim_config(cfg, m, N, start);
      base.policy = Policy::Whittle;
      const ThroughputReport rep = run_throughput(base, cfg.exp.seeds, m.table, m.relaxed());
      csv.row({N, start, rep.belief_est.mean, rep.belief_est.se, r, r - rep.belief_est.mean,
               static_cast<long>(cfg.exp.seeds.size())});
      out << "N=" << N << " start=" << start << " gap=" << format_number(r - rep.belief_est.mean) << "\n";
    }
  }
  return 0;
}

int cmd_pipeline(const ExperimentConfig& cfg, std::ostream& out) {
  const Model m(cfg.mix);
  json report = {{"version", kVersion}, {"config", config_hash(cfg)}, {"solution", solution_json(m)}};
  json checks = json::array();
  bool ok = true;
  auto check = [&](const std::string& name, bool passed, double value, double tolerance) {
    checks.push_back({{"name", name}, {"passed", passed}, {"value", value}, {"tolerance", tolerance}});
    ok = ok && passed;
  };
  std::vector<std::string> notes;

  if (m.solution.degenerate()) {
    notes.push_back("transient regime: fluid and simulation checks skipped");
  } else {
    write_zeta(cfg, m);
    double used = 0.0;
    for (int k = 0; k < cfg.mix.num_classes(); ++k) used += cfg.mix.gamma[k] * m.solution.activation[k];
    check("constraint_residual", std::abs(used - cfg.mix.alpha) < 1e-12, std::abs(used - cfg.mix.alpha), 1e-12);

    const FluidModel fluid(m.table, cfg.mix.alpha);
    const double fp = fluid.drift(m.solution.zeta).norm();
    check("fixed_point_residual", fp < 1e-10, fp, 1e-10);

    try {
      const LinearizedSystem sys = linearize(fluid, m.solution);
      const StabilityCertificate cert = stability_certificate(sys.U_star);
      CsvWriter csv(cfg, "stability.csv", {"K", "rho_hat"});
      for (const auto& [k, est] : cert.estimates) csv.row({static_cast<long>(k), est});
      check("stability_certificate", cert.certified, cert.estimates.back().second, 1.0);
    } catch (const NonGenericError& e) {
      notes.push_back(std::string("stability skipped: ") + e.what());
    }

    if (cfg.exp.simulate) {
      const double r = m.solution.throughput_per_user;
      for (long N : cfg.exp.N) {
        SimConfig base = sim_config(cfg, m, N, cfg.exp.starts.front());
        base.policy = Policy::Relaxed;
        const ThroughputReport rel = run_throughput(base, cfg.exp.seeds, m.table, m.relaxed());
        const std::string tag = "_N" + std::to_string(N);
        const double se_a = std::isnan(rel.activation_est.se) ? 0.0 : rel.activation_est.se;
        const double se_r = std::isnan(rel.belief_est.se) ? 0.0 : rel.belief_est.se;
        check("relaxed_activation" + tag, std::abs(rel.activation_est.mean - cfg.mix.alpha) <= 3 * se_a,
              rel.activation_est.mean, 3 * se_a);
        check("relaxed_throughput" + tag, std::abs(rel.belief_est.mean - r) <= 3 * se_r, rel.belief_est.mean,
              3 * se_r);
        base.policy = Policy::Whittle;
        const ThroughputReport wh = run_throughput(base, cfg.exp.seeds, m.table, m.relaxed());
        const double se_w = std::isnan(wh.belief_est.se) ? 0.0 : wh.belief_est.se;
        check("whittle_below_bound" + tag, wh.belief_est.mean <= r + 3 * se_w, wh.belief_est.mean, r + 3 * se_w);
      }
    }
  }
  report["checks"] = checks;
  report["notes"] = notes;
  report["passed"] = ok;
  write_json(cfg, "report.json", report);
  out << report.dump(2) << "\n";
  return ok ? 0 : 1;
}

}  // namespace whittle
