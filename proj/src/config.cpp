#include "whittle/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace whittle {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!known.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
  }
}

template <class T>
T get(const json& obj, const char* key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

void check_integrality(const ClassMix& mix, long N) {
  if (N < 1) throw ConfigError("N must be positive");
  SimConfig probe;
  probe.mix = mix;
  probe.N = N;
  try {
    probe.class_sizes();
    probe.slots_per_step();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("N=" + std::to_string(N) + ": " + e.what());
  }
}

}  // namespace

std::string policy_name(Policy p) { return p == Policy::Whittle ? "whittle" : "relaxed"; }

ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(j, {"schema", "name", "classes", "gamma", "alpha", "tau", "experiment", "out"}, "config");
  if (!j.contains("schema") || j.at("schema") != 1) throw ConfigError("config needs \"schema\": 1");

  ExperimentConfig cfg;
  if (j.contains("name")) cfg.name = get<std::string>(j, "name", "config");
  if (j.contains("out")) cfg.out_dir = get<std::string>(j, "out", "config");

  if (!j.contains("classes") || !j.at("classes").is_array() || j.at("classes").empty()) {
    throw ConfigError("config.classes must be a non-empty array");
  }
  const int tau = j.contains("tau") ? get<int>(j, "tau", "config") : 16;
  std::vector<ChannelClass> classes;
  for (const auto& c : j.at("classes")) {
    if (!c.is_object()) throw ConfigError("each class must be an object {p, r}");
    reject_unknown(c, {"p", "r"}, "class");
    try {
      classes.push_back(ChannelClass::make(get<double>(c, "p", "class"), get<double>(c, "r", "class"), tau));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  std::vector<double> gamma = j.contains("gamma") ? get<std::vector<double>>(j, "gamma", "config")
                                                   : std::vector<double>(classes.size(), 1.0 / classes.size());
  try {
    cfg.mix = ClassMix::make(classes, gamma, get<double>(j, "alpha", "config"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  if (j.contains("experiment")) {
    const json& e = j.at("experiment");
    if (!e.is_object()) throw ConfigError("config.experiment must be an object");
    reject_unknown(e,
                   {"N", "horizon", "burn_in", "seeds", "epsilon", "starts", "policy", "max_t", "steps", "delta",
                    "sweep", "simulate"},
                   "experiment");
    ExperimentParams& x = cfg.exp;
    const std::string w = "experiment";
    if (e.contains("N")) {
      x.N = e.at("N").is_array() ? get<std::vector<long>>(e, "N", w) : std::vector<long>{get<long>(e, "N", w)};
    }
    if (e.contains("horizon")) x.horizon = get<long>(e, "horizon", w);
    if (e.contains("burn_in")) x.burn_in = get<long>(e, "burn_in", w);
    if (e.contains("seeds")) x.seeds = get<std::vector<std::uint64_t>>(e, "seeds", w);
    if (e.contains("epsilon")) x.epsilon = get<double>(e, "epsilon", w);
    if (e.contains("starts")) x.starts = get<std::vector<std::string>>(e, "starts", w);
    if (e.contains("policy")) {
      const auto p = get<std::string>(e, "policy", w);
      if (p == "whittle") x.policy = Policy::Whittle;
      else if (p == "relaxed") x.policy = Policy::Relaxed;
      else throw ConfigError("experiment.policy must be \"whittle\" or \"relaxed\"");
    }
    if (e.contains("max_t")) x.max_t = get<long>(e, "max_t", w);
    if (e.contains("steps")) x.steps = get<long>(e, "steps", w);
    if (e.contains("delta")) x.delta = get<double>(e, "delta", w);
    if (e.contains("sweep")) x.sweep = get<std::string>(e, "sweep", w);
    if (e.contains("simulate")) x.simulate = get<bool>(e, "simulate", w);
  }

  const ExperimentParams& x = cfg.exp;
  if (x.N.empty()) throw ConfigError("experiment.N must not be empty");
  for (long n : x.N) check_integrality(cfg.mix, n);
  if (x.horizon < 1) throw ConfigError("experiment.horizon must be >= 1");
  if (x.burn_in >= x.horizon) throw ConfigError("experiment.burn_in must be shorter than the horizon");
  if (x.seeds.empty()) throw ConfigError("experiment.seeds must not be empty");
  if (!(x.epsilon > 0.0)) throw ConfigError("experiment.epsilon must be positive");
  if (x.starts.empty()) throw ConfigError("experiment.starts must not be empty");
  for (const auto& s : x.starts) {
    if (s != "x" && s != "y" && s != "zeta" && s != "near-zeta") {
      throw ConfigError("unknown start '" + s + "' (expected x, y, zeta or near-zeta)");
    }
  }
  if (x.max_t < 0) throw ConfigError("experiment.max_t must be >= 0");
  if (x.steps < 0) throw ConfigError("experiment.steps must be >= 0");
  if (!(x.delta >= 0.0)) throw ConfigError("experiment.delta must be >= 0");
  if (x.sweep != "hitting-time" && x.sweep != "throughput-gap") {
    throw ConfigError("experiment.sweep must be \"hitting-time\" or \"throughput-gap\"");
  }
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed JSON in " + path + ": " + e.what());
  }
  return parse_config(j);
}

namespace {

json two_class_base() {
  return {{"schema", 1},
          {"classes", json::array({{{"p", 0.9}, {"r", 0.45}}, {{"p", 0.8}, {"r", 0.3}}})},
          {"gamma", {0.45, 0.55}},
          {"alpha", 0.6},
          {"tau", 16}};
}

json fig2_base() {
  return {{"schema", 1}, {"classes", json::array({{{"p", 0.8}, {"r", 0.2}}})}, {"alpha", 0.75}, {"tau", 16}};
}

json seeds_1_to(int n) {
  json s = json::array();
  for (int i = 1; i <= n; ++i) s.push_back(i);
  return s;
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"two-class", "fig2", "fig5", "assumption-psi", "throughput-gap"};
}

ExperimentConfig preset(const std::string& name) {
  json j;
  if (name == "two-class") {
    j = two_class_base();
    j["experiment"] = {{"N", {10000}}, {"horizon", 20000}, {"seeds", seeds_1_to(10)}, {"starts", {"x", "y"}},
                       {"epsilon", 0.005}, {"max_t", 100000}};
  } else if (name == "fig2") {
    j = fig2_base();
    j["experiment"] = {{"N", {10000}}, {"horizon", 20000}, {"seeds", seeds_1_to(10)}};
  } else if (name == "fig5") {
    // Equal stationary beliefs (r = 1 - p); the slower-fading class has
    // the longer memory.
    j = {{"schema", 1},
         {"classes", json::array({{{"p", 0.93}, {"r", 0.07}}, {{"p", 0.75}, {"r", 0.25}}})},
         {"gamma", {0.5, 0.5}},
         {"alpha", 0.5},
         {"tau", 16}};
  } else if (name == "assumption-psi") {
    j = two_class_base();
    j["experiment"] = {{"N", {10000, 50000, 100000}}, {"seeds", seeds_1_to(30)}, {"starts", {"x", "y"}},
                       {"epsilon", 0.005}, {"max_t", 100000}, {"sweep", "hitting-time"}};
  } else if (name == "throughput-gap") {
    j = two_class_base();
    j["experiment"] = {{"N", {1000, 10000, 100000}}, {"horizon", 110000}, {"burn_in", 10000},
                       {"seeds", seeds_1_to(10)}, {"sweep", "throughput-gap"}};
  } else {
    std::string known;
    for (const auto& n : preset_names()) known += " " + n;
    throw ConfigError("unknown preset '" + name + "' (known:" + known + ")");
  }
  j["name"] = name;
  return parse_config(j);
}

json to_json(const ExperimentConfig& cfg) {
  json classes = json::array();
  for (const auto& c : cfg.mix.classes) classes.push_back({{"p", c.p}, {"r", c.r}});
  const ExperimentParams& x = cfg.exp;
  return {{"schema", 1},
          {"name", cfg.name},
          {"classes", classes},
          {"gamma", cfg.mix.gamma},
          {"alpha", cfg.mix.alpha},
          {"tau", cfg.mix.tau()},
          {"experiment",
           {{"N", x.N},
            {"horizon", x.horizon},
            {"burn_in", x.burn_in},
            {"seeds", x.seeds},
            {"epsilon", x.epsilon},
            {"starts", x.starts},
            {"policy", policy_name(x.policy)},
            {"max_t", x.max_t},
            {"steps", x.steps},
            {"delta", x.delta},
            {"sweep", x.sweep},
            {"simulate", x.simulate}}}};
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string config_hash(const ExperimentConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(to_json(cfg).dump())));
  return buf;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty() || item.find_first_not_of("0123456789") != std::string::npos) {
      throw ConfigError("--seeds expects a comma-separated list of non-negative integers");
    }
    try {
      out.push_back(std::stoull(item));
    } catch (const std::exception&) {
      throw ConfigError("seed out of range: " + item);
    }
  }
  if (out.empty()) throw ConfigError("--seeds must list at least one seed");
  return out;
}

}  // namespace whittle
