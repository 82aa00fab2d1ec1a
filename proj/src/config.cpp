#include "smm/config.hpp"

#include <fstream>
#include <set>

namespace smm {

using nlohmann::json;

CurriculumSchedule RunConfig::schedule() const {
  CurriculumSchedule s;
  s.mu0 = mu0;
  s.mu1 = mu1;
  s.sigma = sigma;
  s.ramp_steps = ramp_steps;
  s.add_onset = add_onset;
  s.p_add = p_add;
  return s;
}

StrategyStats RunConfig::initial_stats() const {
  StrategyStats s;
  s.w_retrieval_add = w_init;
  s.w_finger = w_init;
  s.w_retrieval_count = w_init;
  s.beta = beta;
  s.w_floor = w_floor;
  return s;
}

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) {
    throw ConfigError(message);
  }
}

}  // namespace

RunConfig RunConfig::resolved() const {
  RunConfig c = *this;
  if (c.ramp_steps < 0) {
    c.ramp_steps = (c.total_steps * 3) / 5;  // difficulty ramps over 60% of the run
  }
  require(c.total_steps >= 1, "total_steps must be >= 1");
  require(c.d >= 2, "d must be >= 2");
  require(c.H >= 2, "H must be >= 2");
  require(c.learning_rate > 0.0, "learning_rate must be > 0");
  require(c.mu0 <= c.mu1, "mu0 must be <= mu1");
  require(c.sigma > 0.0, "sigma must be > 0");
  require(c.add_onset >= 0, "add_onset must be >= 0");
  require(c.p_add > 0.0 && c.p_add < 1.0, "p_add must lie strictly in (0,1)");
  require(c.theta_add >= 0.0 && c.theta_add <= 1.0, "theta_add must lie in [0,1]");
  require(c.theta_count >= 0.0 && c.theta_count <= 1.0, "theta_count must lie in [0,1]");
  require(c.beta > 0.0 && c.beta < 1.0, "beta must lie strictly in (0,1)");
  require(c.w_floor > 0.0 && c.w_floor < 0.5, "w_floor must lie strictly in (0,0.5)");
  require(c.w_init >= c.w_floor && c.w_init <= 1.0, "w_init must lie in [w_floor,1]");
  require(c.snapshot_every_k >= 1, "snapshot_every_k must be >= 1");
  require(c.metrics_window >= 1, "metrics_window must be >= 1");
  require(!c.probes.empty(), "probes must list at least one problem");
  require(!c.out_dir.empty(), "out_dir must not be empty");
  return c;
}

Problem parse_problem(const std::string& text) {
  const auto fail = [&](const std::string& token) -> Problem {
    throw InputError("cannot parse problem \"" + text + "\": unexpected \"" + token + "\"");
  };
  std::size_t pos = 0;
  const auto read_number = [&]() -> int {
    std::size_t start = pos;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
      ++pos;
    }
    if (pos == start) {
      fail(pos < text.size() ? std::string(1, text[pos]) : "end of input");
    }
    const int value = std::stoi(text.substr(start, pos - start));
    if (value < 1 || value > kNumTokens) {
      fail(text.substr(start, pos - start));
    }
    return value;
  };

  const int a = read_number();
  if (pos >= text.size() || (text[pos] != '+' && text[pos] != '>')) {
    fail(pos < text.size() ? std::string(1, text[pos]) : "end of input");
  }
  const char op = text[pos++];
  const int b = read_number();
  if (pos != text.size()) {
    fail(std::string(1, text[pos]));
  }
  return Problem{a, b, op == '+' ? Operator::kAdd : Operator::kCountUp};
}

std::string format_problem(const Problem& problem) {
  return std::to_string(problem.a) + (problem.op == Operator::kAdd ? "+" : ">") +
         std::to_string(problem.b);
}

namespace {

const std::set<std::string>& run_config_keys() {
  static const std::set<std::string> keys = {
      "seed",       "total_steps", "d",           "H",         "learning_rate",
      "mu0",        "mu1",         "sigma",       "ramp_steps", "add_onset",
      "p_add",      "theta_add",   "theta_count", "beta",      "w_floor",
      "w_init",     "probes",      "snapshot_every_k", "metrics_window", "out_dir"};
  return keys;
}

template <typename T>
T get_checked(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) {
    return fallback;
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key \"" + key + "\" has the wrong type");
  }
}

}  // namespace

RunConfig run_config_from_json(const json& j) {
  if (!j.is_object()) {
    throw ConfigError("run config must be a JSON object");
  }
  for (const auto& item : j.items()) {
    if (run_config_keys().count(item.key()) == 0) {
      throw ConfigError("unknown config key \"" + item.key() + "\"");
    }
  }
  RunConfig c;
  c.seed = get_checked<std::uint64_t>(j, "seed", c.seed);
  c.total_steps = get_checked<long long>(j, "total_steps", c.total_steps);
  c.d = get_checked<int>(j, "d", c.d);
  c.H = get_checked<int>(j, "H", c.H);
  c.learning_rate = get_checked<double>(j, "learning_rate", c.learning_rate);
  c.mu0 = get_checked<double>(j, "mu0", c.mu0);
  c.mu1 = get_checked<double>(j, "mu1", c.mu1);
  c.sigma = get_checked<double>(j, "sigma", c.sigma);
  c.ramp_steps = get_checked<long long>(j, "ramp_steps", c.ramp_steps);
  c.add_onset = get_checked<long long>(j, "add_onset", c.add_onset);
  c.p_add = get_checked<double>(j, "p_add", c.p_add);
  c.theta_add = get_checked<double>(j, "theta_add", c.theta_add);
  c.theta_count = get_checked<double>(j, "theta_count", c.theta_count);
  c.beta = get_checked<double>(j, "beta", c.beta);
  c.w_floor = get_checked<double>(j, "w_floor", c.w_floor);
  c.w_init = get_checked<double>(j, "w_init", c.w_init);
  c.snapshot_every_k = get_checked<long long>(j, "snapshot_every_k", c.snapshot_every_k);
  c.metrics_window = get_checked<long long>(j, "metrics_window", c.metrics_window);
  c.out_dir = get_checked<std::string>(j, "out_dir", c.out_dir);
  if (j.contains("probes")) {
    c.probes.clear();
    for (const auto& entry : get_checked<std::vector<std::string>>(j, "probes", {})) {
      try {
        c.probes.push_back(parse_problem(entry));
      } catch (const InputError& e) {
        throw ConfigError(std::string("config key \"probes\": ") + e.what());
      }
    }
  }
  return c;
}

json run_config_to_json(const RunConfig& cfg) {
  json j;
  j["seed"] = cfg.seed;
  j["total_steps"] = cfg.total_steps;
  j["d"] = cfg.d;
  j["H"] = cfg.H;
  j["learning_rate"] = cfg.learning_rate;
  j["mu0"] = cfg.mu0;
  j["mu1"] = cfg.mu1;
  j["sigma"] = cfg.sigma;
  j["ramp_steps"] = cfg.ramp_steps;
  j["add_onset"] = cfg.add_onset;
  j["p_add"] = cfg.p_add;
  j["theta_add"] = cfg.theta_add;
  j["theta_count"] = cfg.theta_count;
  j["beta"] = cfg.beta;
  j["w_floor"] = cfg.w_floor;
  j["w_init"] = cfg.w_init;
  std::vector<std::string> probes;
  probes.reserve(cfg.probes.size());
  for (const auto& p : cfg.probes) {
    probes.push_back(format_problem(p));
  }
  j["probes"] = probes;
  j["snapshot_every_k"] = cfg.snapshot_every_k;
  j["metrics_window"] = cfg.metrics_window;
  j["out_dir"] = cfg.out_dir;
  return j;
}

namespace {

json parse_json_file(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) {
    throw IoError(std::string("cannot open ") + what + " file: " + path);
  }
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid JSON in ") + path + ": " + e.what());
  }
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
  return run_config_from_json(parse_json_file(path, "config"));
}

SweepSpec sweep_spec_from_json(const json& j) {
  if (!j.is_object()) {
    throw ConfigError("sweep spec must be a JSON object");
  }
  static const std::set<std::string> keys = {"base", "onsets", "seeds", "parallelism"};
  for (const auto& item : j.items()) {
    if (keys.count(item.key()) == 0) {
      throw ConfigError("unknown sweep key \"" + item.key() + "\"");
    }
  }
  SweepSpec spec;
  if (j.contains("base")) {
    spec.base = run_config_from_json(j.at("base"));
  }
  if (j.contains("onsets")) {
    spec.onsets = get_checked<std::vector<long long>>(j, "onsets", {});
  }
  if (j.contains("seeds")) {
    spec.seeds = get_checked<std::vector<std::uint64_t>>(j, "seeds", {});
  }
  spec.parallelism = get_checked<int>(j, "parallelism", 0);
  if (spec.onsets.empty()) {
    throw ConfigError("sweep key \"onsets\" must list at least one onset");
  }
  if (spec.seeds.empty()) {
    throw ConfigError("sweep key \"seeds\" must list at least one seed");
  }
  for (long long onset : spec.onsets) {
    if (onset < 0) {
      throw ConfigError("sweep key \"onsets\" must be non-negative");
    }
  }
  if (spec.parallelism < 0) {
    throw ConfigError("sweep key \"parallelism\" must be >= 0");
  }
  return spec;
}

SweepSpec load_sweep_spec(const std::string& path) {
  return sweep_spec_from_json(parse_json_file(path, "sweep spec"));
}

}  // namespace smm
