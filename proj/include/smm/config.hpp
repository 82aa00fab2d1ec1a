#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "smm/curriculum.hpp"
#include "smm/strategies.hpp"
#include "smm/types.hpp"

#include <json.hpp>

namespace smm {

// Everything one run needs. Flat key set, strict parsing: unknown keys and
// invariant violations are ConfigErrors naming the key.
struct RunConfig {
  std::uint64_t seed = 1;
  long long total_steps = 50000;
  int d = 16;
  int H = 32;
  double learning_rate = 0.02;

  double mu0 = 2.0;
  double mu1 = 10.0;
  double sigma = 2.0;
  long long ramp_steps = -1;  // -1: resolve to 60% of total_steps
  long long add_onset = 10000;
  double p_add = 0.8;

  double theta_add = 0.85;
  double theta_count = 0.85;
  double beta = 0.05;
  double w_floor = 0.05;
  double w_init = 0.5;

  std::vector<Problem> probes{make_add(3, 4)};
  long long snapshot_every_k = 10;
  long long metrics_window = 500;
  std::string out_dir = "runs/run";

  CurriculumSchedule schedule() const;
  StrategyStats initial_stats() const;

  // Fills derived defaults (ramp_steps) and validates invariants.
  RunConfig resolved() const;
};

// "a+b" (addition) or "a>b" (count up); throws InputError naming the
// offending token.
Problem parse_problem(const std::string& text);
std::string format_problem(const Problem& problem);

// Strict parsers: every key must be known, every invariant must hold.
RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json run_config_to_json(const RunConfig& cfg);
RunConfig load_run_config(const std::string& path);

struct SweepSpec {
  RunConfig base;
  std::vector<long long> onsets{0, 5000, 10000, 20000};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  int parallelism = 0;  // 0: hardware concurrency
};

SweepSpec sweep_spec_from_json(const nlohmann::json& j);
SweepSpec load_sweep_spec(const std::string& path);

}  // namespace smm
