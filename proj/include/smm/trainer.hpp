#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "smm/config.hpp"
#include "smm/model.hpp"
#include "smm/rng.hpp"
#include "smm/strategies.hpp"
#include "smm/telemetry.hpp"
#include "smm/trial_record.hpp"

#include <json.hpp>

namespace smm {

// Everything a run owns. One run is strictly single-threaded; concurrency
// exists only across runs, which share nothing.
struct RunState {
  ModelParams params;
  StrategyStats stats;
  Rng rng;
  long long step = 0;
  std::uint64_t seed = 0;
};

RunState make_run_state(const RunConfig& cfg);

// Receives each trial as it happens (telemetry, tests).
class TrialObserver {
 public:
  virtual ~TrialObserver() = default;
  virtual void on_trial(const TrialRecord& rec, const AnswerDistribution& retrieval_dist) = 0;
};

// One full trial: sample a problem, solve it through the strategy layer,
// derive the training target (ground truth for counting, the produced answer
// for addition), take one SGD step, update strategy statistics.
TrialRecord run_trial(RunState& state, const RunConfig& cfg, TrialObserver* observer);

// Pure argmax retrieval accuracy, no sampling, no fallback: all 25 addition
// pairs (a,b in 1..5) or all 9 count-up items (b in 1..9).
double evaluate_model(const ModelParams& params, Operator task);

void save_checkpoint(const RunState& state, const std::filesystem::path& path);
RunState load_checkpoint(const std::filesystem::path& path);

struct RunSummary {
  long long total_steps = 0;
  long long add_onset = 0;
  double final_add_retrieval_accuracy = 0.0;
  double final_count_retrieval_accuracy = 0.0;
  std::optional<double> peak_usage;
  std::optional<long long> peak_usage_window;
  std::optional<double> final_usage;  // pooled finger/ADD over the last 2000 trials
  std::optional<double> early_post_onset_add_accuracy;  // first 2000 post-onset trials
  std::optional<long long> add_accuracy_change_point;   // behavioral, level 0.5
};

nlohmann::json run_summary_to_json(const RunSummary& summary);
RunSummary run_summary_from_json(const nlohmann::json& j);

struct RunArtifacts {
  std::filesystem::path dir;
  std::filesystem::path config_path;
  std::filesystem::path trials_path;
  std::filesystem::path metrics_path;
  std::filesystem::path snapshots_path;
  std::filesystem::path checkpoint_path;
  std::filesystem::path summary_path;
  std::filesystem::path meta_path;
  RunSummary summary;
};

// Executes the full run and writes every artifact. On a non-finite loss the
// partial artifacts are flushed, error.json is written, and the
// TrainingError propagates.
RunArtifacts run_experiment(const RunConfig& cfg);

}  // namespace smm
