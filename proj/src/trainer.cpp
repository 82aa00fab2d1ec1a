#include "smm/trainer.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <deque>
#include <fstream>

#include "smm/curriculum.hpp"

namespace smm {

using nlohmann::json;

RunState make_run_state(const RunConfig& cfg) {
  RunState state;
  state.params = init_params(cfg.seed, cfg.d, cfg.H);
  state.stats = cfg.initial_stats();
  state.rng = Rng(cfg.seed);
  state.step = 0;
  state.seed = cfg.seed;
  return state;
}

TrialRecord run_trial(RunState& state, const RunConfig& cfg, TrialObserver* observer) {
  const CurriculumSchedule sched = cfg.schedule();
  const Problem problem = sample_trial(sched, state.step, state.rng);

  const TrialOutcome outcome =
      problem.op == Operator::kAdd
          ? solve_addition(state.params, state.stats, problem, cfg.theta_add, state.rng)
          : solve_counting(state.params, problem, cfg.theta_count, state.rng);

  // Counting is always corrected to ground truth ("being told"); addition
  // trains on whatever answer the chosen strategy produced, right or wrong.
  const int target = problem.op == Operator::kCountUp ? true_answer(problem) : outcome.answer;

  auto [dist, trace] = forward(state.params, problem);
  const double loss = cross_entropy(dist, target);
  if (!std::isfinite(loss)) {
    throw TrainingError("non-finite loss at step " + std::to_string(state.step) + " on problem " +
                        format_problem(problem));
  }
  try {
    sgd_step(state.params, backward(state.params, trace, target), cfg.learning_rate);
  } catch (const TrainingError& e) {
    throw TrainingError(std::string(e.what()) + " at step " + std::to_string(state.step) +
                        " on problem " + format_problem(problem));
  }

  if (outcome.strategy != StrategyKind::kOracleCount) {
    // A finger-count trial whose answer merely restates a confident retrieval
    // is redundant and counts against the scaffold; that is what retires
    // finger-counting instead of locking selection at 50/50. Disagreement
    // with retrieval (confident or not) keeps the scaffold credited.
    bool success = outcome.correct;
    if (outcome.strategy == StrategyKind::kFingerCount && outcome.confidence >= cfg.theta_add &&
        argmax_answer(outcome.distribution) == outcome.answer) {
      success = false;
    }
    update_stats(state.stats, outcome.strategy, success);
  }

  TrialRecord rec;
  rec.step = state.step;
  rec.problem = problem;
  rec.strategy = outcome.strategy;
  rec.answer = outcome.answer;
  rec.truth = true_answer(problem);
  rec.correct = outcome.correct;
  rec.confidence = outcome.confidence;
  rec.target = target;
  rec.loss = loss;
  rec.is_add = problem.op == Operator::kAdd;

  if (observer != nullptr) {
    observer->on_trial(rec, outcome.distribution);
  }
  state.step += 1;
  return rec;
}

double evaluate_model(const ModelParams& params, Operator task) {
  int correct = 0;
  int total = 0;
  if (task == Operator::kAdd) {
    for (int a = 1; a <= kMaxAddOperand; ++a) {
      for (int b = 1; b <= kMaxAddOperand; ++b) {
        const Problem p = make_add(a, b);
        correct += argmax_answer(forward(params, p).first) == a + b ? 1 : 0;
        ++total;
      }
    }
  } else {
    for (int b = 1; b <= kMaxCountCurrent; ++b) {
      const Problem p = make_count(b);
      correct += argmax_answer(forward(params, p).first) == b + 1 ? 1 : 0;
      ++total;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(total);
}

namespace {

constexpr int kCheckpointSchemaVersion = 1;

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows; ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols; ++c) {
      row.push_back(m.at(r, c));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, int rows, int cols, const char* name) {
  if (!j.is_array() || static_cast<int>(j.size()) != rows) {
    throw IoError(std::string("checkpoint field ") + name + " has the wrong shape");
  }
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const json& row = j.at(static_cast<std::size_t>(r));
    if (!row.is_array() || static_cast<int>(row.size()) != cols) {
      throw IoError(std::string("checkpoint field ") + name + " has the wrong shape");
    }
    for (int c = 0; c < cols; ++c) {
      m.at(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
    }
  }
  return m;
}

std::vector<double> vector_from_json(const json& j, int size, const char* name) {
  if (!j.is_array() || static_cast<int>(j.size()) != size) {
    throw IoError(std::string("checkpoint field ") + name + " has the wrong shape");
  }
  return j.get<std::vector<double>>();
}

}  // namespace

void save_checkpoint(const RunState& state, const std::filesystem::path& path) {
  json j;
  j["schema_version"] = kCheckpointSchemaVersion;
  j["d"] = state.params.d;
  j["H"] = state.params.H;
  j["seed"] = state.seed;
  j["step"] = state.step;

  json params;
  params["num_embed"] = matrix_to_json(state.params.num_embed);
  params["op_embed"] = matrix_to_json(state.params.op_embed);
  params["gate_w"] = matrix_to_json(state.params.gate_w);
  params["gate_b"] = state.params.gate_b;
  params["w1"] = matrix_to_json(state.params.w1);
  params["b1"] = state.params.b1;
  params["w2"] = matrix_to_json(state.params.w2);
  params["b2"] = state.params.b2;
  j["params"] = std::move(params);

  json stats;
  stats["w_retrieval_add"] = state.stats.w_retrieval_add;
  stats["w_finger"] = state.stats.w_finger;
  stats["w_retrieval_count"] = state.stats.w_retrieval_count;
  stats["beta"] = state.stats.beta;
  stats["w_floor"] = state.stats.w_floor;
  j["stats"] = std::move(stats);

  json rng = json::array();
  for (std::uint64_t word : state.rng.state()) {
    rng.push_back(std::to_string(word));
  }
  j["rng"] = std::move(rng);

  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open checkpoint for writing: " + path.string());
  }
  out << j.dump(1, '\t') << '\n';
  if (!out) {
    throw IoError("checkpoint write failed: " + path.string());
  }
}

RunState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open checkpoint: " + path.string());
  }
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw IoError("corrupted checkpoint " + path.string() + ": " + e.what());
  }
  try {
    const int version = j.at("schema_version").get<int>();
    if (version != kCheckpointSchemaVersion) {
      throw IoError("checkpoint schema_version " + std::to_string(version) +
                    " unsupported (this build reads version " +
                    std::to_string(kCheckpointSchemaVersion) + ")");
    }
    RunState state;
    const int d = j.at("d").get<int>();
    const int H = j.at("H").get<int>();
    state.seed = j.at("seed").get<std::uint64_t>();
    state.step = j.at("step").get<long long>();

    const json& p = j.at("params");
    state.params.d = d;
    state.params.H = H;
    state.params.num_embed = matrix_from_json(p.at("num_embed"), kNumTokens, d, "num_embed");
    state.params.op_embed = matrix_from_json(p.at("op_embed"), kNumOperators, d, "op_embed");
    state.params.gate_w = matrix_from_json(p.at("gate_w"), 2 * d, d, "gate_w");
    state.params.gate_b = vector_from_json(p.at("gate_b"), 2 * d, "gate_b");
    state.params.w1 = matrix_from_json(p.at("w1"), H, 3 * d, "w1");
    state.params.b1 = vector_from_json(p.at("b1"), H, "b1");
    state.params.w2 = matrix_from_json(p.at("w2"), kNumTokens, H, "w2");
    state.params.b2 = vector_from_json(p.at("b2"), kNumTokens, "b2");

    const json& s = j.at("stats");
    state.stats.w_retrieval_add = s.at("w_retrieval_add").get<double>();
    state.stats.w_finger = s.at("w_finger").get<double>();
    state.stats.w_retrieval_count = s.at("w_retrieval_count").get<double>();
    state.stats.beta = s.at("beta").get<double>();
    state.stats.w_floor = s.at("w_floor").get<double>();

    const json& r = j.at("rng");
    if (!r.is_array() || r.size() != 4) {
      throw IoError("checkpoint rng state must hold 4 words");
    }
    std::array<std::uint64_t, 4> words{};
    for (std::size_t i = 0; i < 4; ++i) {
      words[i] = std::stoull(r.at(i).get<std::string>());
    }
    state.rng.set_state(words);
    return state;
  } catch (const json::exception& e) {
    throw IoError("corrupted checkpoint " + path.string() + ": " + e.what());
  }
}

json run_summary_to_json(const RunSummary& s) {
  json j;
  j["total_steps"] = s.total_steps;
  j["add_onset"] = s.add_onset;
  j["final_add_retrieval_accuracy"] = s.final_add_retrieval_accuracy;
  j["final_count_retrieval_accuracy"] = s.final_count_retrieval_accuracy;
  auto put = [&j](const char* key, const auto& opt) {
    if (opt) {
      j[key] = *opt;
    } else {
      j[key] = nullptr;
    }
  };
  put("peak_usage", s.peak_usage);
  put("peak_usage_window", s.peak_usage_window);
  put("final_usage", s.final_usage);
  put("early_post_onset_add_accuracy", s.early_post_onset_add_accuracy);
  put("add_accuracy_change_point", s.add_accuracy_change_point);
  return j;
}

RunSummary run_summary_from_json(const json& j) {
  RunSummary s;
  s.total_steps = j.at("total_steps").get<long long>();
  s.add_onset = j.at("add_onset").get<long long>();
  s.final_add_retrieval_accuracy = j.at("final_add_retrieval_accuracy").get<double>();
  s.final_count_retrieval_accuracy = j.at("final_count_retrieval_accuracy").get<double>();
  auto opt_double = [&j](const char* key) -> std::optional<double> {
    if (j.contains(key) && !j.at(key).is_null()) {
      return j.at(key).get<double>();
    }
    return std::nullopt;
  };
  auto opt_ll = [&j](const char* key) -> std::optional<long long> {
    if (j.contains(key) && !j.at(key).is_null()) {
      return j.at(key).get<long long>();
    }
    return std::nullopt;
  };
  s.peak_usage = opt_double("peak_usage");
  s.peak_usage_window = opt_ll("peak_usage_window");
  s.final_usage = opt_double("final_usage");
  s.early_post_onset_add_accuracy = opt_double("early_post_onset_add_accuracy");
  s.add_accuracy_change_point = opt_ll("add_accuracy_change_point");
  return s;
}

namespace {

std::string utc_now_iso8601() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_json_file(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open for writing: " + path.string());
  }
  out << j.dump(2) << '\n';
  if (!out) {
    throw IoError("write failed: " + path.string());
  }
}

class SinkObserver : public TrialObserver {
 public:
  explicit SinkObserver(TelemetrySink& sink) : sink_(sink) {}

  void on_trial(const TrialRecord& rec, const AnswerDistribution& dist) override {
    sink_.snapshot_probe(rec.step, rec.problem, dist);
    sink_.record_trial(rec);
  }

 private:
  TelemetrySink& sink_;
};

}  // namespace

RunArtifacts run_experiment(const RunConfig& raw) {
  const RunConfig cfg = raw.resolved();
  const auto t_start = std::chrono::steady_clock::now();
  const std::string started = utc_now_iso8601();

  RunArtifacts art;
  art.dir = cfg.out_dir;
  std::filesystem::create_directories(art.dir);
  art.config_path = art.dir / "config.json";
  art.checkpoint_path = art.dir / "checkpoint.json";
  art.summary_path = art.dir / "summary.json";
  art.meta_path = art.dir / "meta.json";
  write_json_file(run_config_to_json(cfg), art.config_path);

  RunState state = make_run_state(cfg);
  TelemetrySink sink(art.dir, cfg.metrics_window, cfg.snapshot_every_k, cfg.probes);
  art.trials_path = sink.trials_path();
  art.metrics_path = sink.metrics_path();
  art.snapshots_path = sink.snapshots_path();
  SinkObserver observer(sink);

  // Early-post-onset behavioral accuracy and a tail buffer for final usage.
  long long early_add = 0, early_add_correct = 0;
  std::deque<std::pair<bool, bool>> tail;  // (is_add, finger) for last 2000 trials
  constexpr long long kTailTrials = 2000;

  auto write_meta = [&](bool ok, const std::string& error) {
    json meta;
    meta["artifact_version"] = 1;
    meta["started_utc"] = started;
    meta["finished_utc"] = utc_now_iso8601();
    meta["duration_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    meta["ok"] = ok;
    if (!error.empty()) {
      meta["error"] = error;
    }
    write_json_file(meta, art.meta_path);
  };

  try {
    for (long long step = 0; step < cfg.total_steps; ++step) {
      const TrialRecord rec = run_trial(state, cfg, &observer);
      if (rec.step >= cfg.add_onset && rec.step < cfg.add_onset + kTailTrials && rec.is_add) {
        ++early_add;
        early_add_correct += rec.correct ? 1 : 0;
      }
      tail.emplace_back(rec.is_add, rec.strategy == StrategyKind::kFingerCount);
      if (static_cast<long long>(tail.size()) > kTailTrials) {
        tail.pop_front();
      }
      if (sink.window_full()) {
        sink.flush_window(evaluate_model(state.params, Operator::kAdd));
      }
    }
    sink.finish(evaluate_model(state.params, Operator::kAdd));
  } catch (const TrainingError& e) {
    sink.finish(std::nullopt);
    json err;
    err["error"] = e.what();
    err["step"] = state.step;
    write_json_file(err, art.dir / "error.json");
    write_meta(false, e.what());
    throw;
  }

  save_checkpoint(state, art.checkpoint_path);

  RunSummary summary;
  summary.total_steps = cfg.total_steps;
  summary.add_onset = cfg.add_onset;
  summary.final_add_retrieval_accuracy = evaluate_model(state.params, Operator::kAdd);
  summary.final_count_retrieval_accuracy = evaluate_model(state.params, Operator::kCountUp);
  for (const auto& row : sink.metrics()) {
    if (row.usage_rate && (!summary.peak_usage || *row.usage_rate > *summary.peak_usage)) {
      summary.peak_usage = row.usage_rate;
      summary.peak_usage_window = row.window;
    }
  }
  long long tail_add = 0, tail_finger = 0;
  for (const auto& [is_add, finger] : tail) {
    tail_add += is_add ? 1 : 0;
    tail_finger += finger ? 1 : 0;
  }
  if (tail_add > 0) {
    summary.final_usage = static_cast<double>(tail_finger) / static_cast<double>(tail_add);
  }
  if (early_add > 0) {
    summary.early_post_onset_add_accuracy =
        static_cast<double>(early_add_correct) / static_cast<double>(early_add);
  }
  std::vector<double> behavioral;
  behavioral.reserve(sink.metrics().size());
  for (const auto& row : sink.metrics()) {
    behavioral.push_back(row.add_accuracy.value_or(std::nan("")));
  }
  if (const auto cp = change_point(behavioral, 0.5)) {
    summary.add_accuracy_change_point = static_cast<long long>(*cp);
  }
  art.summary = summary;
  write_json_file(run_summary_to_json(summary), art.summary_path);
  write_meta(true, "");
  return art;
}

}  // namespace smm
