#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "smm/trial_record.hpp"
#include "smm/types.hpp"

namespace smm {

// One row of metrics.csv. Rates are empty (nullopt) when the window holds no
// trials of that kind; absence is not zero.
struct MetricsRow {
  long long window = 0;
  long long add_trials = 0;
  std::optional<double> add_accuracy;
  std::optional<double> add_retrieval_accuracy;
  std::optional<double> count_accuracy;
  std::optional<double> usage_rate;
  double mean_confidence = 0.0;
};

struct SnapshotRow {
  long long step = 0;
  Problem problem;
  long long occurrence = 0;
  AnswerDistribution dist;
};

// Shortest decimal text that round-trips the double; locale-independent.
std::string format_double(double v);

// Streaming writer for one run's trials.jsonl / metrics.csv / snapshots.csv.
// Owned by exactly one run; no concurrent writers.
class TelemetrySink {
 public:
  TelemetrySink(const std::filesystem::path& dir, long long window_size, long long snapshot_every_k,
                std::vector<Problem> probes);

  // Appends the record and updates the open window. Records must arrive in
  // step order.
  void record_trial(const TrialRecord& rec);

  // True when window_size records have accumulated since the last flush.
  bool window_full() const { return trials_in_window_ == window_size_; }

  // Writes the open window's row; add_retrieval_accuracy comes from the
  // caller (it is evaluated on the live model, not derived from the log).
  void flush_window(std::optional<double> add_retrieval_accuracy);

  // Counts an occurrence of a probe problem and stores every k-th one. `dist`
  // must be the retrieval distribution from before the trial's update.
  void snapshot_probe(long long step, const Problem& problem, const AnswerDistribution& dist);

  // Flushes a trailing partial window (if any) and the file streams.
  void finish(std::optional<double> add_retrieval_accuracy);

  const std::vector<MetricsRow>& metrics() const { return metrics_; }
  const std::vector<SnapshotRow>& snapshots() const { return snapshots_; }

  std::filesystem::path trials_path() const { return dir_ / "trials.jsonl"; }
  std::filesystem::path metrics_path() const { return dir_ / "metrics.csv"; }
  std::filesystem::path snapshots_path() const { return dir_ / "snapshots.csv"; }

 private:
  void reset_window();

  std::filesystem::path dir_;
  long long window_size_;
  long long snapshot_every_k_;
  std::vector<Problem> probes_;
  std::vector<long long> probe_occurrences_;

  std::ofstream trials_out_;
  std::ofstream metrics_out_;
  std::ofstream snapshots_out_;

  long long next_window_ = 0;
  long long trials_in_window_ = 0;
  long long add_trials_ = 0;
  long long add_correct_ = 0;
  long long finger_trials_ = 0;
  long long count_trials_ = 0;
  long long count_correct_ = 0;
  double confidence_sum_ = 0.0;

  std::vector<MetricsRow> metrics_;
  std::vector<SnapshotRow> snapshots_;
};

// First index where the series reaches `level` and stays there for three
// consecutive windows; nullopt if it never does. NaN entries never qualify.
std::optional<std::size_t> change_point(const std::vector<double>& series, double level);

std::string trial_record_to_json_line(const TrialRecord& rec);
TrialRecord trial_record_from_json_line(const std::string& line);

std::vector<TrialRecord> read_trials(const std::filesystem::path& path);
std::vector<MetricsRow> read_metrics(const std::filesystem::path& path);
std::vector<SnapshotRow> read_snapshots(const std::filesystem::path& path);

// Recomputes the log-derived metrics columns from trial records (the
// evaluate_model column cannot be reconstructed from the log and is left
// empty).
std::vector<MetricsRow> recompute_metrics(const std::vector<TrialRecord>& records,
                                          long long window_size);

std::string metrics_row_to_csv(const MetricsRow& row);

}  // namespace smm
