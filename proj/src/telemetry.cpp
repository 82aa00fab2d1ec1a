#include "smm/telemetry.hpp"

#include <charconv>
#include <cmath>

#include <json.hpp>

#include "smm/config.hpp"

namespace smm {

using nlohmann::json;

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

TelemetrySink::TelemetrySink(const std::filesystem::path& dir, long long window_size,
                             long long snapshot_every_k, std::vector<Problem> probes)
    : dir_(dir),
      window_size_(window_size),
      snapshot_every_k_(snapshot_every_k),
      probes_(std::move(probes)),
      probe_occurrences_(probes_.size(), 0) {
  std::filesystem::create_directories(dir_);
  trials_out_.open(trials_path(), std::ios::binary | std::ios::trunc);
  metrics_out_.open(metrics_path(), std::ios::binary | std::ios::trunc);
  snapshots_out_.open(snapshots_path(), std::ios::binary | std::ios::trunc);
  if (!trials_out_ || !metrics_out_ || !snapshots_out_) {
    throw IoError("cannot open telemetry files under " + dir_.string());
  }
  metrics_out_ << "window,add_trials,add_accuracy,add_retrieval_accuracy,count_accuracy,"
                  "usage_rate,mean_confidence\n";
  snapshots_out_ << "step,problem,occurrence";
  for (int token = 1; token <= kNumTokens; ++token) {
    snapshots_out_ << ",p" << token;
  }
  snapshots_out_ << "\n";
}

void TelemetrySink::record_trial(const TrialRecord& rec) {
  trials_out_ << trial_record_to_json_line(rec) << '\n';
  if (!trials_out_) {
    throw IoError("write to trials.jsonl failed under " + dir_.string());
  }
  ++trials_in_window_;
  confidence_sum_ += rec.confidence;
  if (rec.is_add) {
    ++add_trials_;
    add_correct_ += rec.correct ? 1 : 0;
    finger_trials_ += rec.strategy == StrategyKind::kFingerCount ? 1 : 0;
  } else {
    ++count_trials_;
    count_correct_ += rec.correct ? 1 : 0;
  }
}

void TelemetrySink::reset_window() {
  trials_in_window_ = 0;
  add_trials_ = 0;
  add_correct_ = 0;
  finger_trials_ = 0;
  count_trials_ = 0;
  count_correct_ = 0;
  confidence_sum_ = 0.0;
}

void TelemetrySink::flush_window(std::optional<double> add_retrieval_accuracy) {
  MetricsRow row;
  row.window = next_window_++;
  row.add_trials = add_trials_;
  if (add_trials_ > 0) {
    row.add_accuracy = static_cast<double>(add_correct_) / static_cast<double>(add_trials_);
    row.usage_rate = static_cast<double>(finger_trials_) / static_cast<double>(add_trials_);
  }
  if (count_trials_ > 0) {
    row.count_accuracy = static_cast<double>(count_correct_) / static_cast<double>(count_trials_);
  }
  row.add_retrieval_accuracy = add_retrieval_accuracy;
  row.mean_confidence =
      trials_in_window_ > 0 ? confidence_sum_ / static_cast<double>(trials_in_window_) : 0.0;
  metrics_out_ << metrics_row_to_csv(row) << '\n';
  if (!metrics_out_) {
    throw IoError("write to metrics.csv failed under " + dir_.string());
  }
  metrics_.push_back(row);
  reset_window();
}

void TelemetrySink::snapshot_probe(long long step, const Problem& problem,
                                   const AnswerDistribution& dist) {
  for (std::size_t i = 0; i < probes_.size(); ++i) {
    if (!(probes_[i] == problem)) {
      continue;
    }
    const long long occurrence = ++probe_occurrences_[i];
    if (occurrence % snapshot_every_k_ != 0) {
      continue;
    }
    SnapshotRow row{step, problem, occurrence, dist};
    snapshots_out_ << step << ',' << format_problem(problem) << ',' << occurrence;
    for (double p : dist.probs) {
      snapshots_out_ << ',' << format_double(p);
    }
    snapshots_out_ << '\n';
    snapshots_.push_back(row);
  }
}

void TelemetrySink::finish(std::optional<double> add_retrieval_accuracy) {
  if (trials_in_window_ > 0) {
    flush_window(add_retrieval_accuracy);
  }
  trials_out_.flush();
  metrics_out_.flush();
  snapshots_out_.flush();
}

std::optional<std::size_t> change_point(const std::vector<double>& series, double level) {
  if (series.size() < 3) {
    return std::nullopt;
  }
  for (std::size_t i = 0; i + 2 < series.size(); ++i) {
    if (series[i] >= level && series[i + 1] >= level && series[i + 2] >= level) {
      return i;
    }
  }
  return std::nullopt;
}

std::string trial_record_to_json_line(const TrialRecord& rec) {
  std::string line;
  line.reserve(192);
  line += "{\"step\":";
  line += std::to_string(rec.step);
  line += ",\"a\":";
  line += std::to_string(rec.problem.a);
  line += ",\"b\":";
  line += std::to_string(rec.problem.b);
  line += ",\"op\":\"";
  line += operator_name(rec.problem.op);
  line += "\",\"strategy\":\"";
  line += strategy_name(rec.strategy);
  line += "\",\"answer\":";
  line += std::to_string(rec.answer);
  line += ",\"truth\":";
  line += std::to_string(rec.truth);
  line += ",\"correct\":";
  line += rec.correct ? "true" : "false";
  line += ",\"confidence\":";
  line += format_double(rec.confidence);
  line += ",\"target\":";
  line += std::to_string(rec.target);
  line += ",\"loss\":";
  line += format_double(rec.loss);
  line += "}";
  return line;
}

TrialRecord trial_record_from_json_line(const std::string& line) {
  const json j = json::parse(line);
  TrialRecord rec;
  rec.step = j.at("step").get<long long>();
  rec.problem.a = j.at("a").get<int>();
  rec.problem.b = j.at("b").get<int>();
  const std::string op = j.at("op").get<std::string>();
  if (op == "add") {
    rec.problem.op = Operator::kAdd;
  } else if (op == "count_up") {
    rec.problem.op = Operator::kCountUp;
  } else {
    throw IoError("unknown operator in trial log: " + op);
  }
  rec.strategy = strategy_from_name(j.at("strategy").get<std::string>());
  rec.answer = j.at("answer").get<int>();
  rec.truth = j.at("truth").get<int>();
  rec.correct = j.at("correct").get<bool>();
  rec.confidence = j.at("confidence").get<double>();
  rec.target = j.at("target").get<int>();
  rec.loss = j.at("loss").get<double>();
  rec.is_add = rec.problem.op == Operator::kAdd;
  return rec;
}

std::vector<TrialRecord> read_trials(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open trial log: " + path.string());
  }
  std::vector<TrialRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) {
      records.push_back(trial_record_from_json_line(line));
    }
  }
  return records;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::optional<double> parse_optional(const std::string& field) {
  if (field.empty()) {
    return std::nullopt;
  }
  return std::stod(field);
}

}  // namespace

std::vector<MetricsRow> read_metrics(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open metrics file: " + path.string());
  }
  std::vector<MetricsRow> rows;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      continue;
    }
    if (line.empty()) {
      continue;
    }
    const auto fields = split_csv(line);
    if (fields.size() != 7) {
      throw IoError("malformed metrics row: " + line);
    }
    MetricsRow row;
    row.window = std::stoll(fields[0]);
    row.add_trials = std::stoll(fields[1]);
    row.add_accuracy = parse_optional(fields[2]);
    row.add_retrieval_accuracy = parse_optional(fields[3]);
    row.count_accuracy = parse_optional(fields[4]);
    row.usage_rate = parse_optional(fields[5]);
    row.mean_confidence = std::stod(fields[6]);
    rows.push_back(row);
  }
  return rows;
}

std::vector<SnapshotRow> read_snapshots(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open snapshots file: " + path.string());
  }
  std::vector<SnapshotRow> rows;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      continue;
    }
    if (line.empty()) {
      continue;
    }
    const auto fields = split_csv(line);
    if (fields.size() != 3 + kNumTokens) {
      throw IoError("malformed snapshot row: " + line);
    }
    SnapshotRow row;
    row.step = std::stoll(fields[0]);
    row.problem = parse_problem(fields[1]);
    row.occurrence = std::stoll(fields[2]);
    for (int i = 0; i < kNumTokens; ++i) {
      row.dist.probs[static_cast<std::size_t>(i)] = std::stod(fields[static_cast<std::size_t>(3 + i)]);
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<MetricsRow> recompute_metrics(const std::vector<TrialRecord>& records,
                                          long long window_size) {
  std::vector<MetricsRow> rows;
  long long index = 0;
  MetricsRow row;
  long long in_window = 0, add_correct = 0, finger = 0, count_trials = 0, count_correct = 0;
  double confidence_sum = 0.0;
  auto flush = [&]() {
    row.window = index++;
    if (row.add_trials > 0) {
      row.add_accuracy = static_cast<double>(add_correct) / static_cast<double>(row.add_trials);
      row.usage_rate = static_cast<double>(finger) / static_cast<double>(row.add_trials);
    }
    if (count_trials > 0) {
      row.count_accuracy = static_cast<double>(count_correct) / static_cast<double>(count_trials);
    }
    row.mean_confidence = in_window > 0 ? confidence_sum / static_cast<double>(in_window) : 0.0;
    rows.push_back(row);
    row = MetricsRow{};
    in_window = add_correct = finger = count_trials = count_correct = 0;
    confidence_sum = 0.0;
  };
  for (const auto& rec : records) {
    ++in_window;
    confidence_sum += rec.confidence;
    if (rec.is_add) {
      ++row.add_trials;
      add_correct += rec.correct ? 1 : 0;
      finger += rec.strategy == StrategyKind::kFingerCount ? 1 : 0;
    } else {
      ++count_trials;
      count_correct += rec.correct ? 1 : 0;
    }
    if (in_window == window_size) {
      flush();
    }
  }
  if (in_window > 0) {
    flush();
  }
  return rows;
}

std::string metrics_row_to_csv(const MetricsRow& row) {
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  std::string line = std::to_string(row.window);
  line += ',' + std::to_string(row.add_trials);
  line += ',' + opt(row.add_accuracy);
  line += ',' + opt(row.add_retrieval_accuracy);
  line += ',' + opt(row.count_accuracy);
  line += ',' + opt(row.usage_rate);
  line += ',' + format_double(row.mean_confidence);
  return line;
}

}  // namespace smm
