#include "smm/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <thread>
#include <vector>

#include "smm/curriculum.hpp"
#include "smm/svg.hpp"
#include "smm/trainer.hpp"

namespace smm {

namespace {

void print_summary(const RunArtifacts& art) {
  const RunSummary& s = art.summary;
  auto opt = [](const std::optional<double>& v) {
    return v ? format_double(*v) : std::string("n/a");
  };
  std::printf("run complete: %s\n", art.dir.string().c_str());
  std::printf("  steps                        %lld\n", s.total_steps);
  std::printf("  addition onset               %lld\n", s.add_onset);
  std::printf("  final addition accuracy      %s   (argmax retrieval, 25 problems)\n",
              format_double(s.final_add_retrieval_accuracy).c_str());
  std::printf("  final counting accuracy      %s   (argmax retrieval, 9 items)\n",
              format_double(s.final_count_retrieval_accuracy).c_str());
  std::printf("  peak finger usage            %s", opt(s.peak_usage).c_str());
  if (s.peak_usage_window) {
    std::printf("   (window %lld)", *s.peak_usage_window);
  }
  std::printf("\n");
  std::printf("  final finger usage           %s   (last 2000 trials)\n",
              opt(s.final_usage).c_str());
}

int fail_usage(const std::string& message) {
  std::cerr << "error: " << message << "\n";
  return kExitUsage;
}

int fail_runtime(const std::string& message) {
  std::cerr << "error: " << message << "\n";
  return kExitRuntime;
}

}  // namespace

int cmd_train(const TrainOptions& options) {
  RunConfig cfg;
  try {
    if (!options.config_path.empty()) {
      cfg = load_run_config(options.config_path);
    }
    if (!options.out_dir.empty()) {
      cfg.out_dir = options.out_dir;
    }
    if (options.seed) {
      cfg.seed = *options.seed;
    }
    cfg = cfg.resolved();
  } catch (const ConfigError& e) {
    return fail_usage(e.what());
  } catch (const IoError& e) {
    return fail_usage(e.what());
  }

  try {
    const RunArtifacts art = run_experiment(cfg);
    if (!options.quiet) {
      print_summary(art);
    }
    return kExitOk;
  } catch (const std::exception& e) {
    return fail_runtime(std::string("run failed: ") + e.what());
  }
}

namespace {

struct SweepRunResult {
  long long onset = 0;
  std::uint64_t sweep_seed = 0;
  std::filesystem::path dir;
  bool ok = false;
  std::string error;
  RunSummary summary;
};

std::vector<RunConfig> sweep_grid(const SweepSpec& spec, const std::filesystem::path& root,
                                  std::vector<SweepRunResult>& results) {
  std::vector<RunConfig> configs;
  for (long long onset : spec.onsets) {
    for (std::uint64_t seed : spec.seeds) {
      RunConfig cfg = spec.base;
      cfg.add_onset = onset;
      // Independent stream per grid cell, reproducible whatever the schedule.
      cfg.seed = Rng::mix_seed(spec.base.seed, static_cast<std::uint64_t>(onset), seed);
      cfg.out_dir = (root / ("onset" + std::to_string(onset) + "_seed" + std::to_string(seed)))
                        .string();
      configs.push_back(cfg);
      SweepRunResult r;
      r.onset = onset;
      r.sweep_seed = seed;
      r.dir = cfg.out_dir;
      results.push_back(r);
    }
  }
  return configs;
}

// Per-onset, per-window mean of a metrics column across seeds.
ChartSeries averaged_series(const std::vector<std::filesystem::path>& run_dirs,
                            const std::string& label, long long window_size,
                            std::optional<double> MetricsRow::* column) {
  std::vector<std::vector<MetricsRow>> all;
  std::size_t max_windows = 0;
  for (const auto& dir : run_dirs) {
    all.push_back(read_metrics(dir / "metrics.csv"));
    max_windows = std::max(max_windows, all.back().size());
  }
  ChartSeries series;
  series.label = label;
  for (std::size_t w = 0; w < max_windows; ++w) {
    double sum = 0.0;
    int n = 0;
    for (const auto& rows : all) {
      if (w < rows.size() && rows[w].*column) {
        sum += *(rows[w].*column);
        ++n;
      }
    }
    series.x.push_back(static_cast<double>((w + 1) * static_cast<std::size_t>(window_size)));
    series.y.push_back(n > 0 ? sum / n : std::nan(""));
  }
  return series;
}

}  // namespace

int cmd_sweep(const SweepOptions& options) {
  SweepSpec spec;
  try {
    if (!options.spec_path.empty()) {
      spec = load_sweep_spec(options.spec_path);
    }
    if (!options.out_dir.empty()) {
      spec.base.out_dir = options.out_dir;
    }
    spec.base = spec.base.resolved();
  } catch (const ConfigError& e) {
    return fail_usage(e.what());
  } catch (const IoError& e) {
    return fail_usage(e.what());
  }

  const std::filesystem::path root = spec.base.out_dir;
  std::filesystem::create_directories(root);

  std::vector<SweepRunResult> results;
  const std::vector<RunConfig> configs = sweep_grid(spec, root, results);

  unsigned workers = spec.parallelism > 0 ? static_cast<unsigned>(spec.parallelism)
                                          : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(configs.size()));

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= configs.size()) {
        return;
      }
      try {
        const RunArtifacts art = run_experiment(configs[i]);
        results[i].summary = art.summary;
        results[i].ok = true;
      } catch (const std::exception& e) {
        results[i].ok = false;
        results[i].error = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned i = 0; i < workers; ++i) {
    pool.emplace_back(worker);
  }
  for (auto& t : pool) {
    t.join();
  }

  // sweep.json records the resolved grid; plot reruns read it.
  nlohmann::json sj;
  sj["base"] = run_config_to_json(spec.base);
  sj["onsets"] = spec.onsets;
  sj["seeds"] = spec.seeds;
  sj["parallelism"] = spec.parallelism;
  {
    std::ofstream out(root / "sweep.json", std::ios::binary | std::ios::trunc);
    out << sj.dump(2) << '\n';
  }

  std::ofstream agg(root / "aggregate.csv", std::ios::binary | std::ios::trunc);
  if (!agg) {
    return fail_runtime("cannot write aggregate.csv under " + root.string());
  }
  agg << "onset,seed,acc_change_point_window,usage_peak_window,usage_peak_value,"
         "final_add_retrieval_accuracy,early_post_onset_add_accuracy\n";
  for (const auto& r : results) {
    agg << r.onset << ',' << r.sweep_seed << ',';
    if (r.ok) {
      const RunSummary& s = r.summary;
      agg << (s.add_accuracy_change_point ? std::to_string(*s.add_accuracy_change_point) : "")
          << ',' << (s.peak_usage_window ? std::to_string(*s.peak_usage_window) : "") << ','
          << (s.peak_usage ? format_double(*s.peak_usage) : "") << ','
          << format_double(s.final_add_retrieval_accuracy) << ','
          << (s.early_post_onset_add_accuracy ? format_double(*s.early_post_onset_add_accuracy)
                                              : "");
    } else {
      agg << ",,,,";
    }
    agg << '\n';
  }
  agg.flush();

  // Overlay charts, one seed-averaged line per onset.
  bool all_ok = std::all_of(results.begin(), results.end(),
                            [](const SweepRunResult& r) { return r.ok; });
  try {
    std::vector<ChartSeries> acc_series;
    std::vector<ChartSeries> usage_series;
    for (long long onset : spec.onsets) {
      std::vector<std::filesystem::path> dirs;
      for (const auto& r : results) {
        if (r.onset == onset && r.ok) {
          dirs.push_back(r.dir);
        }
      }
      if (dirs.empty()) {
        continue;
      }
      const std::string label = "onset " + std::to_string(onset);
      acc_series.push_back(averaged_series(dirs, label, spec.base.metrics_window,
                                           &MetricsRow::add_retrieval_accuracy));
      usage_series.push_back(
          averaged_series(dirs, label, spec.base.metrics_window, &MetricsRow::usage_rate));
    }
    if (!acc_series.empty()) {
      ChartOptions opt;
      opt.title = "Addition retrieval accuracy by addition-start time";
      opt.x_label = "training step";
      opt.y_label = "accuracy";
      write_svg(render_line_chart(acc_series, opt), root / "fig1a_accuracy.svg");
      opt.title = "Finger-counting usage by addition-start time";
      opt.y_label = "usage rate";
      write_svg(render_line_chart(usage_series, opt), root / "fig1b_usage.svg");
    }
  } catch (const std::exception& e) {
    std::cerr << "error: overlay charts failed: " << e.what() << "\n";
    all_ok = false;
  }

  if (!options.quiet) {
    std::printf("sweep complete: %zu runs under %s\n", configs.size(), root.string().c_str());
  }
  if (!all_ok) {
    for (const auto& r : results) {
      if (!r.ok) {
        std::cerr << "failed: " << r.dir.string() << ": " << r.error << "\n";
      }
    }
    return kExitRuntime;
  }
  return kExitOk;
}

namespace {

int plot_run_dir(const std::filesystem::path& dir, const std::string& figure, bool quiet) {
  const bool all = figure == "all";
  const long long window =
      load_run_config((dir / "config.json").string()).resolved().metrics_window;

  if (all || figure == "fig1a" || figure == "fig1b") {
    const auto rows = read_metrics(dir / "metrics.csv");
    ChartSeries retrieval, behavioral, usage;
    retrieval.label = "retrieval accuracy";
    behavioral.label = "behavioral accuracy";
    usage.label = "finger usage";
    for (const auto& row : rows) {
      const double x = static_cast<double>((row.window + 1) * window);
      retrieval.x.push_back(x);
      retrieval.y.push_back(row.add_retrieval_accuracy.value_or(std::nan("")));
      behavioral.x.push_back(x);
      behavioral.y.push_back(row.add_accuracy.value_or(std::nan("")));
      usage.x.push_back(x);
      usage.y.push_back(row.usage_rate.value_or(std::nan("")));
    }
    ChartOptions opt;
    opt.x_label = "training step";
    if (all || figure == "fig1a") {
      opt.title = "Addition accuracy";
      opt.y_label = "accuracy";
      write_svg(render_line_chart({retrieval, behavioral}, opt), dir / "fig1a_accuracy.svg");
      if (!quiet) {
        std::printf("wrote %s\n", (dir / "fig1a_accuracy.svg").string().c_str());
      }
    }
    if (all || figure == "fig1b") {
      opt.title = "Finger-counting usage";
      opt.y_label = "usage rate";
      write_svg(render_line_chart({usage}, opt), dir / "fig1b_usage.svg");
      if (!quiet) {
        std::printf("wrote %s\n", (dir / "fig1b_usage.svg").string().c_str());
      }
    }
  }
  if (all || figure == "fig2") {
    const auto snapshots = read_snapshots(dir / "snapshots.csv");
    if (snapshots.empty()) {
      throw IoError("no snapshots recorded in " + (dir / "snapshots.csv").string());
    }
    const Problem probe = snapshots.front().problem;
    std::vector<SnapshotRow> mine;
    for (const auto& s : snapshots) {
      if (s.problem == probe) {
        mine.push_back(s);
      }
    }
    const long long total =
        load_run_config((dir / "config.json").string()).resolved().total_steps;
    const std::string title = "Answer distribution for " + format_problem(probe) + " by quarter";
    write_svg(render_distribution_quarters(mine, total, title), dir / "fig2_quarters.svg");
    if (!quiet) {
      std::printf("wrote %s\n", (dir / "fig2_quarters.svg").string().c_str());
    }
  }
  return kExitOk;
}

int plot_sweep_dir(const std::filesystem::path& dir, const std::string& figure, bool quiet) {
  if (figure == "fig2") {
    return fail_usage("fig2 needs a run directory (snapshots live per run), got a sweep: " +
                      dir.string());
  }
  std::ifstream in(dir / "sweep.json");
  if (!in) {
    return fail_runtime("missing sweep.json under " + dir.string());
  }
  const auto sj = nlohmann::json::parse(in);
  const SweepSpec spec = sweep_spec_from_json(sj);

  const bool all = figure == "all";
  std::vector<ChartSeries> acc_series, usage_series;
  for (long long onset : spec.onsets) {
    std::vector<std::filesystem::path> dirs;
    for (std::uint64_t seed : spec.seeds) {
      const auto run = dir / ("onset" + std::to_string(onset) + "_seed" + std::to_string(seed));
      if (std::filesystem::exists(run / "metrics.csv")) {
        dirs.push_back(run);
      }
    }
    if (dirs.empty()) {
      continue;
    }
    const std::string label = "onset " + std::to_string(onset);
    acc_series.push_back(averaged_series(dirs, label, spec.base.resolved().metrics_window,
                                         &MetricsRow::add_retrieval_accuracy));
    usage_series.push_back(averaged_series(dirs, label, spec.base.resolved().metrics_window,
                                           &MetricsRow::usage_rate));
  }
  if (acc_series.empty()) {
    return fail_runtime("no run metrics found under " + dir.string());
  }
  ChartOptions opt;
  opt.x_label = "training step";
  if (all || figure == "fig1a") {
    opt.title = "Addition retrieval accuracy by addition-start time";
    opt.y_label = "accuracy";
    write_svg(render_line_chart(acc_series, opt), dir / "fig1a_accuracy.svg");
    if (!quiet) {
      std::printf("wrote %s\n", (dir / "fig1a_accuracy.svg").string().c_str());
    }
  }
  if (all || figure == "fig1b") {
    opt.title = "Finger-counting usage by addition-start time";
    opt.y_label = "usage rate";
    write_svg(render_line_chart(usage_series, opt), dir / "fig1b_usage.svg");
    if (!quiet) {
      std::printf("wrote %s\n", (dir / "fig1b_usage.svg").string().c_str());
    }
  }
  return kExitOk;
}

}  // namespace

int cmd_plot(const std::string& dir_text, const std::string& figure, bool quiet) {
  static const std::vector<std::string> kFigures = {"fig1a", "fig1b", "fig2", "all"};
  if (std::find(kFigures.begin(), kFigures.end(), figure) == kFigures.end()) {
    std::string names;
    for (const auto& f : kFigures) {
      names += (names.empty() ? "" : ", ") + f;
    }
    return fail_usage("unknown figure \"" + figure + "\" (valid: " + names + ")");
  }
  const std::filesystem::path dir = dir_text;
  try {
    if (std::filesystem::exists(dir / "aggregate.csv")) {
      return plot_sweep_dir(dir, figure, quiet);
    }
    if (std::filesystem::exists(dir / "metrics.csv")) {
      return plot_run_dir(dir, figure, quiet);
    }
    return fail_runtime("no run or sweep artifacts found under " + dir.string() +
                        " (expected metrics.csv or aggregate.csv)");
  } catch (const InputError& e) {
    return fail_runtime(e.what());
  } catch (const std::exception& e) {
    return fail_runtime(e.what());
  }
}

int cmd_probe(const std::string& checkpoint_path, const std::string& problem_text) {
  Problem problem;
  try {
    problem = parse_problem(problem_text);
  } catch (const InputError& e) {
    return fail_usage(e.what());
  }
  try {
    const RunState state = load_checkpoint(checkpoint_path);
    const Retrieval r = retrieve(state.params, problem);
    std::printf("problem %s\n", format_problem(problem).c_str());
    std::printf("answer  probability\n");
    for (int token = 1; token <= kNumTokens; ++token) {
      std::printf("%6d  %s%s\n", token, format_double(r.dist.prob_of(token)).c_str(),
                  token == r.answer ? "  <- argmax" : "");
    }
    std::printf("argmax %d  confidence %s\n", r.answer, format_double(r.confidence).c_str());
    nlohmann::json j;
    j["problem"] = format_problem(problem);
    j["argmax"] = r.answer;
    j["confidence"] = r.confidence;
    j["probs"] = r.dist.probs;
    std::printf("%s\n", j.dump().c_str());
    return kExitOk;
  } catch (const std::exception& e) {
    return fail_runtime(e.what());
  }
}

int cmd_gradcheck(std::uint64_t seed, long long trials) {
  if (trials < 1) {
    return fail_usage("gradcheck needs trials >= 1");
  }
  double max_rel = 0.0;
  Rng rng(Rng::mix_seed(seed, 0x67726164u, 0u));
  for (long long i = 0; i < trials; ++i) {
    const ModelParams params = init_params(rng.next_u64(), 16, 32);
    Problem problem;
    if (rng.bernoulli(0.5)) {
      problem = make_add(rng.uniform_int(1, kMaxAddOperand), rng.uniform_int(1, kMaxAddOperand));
    } else {
      problem = make_count(rng.uniform_int(1, kMaxCountCurrent));
    }
    const int target = rng.uniform_int(1, kNumTokens);
    max_rel = std::max(max_rel, gradient_check(params, problem, target, 1e-5));
  }
  std::printf("gradcheck: %lld trials, max relative error %s\n", trials,
              format_double(max_rel).c_str());
  return max_rel < 1e-4 ? kExitOk : kExitRuntime;
}

int cmd_export_embeddings(const std::string& checkpoint_path, const std::string& out_path) {
  try {
    const RunState state = load_checkpoint(checkpoint_path);
    const Matrix& e = state.params.num_embed;
    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    if (!out) {
      return fail_runtime("cannot open output: " + out_path);
    }
    out << "token";
    for (int c = 0; c < e.cols; ++c) {
      out << ",c" << c;
    }
    out << "\n";
    for (int token = 1; token <= kNumTokens; ++token) {
      out << token;
      for (int c = 0; c < e.cols; ++c) {
        out << ',' << format_double(e.at(token - 1, c));
      }
      out << "\n";
    }
    out << "cosine";
    for (int token = 1; token <= kNumTokens; ++token) {
      out << ',' << token;
    }
    out << "\n";
    auto dot = [&](int r1, int r2) {
      double acc = 0.0;
      for (int c = 0; c < e.cols; ++c) {
        acc += e.at(r1, c) * e.at(r2, c);
      }
      return acc;
    };
    for (int i = 0; i < kNumTokens; ++i) {
      out << (i + 1);
      for (int j = 0; j < kNumTokens; ++j) {
        const double denom = std::sqrt(dot(i, i)) * std::sqrt(dot(j, j));
        out << ',' << format_double(denom > 0.0 ? dot(i, j) / denom : 0.0);
      }
      out << "\n";
    }
    if (!out) {
      return fail_runtime("write failed: " + out_path);
    }
    return kExitOk;
  } catch (const std::exception& e) {
    return fail_runtime(e.what());
  }
}

}  // namespace smm
