#include <doctest.h>

#include <cmath>

#include "smm/svg.hpp"
#include "smm/telemetry.hpp"
#include "smm/trainer.hpp"
#include "test_util.hpp"

using namespace smm;

namespace {

TrialRecord synth_record(long long step, bool is_add, bool correct, bool finger,
                         double confidence) {
  TrialRecord rec;
  rec.step = step;
  rec.problem = is_add ? make_add(2, 3) : make_count(4);
  rec.is_add = is_add;
  rec.strategy = is_add ? (finger ? StrategyKind::kFingerCount : StrategyKind::kRetrievalAdd)
                        : StrategyKind::kOracleCount;
  rec.truth = is_add ? 5 : 5;
  rec.answer = correct ? rec.truth : 9;
  rec.correct = correct;
  rec.confidence = confidence;
  rec.target = is_add ? rec.answer : rec.truth;
  rec.loss = 1.0;
  return rec;
}

}  // namespace

TEST_CASE("windows tile the stream without overlap") {
  TempDir tmp("windows");
  TelemetrySink sink(tmp.path, 500, 10, {});
  for (long long i = 0; i < 1000; ++i) {
    sink.record_trial(synth_record(i, i % 2 == 0, true, false, 0.5));
    if (sink.window_full()) {
      sink.flush_window(0.25);
    }
  }
  sink.finish(std::nullopt);
  CHECK(sink.metrics().size() == 2);
  const auto rows = read_metrics(tmp.path / "metrics.csv");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].window == 0);
  CHECK(rows[1].window == 1);
  CHECK(rows[0].add_trials == 250);
  REQUIRE(rows[0].add_accuracy.has_value());
  CHECK(*rows[0].add_accuracy == 1.0);  // all-correct window
  REQUIRE(rows[0].usage_rate.has_value());
  CHECK(*rows[0].usage_rate == 0.0);
  CHECK(*rows[0].add_retrieval_accuracy == 0.25);
}

TEST_CASE("a window without addition trials emits empty cells, not zeros") {
  TempDir tmp("emptycells");
  TelemetrySink sink(tmp.path, 10, 10, {});
  for (long long i = 0; i < 10; ++i) {
    sink.record_trial(synth_record(i, false, true, false, 0.5));
  }
  sink.flush_window(std::nullopt);
  sink.finish(std::nullopt);
  const auto text = read_file(tmp.path / "metrics.csv");
  // window,add_trials,add_accuracy,add_retrieval_accuracy,count_accuracy,usage_rate,mean_conf
  CHECK(text.find("0,0,,,1,,0.5") != std::string::npos);
  const auto rows = read_metrics(tmp.path / "metrics.csv");
  REQUIRE(rows.size() == 1);
  CHECK(!rows[0].add_accuracy.has_value());
  CHECK(!rows[0].usage_rate.has_value());
  CHECK(rows[0].count_accuracy.has_value());
}

TEST_CASE("snapshots store every k-th occurrence of the probe") {
  TempDir tmp("snaps");
  const Problem probe = make_add(3, 4);
  TelemetrySink sink(tmp.path, 100, 10, {probe});
  AnswerDistribution dist;
  dist.probs.fill(0.1);
  for (int i = 0; i < 95; ++i) {
    sink.snapshot_probe(i, probe, dist);
    sink.snapshot_probe(i, make_add(2, 2), dist);  // different problem, never stored
  }
  sink.finish(std::nullopt);
  const auto rows = read_snapshots(tmp.path / "snapshots.csv");
  REQUIRE(rows.size() == 9);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].occurrence == static_cast<long long>(10 * (i + 1)));
    CHECK(rows[i].problem == probe);
    double sum = 0.0;
    for (double p : rows[i].dist.probs) {
      sum += p;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("snapshot cadence k=1 stores every occurrence") {
  TempDir tmp("snapsall");
  const Problem probe = make_add(3, 4);
  TelemetrySink sink(tmp.path, 100, 1, {probe});
  AnswerDistribution dist;
  dist.probs.fill(0.1);
  for (int i = 0; i < 7; ++i) {
    sink.snapshot_probe(i, probe, dist);
  }
  sink.finish(std::nullopt);
  CHECK(read_snapshots(tmp.path / "snapshots.csv").size() == 7);
}

TEST_CASE("change_point follows the persistence rule") {
  CHECK(change_point({0, 0, 0.6, 0.7, 0.8, 0.9}, 0.5) == 2);
  CHECK(change_point({0, 0, 0, 0}, 0.5) == std::nullopt);
  CHECK(change_point({0, 0.6, 0, 0, 0}, 0.5) == std::nullopt);          // one-window touch
  CHECK(change_point({0.4, 0.6, 0.7, 0.4, 0.6, 0.7, 0.8}, 0.5) == 4);   // first persistent
  CHECK(change_point({0.6, 0.7}, 0.5) == std::nullopt);                 // too short
  const double nan = std::nan("");
  CHECK(change_point({nan, nan, 0.6, 0.9, 0.9}, 0.5) == 2);
}

TEST_CASE("metrics are a pure function of the trial log") {
  TempDir tmp("purity");
  RunConfig cfg;
  cfg.total_steps = 1200;
  cfg.add_onset = 300;
  cfg.metrics_window = 250;  // deliberately not a divisor: trailing partial window
  cfg.out_dir = (tmp.path / "run").string();
  const RunArtifacts art = run_experiment(cfg);

  const auto records = read_trials(art.trials_path);
  const auto recomputed = recompute_metrics(records, 250);
  const auto written = read_metrics(art.metrics_path);
  REQUIRE(recomputed.size() == written.size());
  for (std::size_t i = 0; i < written.size(); ++i) {
    CHECK(written[i].window == recomputed[i].window);
    CHECK(written[i].add_trials == recomputed[i].add_trials);
    CHECK(written[i].add_accuracy == recomputed[i].add_accuracy);
    CHECK(written[i].count_accuracy == recomputed[i].count_accuracy);
    CHECK(written[i].usage_rate == recomputed[i].usage_rate);
    CHECK(written[i].mean_confidence == doctest::Approx(recomputed[i].mean_confidence).epsilon(1e-15));
  }

  // Usage per window is verifiable straight from the log.
  for (std::size_t w = 0; w < written.size(); ++w) {
    long long add = 0, finger = 0;
    for (const auto& rec : records) {
      if (rec.step / 250 == static_cast<long long>(w) && rec.is_add) {
        ++add;
        finger += rec.strategy == StrategyKind::kFingerCount ? 1 : 0;
      }
    }
    if (add > 0) {
      CHECK(*written[w].usage_rate ==
            doctest::Approx(static_cast<double>(finger) / add).epsilon(1e-15));
    } else {
      CHECK(!written[w].usage_rate.has_value());
    }
  }
}

TEST_CASE("trial records round-trip through the JSONL form") {
  const TrialRecord rec = synth_record(41, true, false, true, 0.123456789012345);
  const TrialRecord back = trial_record_from_json_line(trial_record_to_json_line(rec));
  CHECK(back.step == rec.step);
  CHECK(back.problem == rec.problem);
  CHECK(back.strategy == rec.strategy);
  CHECK(back.answer == rec.answer);
  CHECK(back.truth == rec.truth);
  CHECK(back.correct == rec.correct);
  CHECK(back.confidence == rec.confidence);
  CHECK(back.target == rec.target);
  CHECK(back.loss == rec.loss);
}

TEST_CASE("line charts carry one polyline per series and parse as XML") {
  ChartSeries a, b;
  a.label = "first";
  b.label = "second & <escaped>";
  for (int i = 0; i < 100; ++i) {
    a.x.push_back(i);
    a.y.push_back(0.5 + 0.4 * std::sin(i / 7.0));
    b.x.push_back(i);
    b.y.push_back(i % 9 == 3 ? std::nan("") : i / 100.0);  // gaps stay one polyline
  }
  ChartOptions opt;
  opt.title = "two series";
  opt.x_label = "step";
  opt.y_label = "rate";
  const std::string svg = render_line_chart({a, b}, opt);
  CHECK(count_occurrences(svg, "<polyline") == 2);
  CHECK(xml_well_formed(svg));
  CHECK_THROWS_AS(render_line_chart({}, opt), InputError);
  ChartSeries tiny;
  tiny.label = "short";
  tiny.x = {1};
  tiny.y = {0.5};
  CHECK_THROWS_AS(render_line_chart({tiny}, opt), InputError);
}

TEST_CASE("quarter panels partition snapshots by step range") {
  std::vector<SnapshotRow> snaps;
  for (int i = 0; i < 40; ++i) {
    SnapshotRow s;
    s.step = i * 1250 + 100;  // spread over 50000 steps
    s.problem = make_add(3, 4);
    s.occurrence = (i + 1) * 10;
    s.dist.probs.fill(0.1);
    snaps.push_back(s);
  }
  const std::string svg = render_distribution_quarters(snaps, 50000, "probe 3+4");
  CHECK(count_occurrences(svg, "<polyline") == 40);
  CHECK(count_occurrences(svg, "Quarter") == 4);
  CHECK(xml_well_formed(svg));

  snaps.resize(3);
  CHECK_THROWS_AS(render_distribution_quarters(snaps, 50000, "x"), InputError);
}
