#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "smm/cli.hpp"
#include "smm/config.hpp"
#include "smm/trainer.hpp"
#include "test_util.hpp"

using namespace smm;
using nlohmann::json;

TEST_CASE("defaults resolve, deriving the ramp from the run length") {
  RunConfig cfg;
  CHECK(cfg.resolved().ramp_steps == 30000);
  cfg.total_steps = 10000;
  CHECK(cfg.resolved().ramp_steps == 6000);
  cfg.ramp_steps = 1234;
  CHECK(cfg.resolved().ramp_steps == 1234);  // explicit value honored
}

TEST_CASE("unknown keys are rejected by name") {
  try {
    run_config_from_json(json{{"sgima", 1.0}});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("sgima") != std::string::npos);
  }
}

TEST_CASE("invariant violations name the key") {
  auto expect_mentions = [](RunConfig cfg, const std::string& key) {
    try {
      cfg.resolved();
      FAIL_CHECK("expected ConfigError for ", key);
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find(key) != std::string::npos);
    }
  };
  RunConfig cfg;
  cfg.sigma = 0.0;
  expect_mentions(cfg, "sigma");
  cfg = RunConfig{};
  cfg.p_add = 1.0;
  expect_mentions(cfg, "p_add");
  cfg = RunConfig{};
  cfg.w_floor = 0.6;
  expect_mentions(cfg, "w_floor");
  cfg = RunConfig{};
  cfg.beta = 0.0;
  expect_mentions(cfg, "beta");
  cfg = RunConfig{};
  cfg.mu0 = 11.0;
  expect_mentions(cfg, "mu0");
  cfg = RunConfig{};
  cfg.total_steps = 0;
  expect_mentions(cfg, "total_steps");
}

TEST_CASE("config json round trip") {
  RunConfig cfg;
  cfg.seed = 42;
  cfg.add_onset = 7000;
  cfg.probes = {make_add(3, 4), make_count(5)};
  const RunConfig back = run_config_from_json(run_config_to_json(cfg));
  CHECK(back.seed == 42);
  CHECK(back.add_onset == 7000);
  REQUIRE(back.probes.size() == 2);
  CHECK(back.probes[0] == make_add(3, 4));
  CHECK(back.probes[1] == make_count(5));
}

TEST_CASE("problem grammar") {
  CHECK(parse_problem("3+4") == make_add(3, 4));
  CHECK(parse_problem("10+1") == Problem{10, 1, Operator::kAdd});
  CHECK(parse_problem("3>4") == Problem{3, 4, Operator::kCountUp});
  auto expect_token = [](const std::string& text, const std::string& token) {
    try {
      parse_problem(text);
      FAIL_CHECK("expected InputError for ", text);
    } catch (const InputError& e) {
      CHECK(std::string(e.what()).find(token) != std::string::npos);
    }
  };
  expect_token("4>?", "?");
  expect_token("3*4", "*");
  expect_token("12+1", "12");
  expect_token("3+", "end of input");
  expect_token("+4", "+");
  expect_token("3+4x", "x");
  CHECK(format_problem(make_add(3, 4)) == "3+4");
  CHECK(format_problem(make_count(4)) == "3>4");
}

TEST_CASE("sweep spec parsing") {
  SweepSpec spec = sweep_spec_from_json(json{{"onsets", {0, 10000}}, {"seeds", {1, 2, 3}}});
  CHECK(spec.onsets.size() == 2);
  CHECK(spec.seeds.size() == 3);
  CHECK_THROWS_AS(sweep_spec_from_json(json{{"onssets", {0}}}), ConfigError);
  CHECK_THROWS_AS(sweep_spec_from_json(json{{"onsets", json::array()}, {"seeds", {1}}}),
                  ConfigError);
  CHECK_THROWS_AS(sweep_spec_from_json(json{{"onsets", {-5}}, {"seeds", {1}}}), ConfigError);
}

TEST_CASE("cmd_train maps config errors to exit 2 and success to 0") {
  TempDir tmp("cli");
  const auto bad = tmp.path / "bad.json";
  {
    std::ofstream out(bad);
    out << R"({"sigma": 0.0})";
  }
  TrainOptions opts;
  opts.config_path = bad.string();
  opts.quiet = true;
  CHECK(cmd_train(opts) == kExitUsage);

  const auto good = tmp.path / "good.json";
  {
    std::ofstream out(good);
    out << R"({"total_steps": 400, "add_onset": 100, "metrics_window": 100,)"
        << R"( "out_dir": ")" << (tmp.path / "deep/nested/run").string() << R"("})";
  }
  TrainOptions ok;
  ok.config_path = good.string();
  ok.quiet = true;
  CHECK(cmd_train(ok) == kExitOk);
  CHECK(std::filesystem::exists(tmp.path / "deep/nested/run" / "trials.jsonl"));
}

TEST_CASE("rerunning an identical sweep reproduces aggregate.csv byte for byte") {
  TempDir tmp("sweepdet");
  for (const char* name : {"a", "b"}) {
    const auto spec_path = tmp.path / (std::string(name) + ".json");
    {
      std::ofstream out(spec_path);
      out << R"({"base": {"total_steps": 600, "metrics_window": 100, "out_dir": ")"
          << (tmp.path / name).string() << R"("}, "onsets": [0, 300], "seeds": [1, 2]})";
    }
    SweepOptions opts;
    opts.spec_path = spec_path.string();
    opts.quiet = true;
    REQUIRE(cmd_sweep(opts) == kExitOk);
  }
  const auto agg_a = read_file(tmp.path / "a" / "aggregate.csv");
  CHECK(!agg_a.empty());
  CHECK(agg_a == read_file(tmp.path / "b" / "aggregate.csv"));
  CHECK(read_file(tmp.path / "a" / "onset0_seed1" / "trials.jsonl") ==
        read_file(tmp.path / "b" / "onset0_seed1" / "trials.jsonl"));
}

TEST_CASE("cmd_plot validates figure names and missing artifacts") {
  TempDir tmp("plotcli");
  CHECK(cmd_plot(tmp.path.string(), "fig9", true) == kExitUsage);
  CHECK(cmd_plot(tmp.path.string(), "all", true) == kExitRuntime);  // empty directory
}

TEST_CASE("cmd_gradcheck rejects a zero trial count") {
  CHECK(cmd_gradcheck(1, 0) == kExitUsage);
}

TEST_CASE("cmd_probe rejects malformed problems") {
  CHECK(cmd_probe("/nonexistent/checkpoint.json", "4>?") == kExitUsage);
}

TEST_CASE("cmd_probe reads a checkpoint and exits cleanly") {
  TempDir tmp("probe");
  RunConfig cfg;
  cfg = cfg.resolved();
  const RunState state = make_run_state(cfg);
  const auto path = tmp.path / "checkpoint.json";
  save_checkpoint(state, path);
  CHECK(cmd_probe(path.string(), "3+4") == kExitOk);
  CHECK(cmd_probe(path.string(), "3>4") == kExitOk);
  CHECK(cmd_probe((tmp.path / "missing.json").string(), "3+4") == kExitRuntime);
}

TEST_CASE("exported untrained embeddings have near-zero mean cosine off-diagonal") {
  TempDir tmp("embed");
  RunConfig cfg;
  cfg.seed = 7;
  cfg = cfg.resolved();
  const RunState state = make_run_state(cfg);
  const auto ckpt = tmp.path / "checkpoint.json";
  save_checkpoint(state, ckpt);
  const auto out = tmp.path / "embeddings.csv";
  REQUIRE(cmd_export_embeddings(ckpt.string(), out.string()) == kExitOk);

  std::ifstream in(out);
  std::string line;
  std::vector<std::vector<double>> cosine;
  bool in_cosine = false;
  int data_rows = 0;
  while (std::getline(in, line)) {
    if (line.rfind("cosine", 0) == 0) {
      in_cosine = true;
      continue;
    }
    if (line.rfind("token", 0) == 0 || line.empty()) {
      continue;
    }
    if (!in_cosine) {
      ++data_rows;  // one embedding row per token
      continue;
    }
    std::vector<double> row;
    std::stringstream ss(line);
    std::string field;
    bool first = true;
    while (std::getline(ss, field, ',')) {
      if (!first) {
        row.push_back(std::stod(field));
      }
      first = false;
    }
    cosine.push_back(row);
  }
  CHECK(data_rows == 10);
  REQUIRE(cosine.size() == 10);
  double offdiag = 0.0;
  int pairs = 0;
  for (int i = 0; i < 10; ++i) {
    REQUIRE(cosine[i].size() == 10);
    CHECK(cosine[i][i] == doctest::Approx(1.0).epsilon(1e-9));
    for (int j = i + 1; j < 10; ++j) {
      offdiag += cosine[i][j];
      ++pairs;
    }
  }
  CHECK(std::abs(offdiag / pairs) < 0.15);  // random vectors are near-orthogonal on average
}
