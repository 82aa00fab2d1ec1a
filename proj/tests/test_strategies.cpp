#include <doctest.h>

#include <cmath>
#include <set>

#include "smm/strategies.hpp"

using namespace smm;

namespace {

ModelParams zero_params() {
  ModelParams p = init_params(1, 16, 32);
  for (auto* m : {&p.num_embed, &p.op_embed, &p.gate_w, &p.w1, &p.w2}) {
    std::fill(m->data.begin(), m->data.end(), 0.0);
  }
  return p;
}

// Output-bias spike: argmax lands on `token` with high confidence for every
// input. Moderate magnitudes keep the entropy nonzero in double precision.
ModelParams biased_params(int token, double magnitude = 50.0) {
  ModelParams p = zero_params();
  p.b2[static_cast<std::size_t>(token - 1)] = magnitude;
  return p;
}

}  // namespace

TEST_CASE("retrieve: uniform distribution tie-breaks to token 1 with zero confidence") {
  const Retrieval r = retrieve(zero_params(), make_add(3, 4));
  CHECK(r.answer == 1);
  CHECK(r.confidence == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("retrieve: near-one-hot distribution") {
  const Retrieval r = retrieve(biased_params(7), make_add(3, 4));
  CHECK(r.answer == 7);
  CHECK(r.confidence > 0.999);
}

TEST_CASE("count_next samples uniformly from a uniform counter") {
  const ModelParams p = zero_params();
  Rng rng(11);
  std::array<int, 10> counts{};
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    ++counts[static_cast<std::size_t>(count_next(p, 4, rng) - 1)];
  }
  for (int c : counts) {
    CHECK(std::abs(static_cast<double>(c) / n - 0.1) <= 0.01);
  }
}

TEST_CASE("count_next follows a near-one-hot counter") {
  const ModelParams p = biased_params(6);
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    CHECK(count_next(p, 5, rng) == 6);
  }
}

TEST_CASE("finger_count_chain with the oracle computes a+b for all operand pairs") {
  const auto oracle = [](int current) { return oracle_count(current); };
  CHECK(finger_count_chain(2, 3, oracle) == 5);
  CHECK(finger_count_chain(3, 4, oracle) == 7);
  for (int a = 1; a <= 5; ++a) {
    for (int b = 1; b <= 5; ++b) {
      CHECK(finger_count_chain(a, b, oracle) == a + b);
    }
  }
}

TEST_CASE("finger_count with an untrained counter scatters and reports its steps") {
  const ModelParams p = zero_params();
  Rng rng(9);
  std::set<int> answers;
  for (int i = 0; i < 200; ++i) {
    const FingerResult f = finger_count(p, 3, 4, rng);
    CHECK(f.steps == 4);
    CHECK(f.answer >= 1);
    CHECK(f.answer <= 10);
    answers.insert(f.answer);
  }
  CHECK(answers.size() >= 5);
}

TEST_CASE("oracle_count is exact and range-checked") {
  CHECK(oracle_count(4) == 5);
  CHECK(oracle_count(1) == 2);
  CHECK(oracle_count(9) == 10);
  CHECK_THROWS_AS(oracle_count(10), InputError);
  CHECK_THROWS_AS(oracle_count(0), InputError);
}

TEST_CASE("choose_addition_strategy follows the proportional rule") {
  Rng rng(21);
  StrategyStats stats;
  const int n = 10000;

  int finger = 0;
  for (int i = 0; i < n; ++i) {
    finger += choose_addition_strategy(stats, rng) == StrategyKind::kFingerCount ? 1 : 0;
  }
  CHECK(std::abs(static_cast<double>(finger) / n - 0.5) < 0.02);

  stats.w_retrieval_add = 0.05;
  stats.w_finger = 1.0;
  finger = 0;
  for (int i = 0; i < n; ++i) {
    finger += choose_addition_strategy(stats, rng) == StrategyKind::kFingerCount ? 1 : 0;
  }
  CHECK(std::abs(static_cast<double>(finger) / n - 1.0 / 1.05) < 0.02);

  // Swapping the weights swaps the selection probabilities.
  std::swap(stats.w_retrieval_add, stats.w_finger);
  int retrieval = 0;
  for (int i = 0; i < n; ++i) {
    retrieval += choose_addition_strategy(stats, rng) == StrategyKind::kRetrievalAdd ? 1 : 0;
  }
  CHECK(std::abs(static_cast<double>(retrieval) / n - 1.0 / 1.05) < 0.02);
}

TEST_CASE("finger selection probability is non-decreasing in w_finger") {
  Rng rng(33);
  const int n = 50000;
  double prev = -1.0;
  for (double wf : {0.2, 0.5, 0.9}) {
    StrategyStats stats;
    stats.w_finger = wf;
    int finger = 0;
    for (int i = 0; i < n; ++i) {
      finger += choose_addition_strategy(stats, rng) == StrategyKind::kFingerCount ? 1 : 0;
    }
    const double rate = static_cast<double>(finger) / n;
    CHECK(rate > prev);
    prev = rate;
  }
}

TEST_CASE("solve_addition: the confidence gate forces fallback on an untrained model") {
  const ModelParams p = zero_params();
  StrategyStats stats;
  Rng rng(8);
  for (int i = 0; i < 100; ++i) {
    const TrialOutcome out = solve_addition(p, stats, make_add(2, 3), 0.85, rng);
    CHECK(out.strategy == StrategyKind::kFingerCount);
    CHECK(out.steps == 3);
    CHECK(out.answer >= 1);
    CHECK(out.answer <= 10);
  }
}

TEST_CASE("solve_addition: confident correct retrieval is used when picked") {
  const ModelParams p = biased_params(7);  // 3+4 -> 7 with high confidence
  StrategyStats stats;
  stats.w_retrieval_add = 1.0;
  stats.w_finger = 0.05;
  Rng rng(15);
  int retrieval_trials = 0;
  for (int i = 0; i < 100; ++i) {
    const TrialOutcome out = solve_addition(p, stats, make_add(3, 4), 0.85, rng);
    if (out.strategy == StrategyKind::kRetrievalAdd) {
      ++retrieval_trials;
      CHECK(out.answer == 7);
      CHECK(out.correct);
      CHECK(out.steps == 0);
    }
  }
  CHECK(retrieval_trials > 50);
}

TEST_CASE("solve_addition records the retrieval distribution whatever the strategy") {
  const ModelParams p = zero_params();
  StrategyStats stats;
  Rng rng(6);
  const TrialOutcome out = solve_addition(p, stats, make_add(4, 4), 0.85, rng);
  CHECK(out.strategy == StrategyKind::kFingerCount);
  double sum = 0.0;
  for (double v : out.distribution.probs) {
    sum += v;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(out.distribution.probs[0] == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("solve_counting: oracle path on an untrained model is always correct") {
  const ModelParams p = zero_params();
  Rng rng(2);
  const TrialOutcome out = solve_counting(p, make_count(4), 0.85, rng);
  CHECK(out.strategy == StrategyKind::kOracleCount);
  CHECK(out.answer == 5);
  CHECK(out.correct);
}

TEST_CASE("solve_counting: a confident counter retrieves; theta=1 keeps the oracle") {
  const ModelParams p = biased_params(5, 10.0);  // confidence ~0.998, strictly below 1
  Rng rng(3);
  const TrialOutcome confident = solve_counting(p, make_count(4), 0.85, rng);
  CHECK(confident.strategy == StrategyKind::kRetrievalCount);
  CHECK(confident.answer == 5);

  const TrialOutcome gated = solve_counting(p, make_count(4), 1.0, rng);
  CHECK(gated.strategy == StrategyKind::kOracleCount);
}

TEST_CASE("update_stats arithmetic, clamping, and the oracle no-op") {
  StrategyStats stats;
  update_stats(stats, StrategyKind::kFingerCount, true);
  CHECK(stats.w_finger == doctest::Approx(0.525).epsilon(1e-12));
  CHECK(stats.w_retrieval_add == 0.5);

  stats.w_retrieval_count = stats.w_floor;
  update_stats(stats, StrategyKind::kRetrievalCount, false);
  CHECK(stats.w_retrieval_count == stats.w_floor);

  const StrategyStats before = stats;
  update_stats(stats, StrategyKind::kOracleCount, true);
  CHECK(stats.w_retrieval_add == before.w_retrieval_add);
  CHECK(stats.w_finger == before.w_finger);
  CHECK(stats.w_retrieval_count == before.w_retrieval_count);
}

TEST_CASE("alternating outcomes settle into a band of half-width beta around 0.5") {
  StrategyStats stats;
  for (int i = 0; i < 1000; ++i) {
    update_stats(stats, StrategyKind::kFingerCount, i % 2 == 0);
    if (i > 100) {
      CHECK(std::abs(stats.w_finger - 0.5) <= stats.beta);
    }
  }
}

TEST_CASE("weights stay within [w_floor, 1] under any correctness sequence") {
  StrategyStats stats;
  Rng rng(44);
  for (int i = 0; i < 5000; ++i) {
    const StrategyKind kind = rng.bernoulli(0.5) ? StrategyKind::kFingerCount
                                                 : StrategyKind::kRetrievalAdd;
    update_stats(stats, kind, rng.bernoulli(0.3));
    REQUIRE(stats.w_finger >= stats.w_floor);
    REQUIRE(stats.w_finger <= 1.0);
    REQUIRE(stats.w_retrieval_add >= stats.w_floor);
    REQUIRE(stats.w_retrieval_add <= 1.0);
  }
}
