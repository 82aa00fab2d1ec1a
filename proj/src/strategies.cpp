#include "smm/strategies.hpp"

#include <algorithm>

#include "smm/curriculum.hpp"

namespace smm {

const char* strategy_name(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::kRetrievalAdd:
      return "retrieval_add";
    case StrategyKind::kFingerCount:
      return "finger_count";
    case StrategyKind::kRetrievalCount:
      return "retrieval_count";
    case StrategyKind::kOracleCount:
      return "oracle_count";
  }
  return "unknown";
}

StrategyKind strategy_from_name(const std::string& name) {
  if (name == "retrieval_add") return StrategyKind::kRetrievalAdd;
  if (name == "finger_count") return StrategyKind::kFingerCount;
  if (name == "retrieval_count") return StrategyKind::kRetrievalCount;
  if (name == "oracle_count") return StrategyKind::kOracleCount;
  throw InputError("unknown strategy name: " + name);
}

Retrieval retrieve(const ModelParams& params, const Problem& problem) {
  Retrieval r;
  r.dist = forward(params, problem).first;
  r.answer = argmax_answer(r.dist);
  r.confidence = entropy_confidence(r.dist);
  return r;
}

int count_next(const ModelParams& params, int current, Rng& rng) {
  const Problem query{current > 1 ? current - 1 : 1, current, Operator::kCountUp};
  const AnswerDistribution dist = forward(params, query).first;
  const double u = rng.uniform01();
  double cum = 0.0;
  for (int token = 1; token <= kNumTokens; ++token) {
    cum += dist.prob_of(token);
    if (u < cum) {
      return token;
    }
  }
  return kNumTokens;
}

int finger_count_chain(int a, int b, const std::function<int(int)>& next) {
  int current = a;
  for (int step = 0; step < b; ++step) {
    current = next(std::min(current, kMaxCountCurrent));
  }
  return current;
}

FingerResult finger_count(const ModelParams& params, int a, int b, Rng& rng) {
  const int answer =
      finger_count_chain(a, b, [&](int current) { return count_next(params, current, rng); });
  return FingerResult{answer, b};
}

int oracle_count(int current) {
  if (current < 1 || current > kMaxCountCurrent) {
    throw InputError("oracle_count requires current in 1..9, got " + std::to_string(current));
  }
  return current + 1;
}

StrategyKind choose_addition_strategy(const StrategyStats& stats, Rng& rng) {
  const double p_retrieval = stats.w_retrieval_add / (stats.w_retrieval_add + stats.w_finger);
  return rng.bernoulli(p_retrieval) ? StrategyKind::kRetrievalAdd : StrategyKind::kFingerCount;
}

TrialOutcome solve_addition(const ModelParams& params, const StrategyStats& stats,
                            const Problem& problem, double theta_add, Rng& rng) {
  const Retrieval r = retrieve(params, problem);

  TrialOutcome out;
  out.confidence = r.confidence;
  out.distribution = r.dist;

  StrategyKind picked = choose_addition_strategy(stats, rng);
  if (picked == StrategyKind::kRetrievalAdd && r.confidence < theta_add) {
    picked = StrategyKind::kFingerCount;  // below-threshold retrieval defers
  }
  if (picked == StrategyKind::kRetrievalAdd) {
    out.strategy = StrategyKind::kRetrievalAdd;
    out.answer = r.answer;
    out.steps = 0;
  } else {
    const FingerResult f = finger_count(params, problem.a, problem.b, rng);
    out.strategy = StrategyKind::kFingerCount;
    out.answer = f.answer;
    out.steps = f.steps;
  }
  out.correct = out.answer == true_answer(problem);
  return out;
}

TrialOutcome solve_counting(const ModelParams& params, const Problem& problem, double theta_count,
                            Rng& rng) {
  (void)rng;
  const Retrieval r = retrieve(params, problem);

  TrialOutcome out;
  out.confidence = r.confidence;
  out.distribution = r.dist;
  if (r.confidence >= theta_count) {
    out.strategy = StrategyKind::kRetrievalCount;
    out.answer = r.answer;
  } else {
    out.strategy = StrategyKind::kOracleCount;
    out.answer = oracle_count(problem.b);
  }
  out.steps = 0;
  out.correct = out.answer == true_answer(problem);
  return out;
}

void update_stats(StrategyStats& stats, StrategyKind strategy, bool success) {
  double* w = nullptr;
  switch (strategy) {
    case StrategyKind::kRetrievalAdd:
      w = &stats.w_retrieval_add;
      break;
    case StrategyKind::kFingerCount:
      w = &stats.w_finger;
      break;
    case StrategyKind::kRetrievalCount:
      w = &stats.w_retrieval_count;
      break;
    case StrategyKind::kOracleCount:
      return;
  }
  *w = std::clamp((1.0 - stats.beta) * *w + stats.beta * (success ? 1.0 : 0.0), stats.w_floor, 1.0);
}

}  // namespace smm
