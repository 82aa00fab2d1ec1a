#pragma once

#include <functional>

#include "smm/model.hpp"
#include "smm/rng.hpp"
#include "smm/types.hpp"

namespace smm {

enum class StrategyKind : std::uint8_t {
  kRetrievalAdd = 0,
  kFingerCount = 1,
  kRetrievalCount = 2,
  kOracleCount = 3,
};

const char* strategy_name(StrategyKind kind);
StrategyKind strategy_from_name(const std::string& name);

// Running success weights driving stochastic strategy selection.
struct StrategyStats {
  double w_retrieval_add = 0.5;
  double w_finger = 0.5;
  double w_retrieval_count = 0.5;
  double beta = 0.05;
  double w_floor = 0.05;
};

struct Retrieval {
  int answer = 1;
  double confidence = 0.0;
  AnswerDistribution dist;
};

// Full record of one solved trial. `distribution` is always the retrieval
// distribution for the problem, whatever strategy produced the answer.
struct TrialOutcome {
  StrategyKind strategy = StrategyKind::kRetrievalAdd;
  int answer = 1;
  double confidence = 0.0;
  AnswerDistribution distribution;
  int steps = 0;
  bool correct = false;
};

// Forward pass; answer = argmax (ties to the smallest token), confidence from
// entropy.
Retrieval retrieve(const ModelParams& params, const Problem& problem);

// One counting step: query (max(current-1,1) COUNT_UP current) and SAMPLE the
// answer token from the resulting distribution. Sampling, not argmax, so a
// weakly trained counter produces off-by-one slips.
int count_next(const ModelParams& params, int current, Rng& rng);

struct FingerResult {
  int answer = 0;
  int steps = 0;
};

// Chain the model's own counting b steps up from a; no oracle help inside,
// so counting errors propagate into the addition answer.
FingerResult finger_count(const ModelParams& params, int a, int b, Rng& rng);

// Chain with an injected stepper (test harnesses swap in the oracle).
int finger_count_chain(int a, int b, const std::function<int(int)>& next);

// The parental oracle: exactly current+1.
int oracle_count(int current);

// RETRIEVAL_ADD with probability w_retrieval_add/(w_retrieval_add+w_finger).
StrategyKind choose_addition_strategy(const StrategyStats& stats, Rng& rng);

// Stochastic pick, then the confidence gate: a retrieval pick below theta_add
// defers to finger-counting and records FINGER_COUNT.
TrialOutcome solve_addition(const ModelParams& params, const StrategyStats& stats,
                            const Problem& problem, double theta_add, Rng& rng);

// Retrieval if confident, otherwise the oracle supplies b+1.
TrialOutcome solve_counting(const ModelParams& params, const Problem& problem, double theta_count,
                            Rng& rng);

// w_used <- clamp((1-beta)*w_used + beta*[success], w_floor, 1); the oracle
// has no weight and updates nothing.
void update_stats(StrategyStats& stats, StrategyKind strategy, bool success);

}  // namespace smm
