#pragma once

#include "smm/strategies.hpp"
#include "smm/types.hpp"

namespace smm {

// Full provenance of one trial, as logged to trials.jsonl.
struct TrialRecord {
  long long step = 0;
  Problem problem;
  StrategyKind strategy = StrategyKind::kOracleCount;
  int answer = 1;
  int truth = 1;
  bool correct = false;
  double confidence = 0.0;
  int target = 1;
  double loss = 0.0;
  bool is_add = false;
};

}  // namespace smm
