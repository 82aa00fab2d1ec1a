#include "smm/curriculum.hpp"

#include <algorithm>
#include <cmath>

namespace smm {

namespace {

// Counting difficulty sweeps the full query range regardless of the sum range.
constexpr double kCountMu0 = 1.0;
constexpr double kCountMu1 = 9.0;

double ramp_fraction(const CurriculumSchedule& sched, long long t) {
  if (sched.ramp_steps <= 0) {
    return 1.0;
  }
  return std::min(1.0, static_cast<double>(t) / static_cast<double>(sched.ramp_steps));
}

int draw_level(double mean, double sigma, int lo, int hi, Rng& rng) {
  const double raw = rng.gaussian(mean, sigma);
  const long rounded = std::lround(raw);
  return static_cast<int>(std::clamp<long>(rounded, lo, hi));
}

}  // namespace

double difficulty_mean(const CurriculumSchedule& sched, long long t) {
  return sched.mu0 + (sched.mu1 - sched.mu0) * ramp_fraction(sched, t);
}

Problem sample_addition(const CurriculumSchedule& sched, long long t, Rng& rng) {
  // Addition difficulty ramps in addition-relative time: whenever addition
  // enters the mix, its sums start small and grow from there, independent of
  // how much counting practice preceded it.
  const long long tau = std::max<long long>(0, t - sched.add_onset);
  const int sum = draw_level(difficulty_mean(sched, tau), sched.sigma, 2, 2 * kMaxAddOperand, rng);
  // Ordered pairs (a,b) with a+b = sum and both operands in 1..5.
  const int a_lo = std::max(1, sum - kMaxAddOperand);
  const int a_hi = std::min(kMaxAddOperand, sum - 1);
  const int a = rng.uniform_int(a_lo, a_hi);
  return make_add(a, sum - a);
}

Problem sample_counting(const CurriculumSchedule& sched, long long t, Rng& rng) {
  const double mean = kCountMu0 + (kCountMu1 - kCountMu0) * ramp_fraction(sched, t);
  const int b = draw_level(mean, sched.sigma, 1, kMaxCountCurrent, rng);
  return make_count(b);
}

Problem sample_trial(const CurriculumSchedule& sched, long long t, Rng& rng) {
  if (t >= sched.add_onset && rng.bernoulli(sched.p_add)) {
    return sample_addition(sched, t, rng);
  }
  return sample_counting(sched, t, rng);
}

int true_answer(const Problem& problem) {
  const int answer = problem.op == Operator::kAdd ? problem.a + problem.b : problem.b + 1;
  if (answer > kNumTokens) {
    throw InputError("answer " + std::to_string(answer) + " exceeds the answer vocabulary");
  }
  return answer;
}

}  // namespace smm
