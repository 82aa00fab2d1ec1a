#pragma once

#include <cstdint>

#include "smm/rng.hpp"
#include "smm/types.hpp"

namespace smm {

// Gaussian difficulty schedule: the target sum (addition) and the current
// number (counting) are drawn from a Normal whose mean rises linearly from
// mu0 to mu1 over ramp_steps. Counting ramps from step 0; addition enters
// the mix at add_onset and ramps in addition-relative time from there. The
// Gaussian tails double as review of earlier material.
struct CurriculumSchedule {
  double mu0 = 2.0;
  double mu1 = 10.0;
  double sigma = 2.0;
  long long ramp_steps = 30000;
  long long add_onset = 10000;
  double p_add = 0.5;
};

// Linear interpolation mu0 -> mu1, clamped at ramp_steps.
double difficulty_mean(const CurriculumSchedule& sched, long long t);

// ADD problem with a,b in 1..5 and a+b drawn from the schedule's Gaussian at
// addition-relative time t - add_onset (rounded, clamped to [2,10]); the
// (a,b) split is uniform over ordered pairs.
Problem sample_addition(const CurriculumSchedule& sched, long long t, Rng& rng);

// COUNT_UP problem: b drawn from the same Gaussian mechanism over [1,9]
// (mean ramping 1 -> 9), a = max(b-1, 1).
Problem sample_counting(const CurriculumSchedule& sched, long long t, Rng& rng);

// Counting before add_onset; afterwards ADD with probability p_add.
Problem sample_trial(const CurriculumSchedule& sched, long long t, Rng& rng);

// ADD -> a+b, COUNT_UP -> b+1. Throws InputError if the answer would leave
// the vocabulary (never happens for curriculum-generated problems).
int true_answer(const Problem& problem);

}  // namespace smm
