#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace smm {

// Answer / number vocabulary is the tokens 1..10: operands stay in 1..5 but
// sums reach 10 and counting chains run up to 10.
inline constexpr int kNumTokens = 10;
inline constexpr int kNumOperators = 2;
inline constexpr int kMaxAddOperand = 5;
inline constexpr int kMaxCountCurrent = 9;  // count-up queries keep b+1 <= 10

enum class Operator : std::uint8_t { kCountUp = 0, kAdd = 1 };

inline const char* operator_name(Operator op) {
  return op == Operator::kAdd ? "add" : "count_up";
}

struct Problem {
  int a = 1;
  int b = 1;
  Operator op = Operator::kCountUp;

  bool operator==(const Problem&) const = default;
};

inline Problem make_add(int a, int b) { return Problem{a, b, Operator::kAdd}; }
inline Problem make_count(int b) { return Problem{b > 1 ? b - 1 : 1, b, Operator::kCountUp}; }

// Probability distribution over the answer tokens 1..10 (the learned
// distribution of associations). probs[i] belongs to token i+1.
struct AnswerDistribution {
  std::array<double, kNumTokens> probs{};

  double prob_of(int token) const { return probs[static_cast<std::size_t>(token - 1)]; }
};

// Argmax answer token; ties break toward the smallest token.
inline int argmax_answer(const AnswerDistribution& dist) {
  int best = 1;
  for (int token = 2; token <= kNumTokens; ++token) {
    if (dist.prob_of(token) > dist.prob_of(best)) {
      best = token;
    }
  }
  return best;
}

// Error taxonomy: configuration/usage problems exit 2 at the CLI, runtime
// failures exit 1.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void check_token(int token, const char* what) {
  if (token < 1 || token > kNumTokens) {
    throw InputError(std::string(what) + " out of vocabulary: " + std::to_string(token));
  }
}

}  // namespace smm
