#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "smm/rng.hpp"
#include "smm/types.hpp"

namespace smm {

// Dense row-major matrix, just big enough for this fixed architecture.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

  const double* row(int r) const { return data.data() + static_cast<std::size_t>(r) * cols; }
  double* row(int r) { return data.data() + static_cast<std::size_t>(r) * cols; }

  bool operator==(const Matrix&) const = default;
};

// All learnable quantities. Shapes (d = embedding width, H = hidden width):
//   num_embed 10xd, op_embed 2xd,
//   gate_w 2dxd + gate_b 2d   (operator embedding -> two d-wide gates),
//   w1 Hx3d + b1 H, w2 10xH + b2 10.
struct ModelParams {
  int d = 0;
  int H = 0;
  Matrix num_embed;
  Matrix op_embed;
  Matrix gate_w;
  std::vector<double> gate_b;
  Matrix w1;
  std::vector<double> b1;
  Matrix w2;
  std::vector<double> b2;

  bool operator==(const ModelParams&) const = default;
};

// Gradients mirror ModelParams shape-for-shape.
using Gradients = ModelParams;

// Every intermediate of one forward pass, kept for backprop.
struct ForwardTrace {
  Problem problem;
  std::vector<double> e_a, e_b, e_op;  // embeddings used (d each)
  std::vector<double> gate_pre;        // 2d, pre-sigmoid
  std::vector<double> gates;           // 2d, in (0,1)
  std::vector<double> x;               // 3d gated input
  std::vector<double> h_pre;           // H
  std::vector<double> h;               // H, tanh
  std::vector<double> logits;          // 10
  AnswerDistribution probs;
};

// Uniform +-sqrt(1/fan_in) per matrix (fan_in = column count), biases zero.
// Deterministic given seed.
ModelParams init_params(std::uint64_t seed, int d, int H);

std::pair<AnswerDistribution, ForwardTrace> forward(const ModelParams& params, const Problem& problem);

// -ln(probs[target]) with the probability floored at 1e-12.
double cross_entropy(const AnswerDistribution& dist, int target);

// Exact analytic gradient of cross_entropy(forward(params, .), target).
Gradients backward(const ModelParams& params, const ForwardTrace& trace, int target);

// In-place p <- p - lr*g. Throws TrainingError on non-finite gradients.
void sgd_step(ModelParams& params, const Gradients& grads, double lr);

// 1 - H/ln(10), clamped to [0,1]; 0 for uniform, 1 for one-hot.
double entropy_confidence(const AnswerDistribution& dist);

// Max relative error between analytic and central-difference gradients over a
// deterministic sample of entries covering every parameter group.
double gradient_check(const ModelParams& params, const Problem& problem, int target, double eps);

bool all_finite(const ModelParams& params);

}  // namespace smm
