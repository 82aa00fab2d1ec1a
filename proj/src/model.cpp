#include "smm/model.hpp"

#include <algorithm>
#include <cmath>
#include <span>

namespace smm {

namespace {

constexpr double kProbFloor = 1e-12;
constexpr double kLn10 = 2.302585092994045684;

void fill_uniform(Matrix& m, Rng& rng) {
  const double s = std::sqrt(1.0 / static_cast<double>(m.cols));
  for (double& v : m.data) {
    v = rng.uniform(-s, s);
  }
}

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// y = M x + b for row-major M (rows x cols).
void affine(const Matrix& m, std::span<const double> x, std::span<const double> b,
            std::vector<double>& y) {
  y.resize(static_cast<std::size_t>(m.rows));
  for (int r = 0; r < m.rows; ++r) {
    const double* row = m.row(r);
    double acc = b.empty() ? 0.0 : b[static_cast<std::size_t>(r)];
    for (int c = 0; c < m.cols; ++c) {
      acc += row[c] * x[static_cast<std::size_t>(c)];
    }
    y[static_cast<std::size_t>(r)] = acc;
  }
}

bool finite_sum(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) {
    acc += x;
  }
  return std::isfinite(acc);
}

}  // namespace

ModelParams init_params(std::uint64_t seed, int d, int H) {
  if (d < 2 || H < 2) {
    throw ConfigError("model dimensions must satisfy d >= 2 and H >= 2 (got d=" +
                      std::to_string(d) + ", H=" + std::to_string(H) + ")");
  }
  ModelParams p;
  p.d = d;
  p.H = H;
  p.num_embed = Matrix(kNumTokens, d);
  p.op_embed = Matrix(kNumOperators, d);
  p.gate_w = Matrix(2 * d, d);
  p.gate_b.assign(static_cast<std::size_t>(2 * d), 0.0);
  p.w1 = Matrix(H, 3 * d);
  p.b1.assign(static_cast<std::size_t>(H), 0.0);
  p.w2 = Matrix(kNumTokens, H);
  p.b2.assign(static_cast<std::size_t>(kNumTokens), 0.0);

  Rng rng(seed);
  fill_uniform(p.num_embed, rng);
  fill_uniform(p.op_embed, rng);
  fill_uniform(p.gate_w, rng);
  fill_uniform(p.w1, rng);
  fill_uniform(p.w2, rng);
  return p;
}

std::pair<AnswerDistribution, ForwardTrace> forward(const ModelParams& params,
                                                    const Problem& problem) {
  check_token(problem.a, "operand a");
  check_token(problem.b, "operand b");
  const int d = params.d;

  ForwardTrace t;
  t.problem = problem;
  const double* ea = params.num_embed.row(problem.a - 1);
  const double* eb = params.num_embed.row(problem.b - 1);
  const double* eop = params.op_embed.row(static_cast<int>(problem.op));
  t.e_a.assign(ea, ea + d);
  t.e_b.assign(eb, eb + d);
  t.e_op.assign(eop, eop + d);

  // Operator-conditioned gates on the two operand embeddings.
  affine(params.gate_w, t.e_op, params.gate_b, t.gate_pre);
  t.gates.resize(t.gate_pre.size());
  for (std::size_t i = 0; i < t.gate_pre.size(); ++i) {
    t.gates[i] = sigmoid(t.gate_pre[i]);
  }

  // x = [g_a .* e_a, g_b .* e_b, e_op]
  t.x.resize(static_cast<std::size_t>(3 * d));
  for (int i = 0; i < d; ++i) {
    t.x[static_cast<std::size_t>(i)] = t.gates[static_cast<std::size_t>(i)] * t.e_a[static_cast<std::size_t>(i)];
    t.x[static_cast<std::size_t>(d + i)] =
        t.gates[static_cast<std::size_t>(d + i)] * t.e_b[static_cast<std::size_t>(i)];
    t.x[static_cast<std::size_t>(2 * d + i)] = t.e_op[static_cast<std::size_t>(i)];
  }

  affine(params.w1, t.x, params.b1, t.h_pre);
  t.h.resize(t.h_pre.size());
  for (std::size_t i = 0; i < t.h_pre.size(); ++i) {
    t.h[i] = std::tanh(t.h_pre[i]);
  }

  affine(params.w2, t.h, params.b2, t.logits);

  double max_logit = t.logits[0];
  for (double v : t.logits) {
    max_logit = std::max(max_logit, v);
  }
  double sum = 0.0;
  for (int i = 0; i < kNumTokens; ++i) {
    const double e = std::exp(t.logits[static_cast<std::size_t>(i)] - max_logit);
    t.probs.probs[static_cast<std::size_t>(i)] = e;
    sum += e;
  }
  for (double& p : t.probs.probs) {
    p /= sum;
  }
  return {t.probs, std::move(t)};
}

double cross_entropy(const AnswerDistribution& dist, int target) {
  check_token(target, "target");
  return -std::log(std::max(dist.prob_of(target), kProbFloor));
}

Gradients backward(const ModelParams& params, const ForwardTrace& trace, int target) {
  check_token(target, "target");
  const int d = params.d;
  const int H = params.H;

  Gradients g;
  g.d = d;
  g.H = H;
  g.num_embed = Matrix(kNumTokens, d);
  g.op_embed = Matrix(kNumOperators, d);
  g.gate_w = Matrix(2 * d, d);
  g.gate_b.assign(static_cast<std::size_t>(2 * d), 0.0);
  g.w1 = Matrix(H, 3 * d);
  g.b1.assign(static_cast<std::size_t>(H), 0.0);
  g.w2 = Matrix(kNumTokens, H);
  g.b2.assign(static_cast<std::size_t>(kNumTokens), 0.0);

  // Softmax + cross-entropy: dlogits = probs - onehot(target).
  std::vector<double> dlogits(kNumTokens);
  for (int i = 0; i < kNumTokens; ++i) {
    dlogits[static_cast<std::size_t>(i)] = trace.probs.probs[static_cast<std::size_t>(i)];
  }
  dlogits[static_cast<std::size_t>(target - 1)] -= 1.0;

  // Output layer.
  std::vector<double> dh(static_cast<std::size_t>(H), 0.0);
  for (int k = 0; k < kNumTokens; ++k) {
    const double dk = dlogits[static_cast<std::size_t>(k)];
    g.b2[static_cast<std::size_t>(k)] = dk;
    double* grow = g.w2.row(k);
    const double* wrow = params.w2.row(k);
    for (int j = 0; j < H; ++j) {
      grow[j] = dk * trace.h[static_cast<std::size_t>(j)];
      dh[static_cast<std::size_t>(j)] += dk * wrow[j];
    }
  }

  // Hidden layer (tanh).
  std::vector<double> dh_pre(static_cast<std::size_t>(H));
  for (int j = 0; j < H; ++j) {
    const double hj = trace.h[static_cast<std::size_t>(j)];
    dh_pre[static_cast<std::size_t>(j)] = dh[static_cast<std::size_t>(j)] * (1.0 - hj * hj);
  }
  std::vector<double> dx(static_cast<std::size_t>(3 * d), 0.0);
  for (int j = 0; j < H; ++j) {
    const double dj = dh_pre[static_cast<std::size_t>(j)];
    g.b1[static_cast<std::size_t>(j)] = dj;
    double* grow = g.w1.row(j);
    const double* wrow = params.w1.row(j);
    for (int c = 0; c < 3 * d; ++c) {
      grow[c] = dj * trace.x[static_cast<std::size_t>(c)];
      dx[static_cast<std::size_t>(c)] += dj * wrow[c];
    }
  }

  // Gated input: x_a = g_a .* e_a, x_b = g_b .* e_b, plus the raw e_op slice.
  // Gradient flows into both multiplicands of each product and through the
  // sigmoid into the gate parameters.
  std::vector<double> dgates(static_cast<std::size_t>(2 * d));
  std::vector<double> de_op(trace.e_op.size(), 0.0);
  for (int i = 0; i < d; ++i) {
    const double dxa = dx[static_cast<std::size_t>(i)];
    const double dxb = dx[static_cast<std::size_t>(d + i)];
    dgates[static_cast<std::size_t>(i)] = dxa * trace.e_a[static_cast<std::size_t>(i)];
    dgates[static_cast<std::size_t>(d + i)] = dxb * trace.e_b[static_cast<std::size_t>(i)];
    // Accumulate (a may equal b, so both contributions land on one row).
    g.num_embed.at(trace.problem.a - 1, i) += dxa * trace.gates[static_cast<std::size_t>(i)];
    g.num_embed.at(trace.problem.b - 1, i) += dxb * trace.gates[static_cast<std::size_t>(d + i)];
    de_op[static_cast<std::size_t>(i)] += dx[static_cast<std::size_t>(2 * d + i)];
  }

  std::vector<double> dgate_pre(static_cast<std::size_t>(2 * d));
  for (int i = 0; i < 2 * d; ++i) {
    const double gi = trace.gates[static_cast<std::size_t>(i)];
    dgate_pre[static_cast<std::size_t>(i)] = dgates[static_cast<std::size_t>(i)] * gi * (1.0 - gi);
  }
  for (int r = 0; r < 2 * d; ++r) {
    const double dr = dgate_pre[static_cast<std::size_t>(r)];
    g.gate_b[static_cast<std::size_t>(r)] = dr;
    double* grow = g.gate_w.row(r);
    const double* wrow = params.gate_w.row(r);
    for (int c = 0; c < d; ++c) {
      grow[c] = dr * trace.e_op[static_cast<std::size_t>(c)];
      de_op[static_cast<std::size_t>(c)] += dr * wrow[c];
    }
  }

  double* op_row = g.op_embed.row(static_cast<int>(trace.problem.op));
  for (int i = 0; i < d; ++i) {
    op_row[i] = de_op[static_cast<std::size_t>(i)];
  }
  return g;
}

void sgd_step(ModelParams& params, const Gradients& grads, double lr) {
  if (!(lr >= 0.0)) {
    throw ConfigError("learning rate must be non-negative");
  }
  if (!(finite_sum(grads.num_embed.data) && finite_sum(grads.op_embed.data) &&
        finite_sum(grads.gate_w.data) && finite_sum(grads.gate_b) && finite_sum(grads.w1.data) &&
        finite_sum(grads.b1) && finite_sum(grads.w2.data) && finite_sum(grads.b2))) {
    throw TrainingError("non-finite gradient");
  }
  auto apply = [lr](std::vector<double>& p, const std::vector<double>& g) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] -= lr * g[i];
    }
  };
  apply(params.num_embed.data, grads.num_embed.data);
  apply(params.op_embed.data, grads.op_embed.data);
  apply(params.gate_w.data, grads.gate_w.data);
  apply(params.gate_b, grads.gate_b);
  apply(params.w1.data, grads.w1.data);
  apply(params.b1, grads.b1);
  apply(params.w2.data, grads.w2.data);
  apply(params.b2, grads.b2);
}

double entropy_confidence(const AnswerDistribution& dist) {
  double entropy = 0.0;
  for (double p : dist.probs) {
    if (p > 0.0) {
      entropy -= p * std::log(p);
    }
  }
  return std::clamp(1.0 - entropy / kLn10, 0.0, 1.0);
}

bool all_finite(const ModelParams& params) {
  return finite_sum(params.num_embed.data) && finite_sum(params.op_embed.data) &&
         finite_sum(params.gate_w.data) && finite_sum(params.gate_b) &&
         finite_sum(params.w1.data) && finite_sum(params.b1) && finite_sum(params.w2.data) &&
         finite_sum(params.b2);
}

namespace {

// Extended-precision mirror of forward + cross_entropy, used only as the
// finite-difference oracle. Double-precision loss evaluations put the
// difference quotient's roundoff near eps-scale for near-zero gradients;
// 80-bit arithmetic keeps the quotient three orders of magnitude cleaner.
struct LongParams {
  int d, H;
  std::vector<long double> num_embed, op_embed, gate_w, gate_b, w1, b1, w2, b2;
};

LongParams widen(const ModelParams& p) {
  LongParams lp;
  lp.d = p.d;
  lp.H = p.H;
  auto conv = [](const std::vector<double>& v) {
    return std::vector<long double>(v.begin(), v.end());
  };
  lp.num_embed = conv(p.num_embed.data);
  lp.op_embed = conv(p.op_embed.data);
  lp.gate_w = conv(p.gate_w.data);
  lp.gate_b = conv(p.gate_b);
  lp.w1 = conv(p.w1.data);
  lp.b1 = conv(p.b1);
  lp.w2 = conv(p.w2.data);
  lp.b2 = conv(p.b2);
  return lp;
}

long double long_loss(const LongParams& p, const Problem& problem, int target) {
  const int d = p.d;
  const int H = p.H;
  const long double* ea = p.num_embed.data() + static_cast<std::size_t>(problem.a - 1) * d;
  const long double* eb = p.num_embed.data() + static_cast<std::size_t>(problem.b - 1) * d;
  const long double* eop = p.op_embed.data() + static_cast<std::size_t>(problem.op) * d;

  std::vector<long double> gates(static_cast<std::size_t>(2 * d));
  for (int r = 0; r < 2 * d; ++r) {
    long double acc = p.gate_b[static_cast<std::size_t>(r)];
    const long double* row = p.gate_w.data() + static_cast<std::size_t>(r) * d;
    for (int c = 0; c < d; ++c) {
      acc += row[c] * eop[c];
    }
    gates[static_cast<std::size_t>(r)] = 1.0L / (1.0L + std::exp(-acc));
  }

  std::vector<long double> x(static_cast<std::size_t>(3 * d));
  for (int i = 0; i < d; ++i) {
    x[static_cast<std::size_t>(i)] = gates[static_cast<std::size_t>(i)] * ea[i];
    x[static_cast<std::size_t>(d + i)] = gates[static_cast<std::size_t>(d + i)] * eb[i];
    x[static_cast<std::size_t>(2 * d + i)] = eop[i];
  }

  std::vector<long double> h(static_cast<std::size_t>(H));
  for (int j = 0; j < H; ++j) {
    long double acc = p.b1[static_cast<std::size_t>(j)];
    const long double* row = p.w1.data() + static_cast<std::size_t>(j) * (3 * d);
    for (int c = 0; c < 3 * d; ++c) {
      acc += row[c] * x[static_cast<std::size_t>(c)];
    }
    h[static_cast<std::size_t>(j)] = std::tanh(acc);
  }

  std::array<long double, kNumTokens> logits{};
  long double max_logit = -1e30L;
  for (int k = 0; k < kNumTokens; ++k) {
    long double acc = p.b2[static_cast<std::size_t>(k)];
    const long double* row = p.w2.data() + static_cast<std::size_t>(k) * H;
    for (int j = 0; j < H; ++j) {
      acc += row[j] * h[static_cast<std::size_t>(j)];
    }
    logits[static_cast<std::size_t>(k)] = acc;
    max_logit = std::max(max_logit, acc);
  }
  long double z = 0.0L;
  for (long double l : logits) {
    z += std::exp(l - max_logit);
  }
  const long double pt = std::exp(logits[static_cast<std::size_t>(target - 1)] - max_logit) / z;
  return -std::log(std::max(pt, static_cast<long double>(kProbFloor)));
}

struct GroupView {
  std::vector<long double>* wide;
  const std::vector<double>* grad;
};

}  // namespace

double gradient_check(const ModelParams& params, const Problem& problem, int target, double eps) {
  if (eps < 1e-6 || eps > 1e-3) {
    throw ConfigError("gradient_check eps must lie in [1e-6, 1e-3]");
  }
  const Gradients analytic = backward(params, forward(params, problem).second, target);
  LongParams wide = widen(params);
  const std::vector<GroupView> groups = {
      {&wide.num_embed, &analytic.num_embed.data},
      {&wide.op_embed, &analytic.op_embed.data},
      {&wide.gate_w, &analytic.gate_w.data},
      {&wide.gate_b, &analytic.gate_b},
      {&wide.w1, &analytic.w1.data},
      {&wide.b1, &analytic.b1},
      {&wide.w2, &analytic.w2.data},
      {&wide.b2, &analytic.b2},
  };

  // Deterministic strided sample: every bias entry plus >= 40 entries of each
  // weight matrix (about 300 entries total, covering used and unused rows).
  double max_rel = 0.0;
  for (const auto& group : groups) {
    const std::size_t n = group.wide->size();
    const std::size_t stride = std::max<std::size_t>(1, n / 40);
    for (std::size_t i = 0; i < n; i += stride) {
      long double& slot = (*group.wide)[i];
      const long double saved = slot;
      slot = saved + static_cast<long double>(eps);
      const long double up = long_loss(wide, problem, target);
      slot = saved - static_cast<long double>(eps);
      const long double down = long_loss(wide, problem, target);
      slot = saved;
      const double numeric = static_cast<double>((up - down) / (2.0L * eps));
      const double a = (*group.grad)[i];
      const double rel = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

}  // namespace smm
