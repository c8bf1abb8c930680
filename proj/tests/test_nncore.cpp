#include "maps/error.hpp"
#include "maps/nncore.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

namespace maps {
namespace {

using test::Rng;

// Scalar oracle written independently of the library: explicit loops, tanh on
// hidden layers, affine output.
Vector oracle_forward(const MlpParams& p, const Vector& x) {
  std::vector<double> a(x.data(), x.data() + x.size());
  for (int l = 0; l < p.num_layers(); ++l) {
    const Matrix& w = p.weights[static_cast<std::size_t>(l)];
    const Vector& b = p.biases[static_cast<std::size_t>(l)];
    std::vector<double> next(static_cast<std::size_t>(w.rows()));
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      double s = b[r];
      for (Eigen::Index c = 0; c < w.cols(); ++c) s += w(r, c) * a[static_cast<std::size_t>(c)];
      const bool hidden = l + 1 < p.num_layers() || p.activate_output;
      next[static_cast<std::size_t>(r)] = hidden ? std::tanh(s) : s;
    }
    a = std::move(next);
  }
  return Eigen::Map<Vector>(a.data(), static_cast<Eigen::Index>(a.size()));
}

TEST(InitParams, ShapesFollowLayerSizes) {
  const std::vector<int> sizes{4, 128, 128, 128, 2};
  const MlpParams p = init_params(sizes, 7);
  ASSERT_EQ(p.num_layers(), 4);
  EXPECT_EQ(p.weights[0].rows(), 128);
  EXPECT_EQ(p.weights[0].cols(), 4);
  EXPECT_EQ(p.weights[1].rows(), 128);
  EXPECT_EQ(p.weights[1].cols(), 128);
  EXPECT_EQ(p.weights[2].rows(), 128);
  EXPECT_EQ(p.weights[2].cols(), 128);
  EXPECT_EQ(p.weights[3].rows(), 2);
  EXPECT_EQ(p.weights[3].cols(), 128);
  for (int l = 0; l < 4; ++l) {
    EXPECT_EQ(p.biases[l].size(), sizes[l + 1]);
    EXPECT_TRUE(p.biases[l].isZero(0.0));
    const double bound = 1.0 / std::sqrt(static_cast<double>(sizes[l]));
    EXPECT_LE(p.weights[l].cwiseAbs().maxCoeff(), bound);
  }
  EXPECT_EQ(p.parameter_count(), 4u * 128 + 128 + 2 * (128u * 128 + 128) + 128 * 2 + 2);
}

TEST(InitParams, DeterministicPerSeed) {
  const std::vector<int> sizes{3, 16, 2};
  EXPECT_EQ(init_params(sizes, 7), init_params(sizes, 7));
  EXPECT_FALSE(init_params(sizes, 7) == init_params(sizes, 8));
}

TEST(InitParams, RejectsBadSizes) {
  EXPECT_THROW(init_params(std::vector<int>{}, 1), Error);
  EXPECT_THROW(init_params(std::vector<int>{3}, 1), Error);
  EXPECT_THROW(init_params(std::vector<int>{3, 0, 2}, 1), Error);
  EXPECT_THROW(init_params(std::vector<int>{-1, 2}, 1), Error);
}

TEST(Forward, ZeroParamsGiveZeroOutput) {
  MlpParams p = init_params(std::vector<int>{3, 8, 8, 2}, 1);
  set_zero(p);
  const Vector out = forward(p, Vector(Vector::Constant(3, 0.7)));
  EXPECT_TRUE(out.isZero(0.0));
}

TEST(Forward, AffineIdentitySum) {
  MlpParams p = init_params(std::vector<int>{2, 1}, 1);
  p.weights[0] << 1.0, 1.0;
  p.biases[0] << 0.0;
  const Vector out = forward(p, Vector{{0.3, 0.7}});
  ASSERT_EQ(out.size(), 1);
  EXPECT_DOUBLE_EQ(out[0], 1.0);
}

TEST(Forward, MatchesScalarOracle) {
  Rng rng(11);
  for (int draw = 0; draw < 20; ++draw) {
    const std::vector<int> sizes{test::uniform_int(rng, 1, 6), test::uniform_int(rng, 1, 9),
                                 test::uniform_int(rng, 1, 9), test::uniform_int(rng, 1, 4)};
    MlpParams p = init_params(sizes, rng());
    test::jitter(p, rng);
    const Vector x = test::random_matrix(rng, sizes[0], 1);
    const Vector got = forward(p, x);
    const Vector want = oracle_forward(p, x);
    EXPECT_LT((got - want).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Forward, BatchColumnsMatchSingleSamples) {
  Rng rng(12);
  MlpParams p = init_params(std::vector<int>{5, 40, 40, 3}, 3);
  const Matrix x = test::random_matrix(rng, 5, 70);
  const Matrix y = forward(p, x);
  for (Eigen::Index c = 0; c < x.cols(); ++c)
    EXPECT_LT((y.col(c) - oracle_forward(p, x.col(c))).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Forward, TraceReplaysOutput) {
  Rng rng(13);
  MlpParams p = init_params(std::vector<int>{4, 6, 6, 2}, 3);
  const Matrix x = test::random_matrix(rng, 4, 9);
  ForwardTrace trace;
  const Matrix y = forward(p, x, &trace);
  ASSERT_EQ(trace.activations.size(), 4u);
  ASSERT_EQ(trace.pre_activations.size(), 3u);
  EXPECT_EQ(trace.activations[0], x);
  EXPECT_EQ(trace.output(), y);
  EXPECT_EQ(forward(p, x), y);
}

TEST(Forward, RejectsDimensionMismatch) {
  MlpParams p = init_params(std::vector<int>{4, 6, 2}, 3);
  try {
    forward(p, Vector(Vector::Zero(3)));
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::dimension_mismatch);
  }
}

TEST(Forward, ReferenceAgreesWithProduction) {
  Rng rng(14);
  MlpParams p = init_params(std::vector<int>{7, 64, 64, 3}, 3);
  const Matrix x = test::random_matrix(rng, 7, 100);
  ForwardTrace t1;
  ForwardTrace t2;
  const Matrix a = forward(p, x, &t1);
  const Matrix b = reference::forward(p, x, &t2);
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-12);

  const Matrix g = test::random_matrix(rng, 3, 100);
  MlpParams ga = zeros_like(p);
  MlpParams gb = zeros_like(p);
  Matrix ia;
  Matrix ib;
  backward(p, t1, g, ga, &ia);
  reference::backward(p, t2, g, gb, &ib);
  EXPECT_LT((ia - ib).cwiseAbs().maxCoeff(), 1e-11);
  for (int l = 0; l < p.num_layers(); ++l) {
    EXPECT_LT((ga.weights[l] - gb.weights[l]).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((ga.biases[l] - gb.biases[l]).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Backward, ZeroOutputGradGivesZeroGradients) {
  Rng rng(15);
  MlpParams p = init_params(std::vector<int>{3, 5, 2}, 3);
  const Matrix x = test::random_matrix(rng, 3, 4);
  ForwardTrace trace;
  forward(p, x, &trace);
  MlpParams g = zeros_like(p);
  Matrix in_grad;
  backward(p, trace, Matrix::Zero(2, 4), g, &in_grad);
  for (int l = 0; l < p.num_layers(); ++l) {
    EXPECT_TRUE(g.weights[l].isZero(0.0));
    EXPECT_TRUE(g.biases[l].isZero(0.0));
  }
  EXPECT_TRUE(in_grad.isZero(0.0));
}

TEST(Backward, LinearLayerInputGradIsTransposeProduct) {
  Rng rng(16);
  MlpParams p = init_params(std::vector<int>{4, 3}, 5);
  const Matrix x = test::random_matrix(rng, 4, 1);
  ForwardTrace trace;
  forward(p, x, &trace);
  const Matrix g = test::random_matrix(rng, 3, 1);
  MlpParams grads = zeros_like(p);
  Matrix in_grad;
  backward(p, trace, g, grads, &in_grad);
  EXPECT_LT((in_grad - p.weights[0].transpose() * g).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Backward, AccumulatesIntoGradients) {
  Rng rng(17);
  MlpParams p = init_params(std::vector<int>{3, 4, 2}, 5);
  const Matrix x = test::random_matrix(rng, 3, 2);
  ForwardTrace trace;
  forward(p, x, &trace);
  const Matrix g = test::random_matrix(rng, 2, 2);
  MlpParams once = zeros_like(p);
  backward(p, trace, g, once);
  MlpParams twice = zeros_like(p);
  backward(p, trace, g, twice);
  backward(p, trace, g, twice);
  for (int l = 0; l < p.num_layers(); ++l)
    EXPECT_LT((twice.weights[l] - 2.0 * once.weights[l]).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Backward, RejectsMismatchedTrace) {
  Rng rng(18);
  MlpParams p = init_params(std::vector<int>{3, 4, 2}, 5);
  MlpParams q = init_params(std::vector<int>{3, 4, 4, 2}, 5);
  ForwardTrace trace;
  forward(p, test::random_matrix(rng, 3, 2), &trace);
  MlpParams g = zeros_like(q);
  EXPECT_THROW(backward(q, trace, Matrix::Zero(2, 2), g), Error);
  MlpParams gp = zeros_like(p);
  EXPECT_THROW(backward(p, trace, Matrix::Zero(3, 2), gp), Error);
}

// Objective (output . output_grad) summed over the batch, against central
// differences, on 100 random shapes / parameters / inputs.
TEST(Backward, MatchesFiniteDifferencesOverRandomDraws) {
  Rng rng(19);
  double worst = 0.0;
  std::size_t checked = 0;
  for (int draw = 0; draw < 100; ++draw) {
    std::vector<int> sizes{test::uniform_int(rng, 1, 5)};
    const int hidden = test::uniform_int(rng, 0, 3);
    for (int h = 0; h < hidden; ++h) sizes.push_back(test::uniform_int(rng, 1, 6));
    sizes.push_back(test::uniform_int(rng, 1, 4));
    MlpParams p = init_params(sizes, rng(), draw % 5 == 0);
    test::jitter(p, rng, 0.5);
    Matrix x = test::random_matrix(rng, sizes.front(), test::uniform_int(rng, 1, 4));
    const Matrix og = test::random_matrix(rng, sizes.back(), x.cols());

    ForwardTrace trace;
    forward(p, x, &trace);
    MlpParams grads = zeros_like(p);
    Matrix in_grad;
    backward(p, trace, og, grads, &in_grad);

    std::vector<double*> params;
    std::vector<double> analytic;
    test::collect(p, params);
    test::collect_values(grads, analytic);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      params.push_back(x.data() + i);
      analytic.push_back(in_grad.data()[i]);
    }
    const auto r = test::check_gradients(params, analytic, [&] {
      return (forward(p, x).array() * og.array()).sum();
    });
    worst = std::max(worst, r.max_rel_error);
    checked += r.checked;
  }
  EXPECT_LT(worst, 1e-4) << "over " << checked << " entries";
}

TEST(Softmax, UniformForEqualLogits) {
  const Vector p = softmax(Vector::Zero(4));
  for (int i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(p[i], 0.25);
}

TEST(Softmax, LargeLogitsDoNotOverflow) {
  const Vector p = softmax(Vector{{1000.0, 0.0}});
  EXPECT_TRUE(p.allFinite());
  EXPECT_NEAR(p[0], 1.0, 1e-300);
  EXPECT_GE(p[1], 0.0);
  EXPECT_LT(p[1], 1e-300);
}

TEST(Softmax, MatchesDirectEvaluation) {
  const Vector p = softmax(Vector{{1.0, 2.0, 3.0}});
  const double z = std::exp(-2.0) + std::exp(-1.0) + 1.0;
  EXPECT_NEAR(p[0], std::exp(-2.0) / z, 1e-15);
  EXPECT_NEAR(p[1], std::exp(-1.0) / z, 1e-15);
  EXPECT_NEAR(p[2], 1.0 / z, 1e-15);
}

TEST(Softmax, RejectsNonFinite) {
  EXPECT_THROW(softmax(Vector{{1.0, std::nan("")}}), Error);
  EXPECT_THROW(softmax(Vector{{INFINITY, 0.0}}), Error);
  EXPECT_THROW(softmax(Vector{}), Error);
}

TEST(Softmax, SimplexAndArgmaxProperty) {
  Rng rng(20);
  for (int draw = 0; draw < 200; ++draw) {
    const int n = test::uniform_int(rng, 1, 9);
    const Vector logits = test::random_matrix(rng, n, 1, 8.0);
    const Vector p = softmax(logits);
    EXPECT_NEAR(p.sum(), 1.0, 1e-9);
    EXPECT_GT(p.minCoeff(), 0.0);
    if (n > 1) {
      EXPECT_LT(p.maxCoeff(), 1.0);
    }
    Eigen::Index a = 0;
    Eigen::Index b = 0;
    logits.maxCoeff(&a);
    p.maxCoeff(&b);
    EXPECT_EQ(a, b);
  }
}

TEST(Softmax, BackwardMatchesFiniteDifferences) {
  Rng rng(21);
  for (int draw = 0; draw < 100; ++draw) {
    const int n = test::uniform_int(rng, 1, 6);
    Matrix logits = test::random_matrix(rng, n, 2, 3.0);
    const Matrix w = test::random_matrix(rng, n, 2);
    const Matrix grad = softmax_backward(softmax_columns(logits), w);
    std::vector<double*> params;
    std::vector<double> analytic;
    for (Eigen::Index i = 0; i < logits.size(); ++i) {
      params.push_back(logits.data() + i);
      analytic.push_back(grad.data()[i]);
    }
    const auto r = test::check_gradients(params, analytic, [&] {
      return (softmax_columns(logits).array() * w.array()).sum();
    });
    EXPECT_LT(r.max_rel_error, 1e-4);
  }
}

TEST(Adam, ZeroGradientsLeaveParametersUnchanged) {
  MlpParams p = init_params(std::vector<int>{3, 4, 2}, 1);
  const MlpParams before = p;
  AdamState s = AdamState::for_params(p);
  adam_step(p, zeros_like(p), s, AdamOptions{});
  EXPECT_EQ(p, before);
  EXPECT_EQ(s.step, 1);
}

TEST(Adam, FirstStepMovesByLearningRateAgainstSign) {
  Rng rng(22);
  MlpParams p = init_params(std::vector<int>{3, 4, 2}, 1);
  const MlpParams before = p;
  MlpParams g = zeros_like(p);
  for_each_parameter(g, [&](double& v) { v = test::uniform(rng, -2.0, 2.0); });
  AdamOptions opt;
  AdamState s = AdamState::for_params(p);
  adam_step(p, g, s, opt);
  std::vector<double> gv;
  std::vector<double> pv;
  std::vector<double> bv;
  test::collect_values(g, gv);
  test::collect_values(p, pv);
  test::collect_values(before, bv);
  for (std::size_t i = 0; i < gv.size(); ++i) {
    // m_hat = g, v_hat = g^2, so the step is lr * g / (|g| + eps).
    const double expected = -opt.learning_rate * gv[i] / (std::abs(gv[i]) + opt.eps);
    EXPECT_NEAR(pv[i] - bv[i], expected, 1e-15);
    EXPECT_LE(std::abs(pv[i] - bv[i]), opt.learning_rate);
    if (gv[i] != 0.0) {
      EXPECT_EQ(std::signbit(pv[i] - bv[i]), !std::signbit(gv[i]));
    }
  }
}

TEST(Adam, MomentsFollowRecurrence) {
  MlpParams p = init_params(std::vector<int>{2, 2}, 1);
  MlpParams g = zeros_like(p);
  g.weights[0] << 0.5, -1.0, 2.0, 0.0;
  g.biases[0] << -0.25, 3.0;
  AdamOptions opt;
  opt.learning_rate = 0.01;
  AdamState s = AdamState::for_params(p);
  const MlpParams p0 = p;
  adam_step(p, g, s, opt);
  adam_step(p, g, s, opt);
  EXPECT_EQ(s.step, 2);

  std::vector<double> gv;
  std::vector<double> mv;
  std::vector<double> vv;
  std::vector<double> p0v;
  std::vector<double> p2v;
  test::collect_values(g, gv);
  test::collect_values(s.first_moment, mv);
  test::collect_values(s.second_moment, vv);
  test::collect_values(p0, p0v);
  test::collect_values(p, p2v);
  const double b1 = opt.beta1;
  const double b2 = opt.beta2;
  for (std::size_t i = 0; i < gv.size(); ++i) {
    const double m1 = (1 - b1) * gv[i];
    const double v1 = (1 - b2) * gv[i] * gv[i];
    const double m2 = b1 * m1 + (1 - b1) * gv[i];
    const double v2 = b2 * v1 + (1 - b2) * gv[i] * gv[i];
    EXPECT_NEAR(mv[i], m2, 1e-15);
    EXPECT_NEAR(vv[i], v2, 1e-15);
    const double step1 = opt.learning_rate * (m1 / (1 - b1)) / (std::sqrt(v1 / (1 - b2)) + opt.eps);
    const double step2 = opt.learning_rate * (m2 / (1 - b1 * b1)) /
                         (std::sqrt(v2 / (1 - b2 * b2)) + opt.eps);
    EXPECT_NEAR(p2v[i], p0v[i] - step1 - step2, 1e-14);
  }
}

TEST(Adam, RejectsNonFiniteAndMismatchedGradients) {
  MlpParams p = init_params(std::vector<int>{2, 3, 1}, 1);
  AdamState s = AdamState::for_params(p);
  MlpParams g = zeros_like(p);
  g.weights[0](0, 0) = std::nan("");
  EXPECT_THROW(adam_step(p, g, s, AdamOptions{}), Error);
  const MlpParams other = zeros_like(init_params(std::vector<int>{2, 4, 1}, 1));
  EXPECT_THROW(adam_step(p, other, s, AdamOptions{}), Error);
}

}  // namespace
}  // namespace maps
