#include "maps/kernels.hpp"

#include "maps/error.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>

namespace maps::kernels {
namespace {

Eigen::Index block_count(Eigen::Index n, Eigen::Index block) {
  return (n + block - 1) / block;
}

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr double kParallelWork = 64.0 * 1024.0;

bool worth_parallel(Eigen::Index rows, Eigen::Index inner, Eigen::Index cols) {
  return static_cast<double>(rows) * static_cast<double>(inner) *
             static_cast<double>(cols) >=
         kParallelWork;
}

}  // namespace

int max_threads() { return omp_get_max_threads(); }

void dense_forward(const Matrix& weights, const Vector& bias, const Matrix& in,
                   Matrix& out) {
  require(weights.cols() == in.rows(), ErrorKind::dimension_mismatch,
          "dense_forward: weight columns != input rows");
  require(weights.rows() == bias.size(), ErrorKind::dimension_mismatch,
          "dense_forward: weight rows != bias length");
  const Eigen::Index n = in.cols();
  out.resize(weights.rows(), n);
  const Eigen::Index blocks = block_count(n, kColumnBlock);
#pragma omp parallel for schedule(static) if (worth_parallel(weights.rows(), weights.cols(), n))
  for (Eigen::Index blk = 0; blk < blocks; ++blk) {
    const Eigen::Index c0 = blk * kColumnBlock;
    const Eigen::Index w = std::min(kColumnBlock, n - c0);
    auto dst = out.middleCols(c0, w);
    dst.noalias() = weights * in.middleCols(c0, w);
    dst.colwise() += bias;
  }
}

void dense_backward(const Matrix& weights, const Matrix& in,
                    const Matrix& out_grad, Matrix& weight_grad,
                    Vector& bias_grad, Matrix* in_grad) {
  require(out_grad.rows() == weights.rows() && in.rows() == weights.cols() &&
              out_grad.cols() == in.cols(),
          ErrorKind::dimension_mismatch, "dense_backward: shape mismatch");
  require(weight_grad.rows() == weights.rows() &&
              weight_grad.cols() == weights.cols() &&
              bias_grad.size() == weights.rows(),
          ErrorKind::dimension_mismatch,
          "dense_backward: gradient buffers do not match weights");

  const Eigen::Index rows = weights.rows();
  const Eigen::Index n = in.cols();
  const bool par = worth_parallel(rows, weights.cols(), n);

  // Rows of the weight gradient are independent; each row sums over the batch
  // in the same order regardless of how rows are distributed.
  const Eigen::Index row_blocks = block_count(rows, kRowBlock);
#pragma omp parallel for schedule(static) if (par)
  for (Eigen::Index blk = 0; blk < row_blocks; ++blk) {
    const Eigen::Index r0 = blk * kRowBlock;
    const Eigen::Index h = std::min(kRowBlock, rows - r0);
    weight_grad.middleRows(r0, h).noalias() +=
        out_grad.middleRows(r0, h) * in.transpose();
    bias_grad.segment(r0, h) += out_grad.middleRows(r0, h).rowwise().sum();
  }

  if (in_grad != nullptr) {
    in_grad->resize(weights.cols(), n);
    const Eigen::Index col_blocks = block_count(n, kColumnBlock);
#pragma omp parallel for schedule(static) if (par)
    for (Eigen::Index blk = 0; blk < col_blocks; ++blk) {
      const Eigen::Index c0 = blk * kColumnBlock;
      const Eigen::Index w = std::min(kColumnBlock, n - c0);
      in_grad->middleCols(c0, w).noalias() =
          weights.transpose() * out_grad.middleCols(c0, w);
    }
  }
}

void tanh_forward(const Matrix& pre, Matrix& out) {
  out = pre.array().tanh().matrix();
}

void tanh_backward(const Matrix& act, Matrix& grad) {
  grad.array() *= 1.0 - act.array().square();
}

namespace reference {

void dense_forward(const Matrix& weights, const Vector& bias, const Matrix& in,
                   Matrix& out) {
  require(weights.cols() == in.rows() && weights.rows() == bias.size(),
          ErrorKind::dimension_mismatch, "reference::dense_forward: shape");
  out.resize(weights.rows(), in.cols());
  for (Eigen::Index c = 0; c < in.cols(); ++c) {
    for (Eigen::Index r = 0; r < weights.rows(); ++r) {
      double acc = bias(r);
      for (Eigen::Index k = 0; k < weights.cols(); ++k)
        acc += weights(r, k) * in(k, c);
      out(r, c) = acc;
    }
  }
}

void dense_backward(const Matrix& weights, const Matrix& in,
                    const Matrix& out_grad, Matrix& weight_grad,
                    Vector& bias_grad, Matrix* in_grad) {
  require(out_grad.rows() == weights.rows() && in.rows() == weights.cols() &&
              out_grad.cols() == in.cols(),
          ErrorKind::dimension_mismatch, "reference::dense_backward: shape");
  for (Eigen::Index r = 0; r < weights.rows(); ++r) {
    for (Eigen::Index c = 0; c < in.cols(); ++c) {
      const double g = out_grad(r, c);
      bias_grad(r) += g;
      for (Eigen::Index k = 0; k < weights.cols(); ++k)
        weight_grad(r, k) += g * in(k, c);
    }
  }
  if (in_grad != nullptr) {
    in_grad->setZero(weights.cols(), in.cols());
    for (Eigen::Index c = 0; c < in.cols(); ++c)
      for (Eigen::Index r = 0; r < weights.rows(); ++r)
        for (Eigen::Index k = 0; k < weights.cols(); ++k)
          (*in_grad)(k, c) += weights(r, k) * out_grad(r, c);
  }
}

void tanh_forward(const Matrix& pre, Matrix& out) {
  out.resize(pre.rows(), pre.cols());
  for (Eigen::Index i = 0; i < pre.size(); ++i)
    out.data()[i] = std::tanh(pre.data()[i]);
}

void tanh_backward(const Matrix& act, Matrix& grad) {
  for (Eigen::Index i = 0; i < act.size(); ++i) {
    const double a = act.data()[i];
    grad.data()[i] *= 1.0 - a * a;
  }
}

}  // namespace reference
}  // namespace maps::kernels
