#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "sdss/types.hpp"

namespace sdss {

// ---------------------------------------------------------------------------
// Elementwise and row-wise kernels. These take any Eigen expression and
// return a plain matrix of the same scalar type.
// ---------------------------------------------------------------------------

template <typename DA, typename DB>
auto matmul(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + shape_str(a.rows(), a.cols()) + " * " +
                     shape_str(b.rows(), b.cols()));
  }
  MatrixT<typename DA::Scalar> out(a.rows(), b.cols());
  out.noalias() = a * b;
  return out;
}

template <typename DA, typename DB>
auto add(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b) {
  require_same_shape(a, b, "add");
  return MatrixT<typename DA::Scalar>(a + b);
}

template <typename DA, typename DB>
auto hadamard(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b) {
  require_same_shape(a, b, "hadamard");
  return MatrixT<typename DA::Scalar>(a.cwiseProduct(b));
}

template <typename D>
auto transpose(const Eigen::MatrixBase<D>& a) {
  return MatrixT<typename D::Scalar>(a.transpose());
}

template <typename D>
auto relu(const Eigen::MatrixBase<D>& x) {
  return MatrixT<typename D::Scalar>(x.cwiseMax(typename D::Scalar(0)));
}

/// Gradient of ReLU: passes `grad` where the pre-activation is strictly
/// positive, zero elsewhere.
template <typename DG, typename DP>
auto relu_backward(const Eigen::MatrixBase<DG>& grad, const Eigen::MatrixBase<DP>& pre) {
  require_same_shape(grad, pre, "relu_backward");
  using S = typename DG::Scalar;
  return MatrixT<S>((pre.array() > S(0)).select(grad, S(0)));
}

/// Row-wise softmax of logits / temperature, with row-max subtraction.
template <typename D>
auto softmax_rows(const Eigen::MatrixBase<D>& logits, typename D::Scalar temperature = 1) {
  using S = typename D::Scalar;
  if (!(temperature > S(0))) {
    throw std::invalid_argument("softmax_rows: temperature must be positive");
  }
  MatrixT<S> out = logits / temperature;
  for (Index i = 0; i < out.rows(); ++i) {
    auto row = out.row(i);
    row.array() -= row.maxCoeff();
    row = row.array().exp().matrix();
    row /= row.sum();
  }
  return out;
}

/// Row-wise log-softmax of logits / temperature.
template <typename D>
auto log_softmax_rows(const Eigen::MatrixBase<D>& logits, typename D::Scalar temperature = 1) {
  using S = typename D::Scalar;
  if (!(temperature > S(0))) {
    throw std::invalid_argument("log_softmax_rows: temperature must be positive");
  }
  MatrixT<S> out = logits / temperature;
  for (Index i = 0; i < out.rows(); ++i) {
    auto row = out.row(i);
    row.array() -= row.maxCoeff();
    row.array() -= std::log(row.array().exp().sum());
  }
  return out;
}

/// Smooth mean absolute error of a residual:
/// 0.5 r^2 for |r| < 1, |r| - 0.5 otherwise.
template <typename S>
S smooth_l1(S r) {
  const S a = std::abs(r);
  return a < S(1) ? S(0.5) * r * r : a - S(0.5);
}

/// Derivative of smooth_l1 with respect to the residual.
template <typename S>
S smooth_l1_grad(S r) {
  if (std::abs(r) < S(1)) return r;
  return r > S(0) ? S(1) : S(-1);
}

// ---------------------------------------------------------------------------
// Initialization, clustering, and dimensionality reduction.
// ---------------------------------------------------------------------------

/// Glorot-uniform initialization: U(-a, a) with a = sqrt(6 / (rows + cols)).
Matrix glorot_init(Index rows, Index cols, std::uint64_t seed);

struct KMeansOptions {
  Index restarts = 10;
  Index max_iter = 300;
  std::uint64_t seed = 0;
};

struct KMeansResult {
  IndexList assignments;
  Matrix centroids;
  double inertia = 0.0;
  /// Inertia after every assignment step of the winning restart.
  std::vector<double> inertia_trace;
};

/// Lloyd's algorithm with k-means++ seeding, alternated with single-point
/// transfer passes until neither changes anything; keeps the restart with the
/// lowest inertia. Empty clusters are re-seeded at the point farthest from
/// its current centroid.
KMeansResult kmeans(const Matrix& X, Index k, const KMeansOptions& opts = {});

struct PcaModel {
  Vector mean;
  Matrix components;  // k x f, orthonormal rows
  Vector explained_variance;
};

/// Top-k principal directions of the centered data via a full
/// eigendecomposition of the f x f covariance.
PcaModel pca_fit(const Matrix& X, Index k);
Matrix pca_transform(const PcaModel& model, const Matrix& X);
Matrix pca_inverse(const PcaModel& model, const Matrix& codes);

}  // namespace sdss
