#include "sdss/dense.hpp"

#include <algorithm>
#include <limits>
#include <random>

#include <Eigen/Eigenvalues>

namespace sdss {

Matrix glorot_init(Index rows, Index cols, std::uint64_t seed) {
  if (rows <= 0 || cols <= 0) {
    throw ShapeError("glorot_init: dimensions must be positive, got " + shape_str(rows, cols));
  }
  const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-a, a);
  Matrix w(rows, cols);
  for (Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
  return w;
}

namespace {

Matrix seed_plus_plus(const Matrix& X, Index k, std::mt19937_64& rng) {
  const Index n = X.rows();
  Matrix centroids(k, X.cols());
  std::vector<Index> chosen;
  std::uniform_int_distribution<Index> pick(0, n - 1);
  chosen.push_back(pick(rng));
  centroids.row(0) = X.row(chosen[0]);

  Vector d2(n);
  for (Index i = 0; i < n; ++i) d2[i] = (X.row(i) - centroids.row(0)).squaredNorm();

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (Index c = 1; c < k; ++c) {
    const double total = d2.sum();
    Index next = -1;
    if (total > 0.0) {
      double r = unit(rng) * total;
      for (Index i = 0; i < n; ++i) {
        r -= d2[i];
        if (r <= 0.0 && d2[i] > 0.0) {
          next = i;
          break;
        }
      }
      if (next < 0) {
        // rounding left r slightly positive; take the last candidate
        for (Index i = n - 1; i >= 0; --i) {
          if (d2[i] > 0.0) {
            next = i;
            break;
          }
        }
      }
    } else {
      // all remaining points coincide with a centroid
      std::vector<Index> free;
      for (Index i = 0; i < n; ++i) {
        if (std::find(chosen.begin(), chosen.end(), i) == chosen.end()) free.push_back(i);
      }
      std::uniform_int_distribution<size_t> pf(0, free.size() - 1);
      next = free[pf(rng)];
    }
    chosen.push_back(next);
    centroids.row(c) = X.row(next);
    for (Index i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], (X.row(i) - centroids.row(c)).squaredNorm());
    }
  }
  return centroids;
}

// Assigns every point to its nearest centroid (ties to the lower index).
// Returns inertia; sets `changed` when any assignment moved.
double assign(const Matrix& X, const Matrix& centroids, IndexList& labels, Vector& dist,
              bool& changed) {
  changed = false;
  double inertia = 0.0;
  for (Index i = 0; i < X.rows(); ++i) {
    Index best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Index c = 0; c < centroids.rows(); ++c) {
      const double d = (X.row(i) - centroids.row(c)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    if (labels[i] != best) changed = true;
    labels[i] = best;
    dist[i] = best_d;
    inertia += best_d;
  }
  return inertia;
}

void update(const Matrix& X, Matrix& centroids, const IndexList& labels, Vector dist) {
  const Index k = centroids.rows();
  Matrix sums = Matrix::Zero(k, X.cols());
  std::vector<Index> counts(k, 0);
  for (Index i = 0; i < X.rows(); ++i) {
    sums.row(labels[i]) += X.row(i);
    ++counts[labels[i]];
  }
  for (Index c = 0; c < k; ++c) {
    if (counts[c] > 0) {
      centroids.row(c) = sums.row(c) / static_cast<double>(counts[c]);
      continue;
    }
    Index far = 0;
    dist.maxCoeff(&far);
    centroids.row(c) = X.row(far);
    dist[far] = -1.0;
  }
}

// Single-point transfers on a Lloyd fixed point: moves a point to another
// cluster whenever that lowers the inertia once both centroids shift
// (Hartigan's rule). Lloyd cannot make these moves, and they often separate
// its local optima from the global one. Leaves centroids at the exact
// cluster means; returns whether anything moved.
bool transfer(const Matrix& X, Matrix& centroids, IndexList& labels) {
  const Index k = centroids.rows();
  std::vector<double> counts(k, 0.0);
  for (Index l : labels) counts[l] += 1.0;
  bool moved_any = false;
  for (bool moved = true; moved;) {
    moved = false;
    for (Index i = 0; i < X.rows(); ++i) {
      const Index from = labels[i];
      const double na = counts[from];
      if (na < 2.0) continue;
      const double remove = na / (na - 1.0) * (X.row(i) - centroids.row(from)).squaredNorm();
      const double slack = 1e-12 * (1.0 + remove);
      Index to = -1;
      double best = remove - slack;
      for (Index b = 0; b < k; ++b) {
        if (b == from) continue;
        const double add =
            counts[b] / (counts[b] + 1.0) * (X.row(i) - centroids.row(b)).squaredNorm();
        if (add < best) {
          best = add;
          to = b;
        }
      }
      if (to < 0) continue;
      centroids.row(from) = (na * centroids.row(from) - X.row(i)) / (na - 1.0);
      centroids.row(to) = (counts[to] * centroids.row(to) + X.row(i)) / (counts[to] + 1.0);
      counts[from] -= 1.0;
      counts[to] += 1.0;
      labels[i] = to;
      moved = moved_any = true;
    }
  }
  if (moved_any) {
    Matrix sums = Matrix::Zero(k, X.cols());
    for (Index i = 0; i < X.rows(); ++i) sums.row(labels[i]) += X.row(i);
    for (Index c = 0; c < k; ++c) {
      if (counts[c] > 0.0) centroids.row(c) = sums.row(c) / counts[c];
    }
  }
  return moved_any;
}

}  // namespace

KMeansResult kmeans(const Matrix& X, Index k, const KMeansOptions& opts) {
  const Index n = X.rows();
  if (k < 1 || k > n) {
    throw std::invalid_argument("kmeans: need 1 <= k <= n, got k=" + std::to_string(k) +
                                ", n=" + std::to_string(n));
  }
  if (opts.restarts < 1 || opts.max_iter < 1) {
    throw std::invalid_argument("kmeans: restarts and max_iter must be positive");
  }

  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (Index r = 0; r < opts.restarts; ++r) {
    std::mt19937_64 rng(derive_seed(opts.seed, static_cast<std::uint64_t>(r)));
    Matrix centroids = seed_plus_plus(X, k, rng);
    IndexList labels(n, -1);
    Vector dist(n);
    std::vector<double> trace;
    bool changed = true;
    double inertia = 0.0;
    Index it = 0;
    do {
      for (; it < opts.max_iter; ++it) {
        inertia = assign(X, centroids, labels, dist, changed);
        trace.push_back(inertia);
        if (!changed) break;
        update(X, centroids, labels, dist);
      }
      if (changed) {  // iteration budget ran out
        inertia = assign(X, centroids, labels, dist, changed);
        trace.push_back(inertia);
        break;
      }
    } while (transfer(X, centroids, labels));
    if (inertia < best.inertia) {
      best.assignments = std::move(labels);
      best.centroids = std::move(centroids);
      best.inertia = inertia;
      best.inertia_trace = std::move(trace);
    }
  }
  return best;
}

PcaModel pca_fit(const Matrix& X, Index k) {
  const Index n = X.rows();
  const Index f = X.cols();
  if (k < 1 || k > std::min(n, f)) {
    throw std::invalid_argument("pca_fit: need 1 <= k <= min(n, f), got k=" + std::to_string(k));
  }
  PcaModel model;
  model.mean = X.colwise().mean().transpose();
  const Matrix centered = X.rowwise() - model.mean.transpose();
  const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / denom;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("pca_fit: eigendecomposition failed");
  }
  model.components.resize(k, f);
  model.explained_variance.resize(k);
  for (Index c = 0; c < k; ++c) {
    const Index src = f - 1 - c;  // eigenvalues come back ascending
    Vector v = solver.eigenvectors().col(src);
    Index pivot = 0;
    v.cwiseAbs().maxCoeff(&pivot);
    if (v[pivot] < 0) v = -v;
    model.components.row(c) = v.transpose();
    model.explained_variance[c] = std::max(0.0, solver.eigenvalues()[src]);
  }
  return model;
}

Matrix pca_transform(const PcaModel& model, const Matrix& X) {
  if (X.cols() != model.mean.size()) {
    throw ShapeError("pca_transform: expected " + std::to_string(model.mean.size()) +
                     " columns, got " + std::to_string(X.cols()));
  }
  Matrix codes(X.rows(), model.components.rows());
  codes.noalias() = (X.rowwise() - model.mean.transpose()) * model.components.transpose();
  return codes;
}

Matrix pca_inverse(const PcaModel& model, const Matrix& codes) {
  if (codes.cols() != model.components.rows()) {
    throw ShapeError("pca_inverse: expected " + std::to_string(model.components.rows()) +
                     " columns, got " + std::to_string(codes.cols()));
  }
  Matrix out(codes.rows(), model.components.cols());
  out.noalias() = codes * model.components;
  out.rowwise() += model.mean.transpose();
  return out;
}

}  // namespace sdss
