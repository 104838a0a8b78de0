#include "sdss/pretext.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace sdss {

std::string_view to_string(PretextKind kind) {
  switch (kind) {
    case PretextKind::Degree: return "degree";
    case PretextKind::Clustering: return "clustering";
    case PretextKind::Partitioning: return "partitioning";
    case PretextKind::Completion: return "completion";
  }
  return "unknown";
}

PretextKind parse_pretext_kind(std::string_view name) {
  for (auto kind : {PretextKind::Degree, PretextKind::Clustering, PretextKind::Partitioning,
                    PretextKind::Completion}) {
    if (name == to_string(kind)) return kind;
  }
  throw ConfigError("unknown pretext kind '" + std::string(name) +
                    "' (expected degree, clustering, partitioning or completion)");
}

Index PretextTask::num_nodes() const {
  return is_classification() ? static_cast<Index>(class_targets.size())
                             : regression_targets.rows();
}

PretextTask make_degree_task(const Graph& g) {
  PretextTask task;
  task.kind = PretextKind::Degree;
  task.type = TaskType::Regression;
  task.output_dim = 1;
  task.regression_targets = degrees(g);
  return task;
}

PretextTask make_clustering_task(const Matrix& X, Index k, std::uint64_t seed, Index restarts) {
  KMeansOptions opts;
  opts.seed = seed;
  opts.restarts = restarts;
  PretextTask task;
  task.kind = PretextKind::Clustering;
  task.type = TaskType::Classification;
  task.output_dim = k;
  task.class_targets = kmeans(X, k, opts).assignments;
  return task;
}

PretextTask make_partition_task(const Graph& g, Index k, double epsilon, std::uint64_t seed) {
  PretextTask task;
  task.kind = PretextKind::Partitioning;
  task.type = TaskType::Classification;
  task.output_dim = k;
  task.class_targets = balanced_partition(g, k, epsilon, seed).part;
  return task;
}

PretextTask make_completion_task(const Matrix& X, double mask_ratio, Index pca_dim,
                                 std::uint64_t seed) {
  if (!(mask_ratio > 0.0 && mask_ratio < 1.0)) {
    throw std::invalid_argument("completion task: mask_ratio must lie in (0, 1)");
  }
  const Index n = X.rows();
  const Index masked = static_cast<Index>(std::lround(mask_ratio * static_cast<double>(n)));
  if (masked < 1) {
    throw std::invalid_argument("completion task: mask_ratio " + std::to_string(mask_ratio) +
                                " masks no node out of " + std::to_string(n));
  }
  const PcaModel pca = pca_fit(X, pca_dim);

  IndexList order(n);
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(masked);
  std::sort(order.begin(), order.end());

  Matrix masked_x = X;
  for (Index v : order) masked_x.row(v).setZero();

  PretextTask task;
  task.kind = PretextKind::Completion;
  task.type = TaskType::Regression;
  task.output_dim = pca_dim;
  task.regression_targets = pca_transform(pca, X);
  task.input_override = std::move(masked_x);
  task.mask = std::move(order);
  return task;
}

}  // namespace sdss
