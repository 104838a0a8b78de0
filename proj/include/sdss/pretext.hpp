#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "sdss/dense.hpp"
#include "sdss/graph.hpp"

namespace sdss {

enum class PretextKind { Degree, Clustering, Partitioning, Completion };
enum class TaskType { Regression, Classification };

std::string_view to_string(PretextKind kind);
PretextKind parse_pretext_kind(std::string_view name);

/// Self-supervision labels generated from the data itself.
struct PretextTask {
  PretextKind kind = PretextKind::Degree;
  TaskType type = TaskType::Regression;
  Index output_dim = 1;
  /// n x output_dim, regression tasks only.
  Matrix regression_targets;
  /// Per-node class in [0, output_dim), classification tasks only.
  IndexList class_targets;
  /// Replacement input features (same shape as X), completion only.
  std::optional<Matrix> input_override;
  /// Sorted masked node ids, completion only.
  IndexList mask;

  bool is_classification() const { return type == TaskType::Classification; }
  Index num_nodes() const;
};

PretextTask make_degree_task(const Graph& g);
PretextTask make_clustering_task(const Matrix& X, Index k, std::uint64_t seed,
                                 Index restarts = 10);
PretextTask make_partition_task(const Graph& g, Index k, double epsilon, std::uint64_t seed);
PretextTask make_completion_task(const Matrix& X, double mask_ratio, Index pca_dim,
                                 std::uint64_t seed);

struct PartitionResult {
  IndexList part;
  Index cut = 0;
  /// Edge cut after the initial growth, then after every accepted
  /// refinement move.
  std::vector<Index> cut_trace;
};

/// K-way partition with max part size floor((1 + epsilon) n / K): parts grow
/// by BFS from K spread-out roots, then single-node moves and pairwise swaps
/// that strictly reduce the cut are applied until none remain.
PartitionResult balanced_partition(const Graph& g, Index k, double epsilon, std::uint64_t seed);

/// K * max_i |C_i| / n.
double partition_imbalance(std::span<const Index> part, Index k);

}  // namespace sdss
