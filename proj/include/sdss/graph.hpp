#pragma once

#include <span>
#include <utility>
#include <vector>

#include <Eigen/SparseCore>

#include "sdss/types.hpp"

namespace sdss {

using Edge = std::pair<Index, Index>;

/// Immutable simple undirected graph stored as a symmetric CSR adjacency
/// with sorted neighbor lists. Self-loops and duplicate edges are dropped on
/// construction.
class Graph {
 public:
  Graph(Index n, std::span<const Edge> edge_list);

  Index num_nodes() const { return n_; }
  Index num_edges() const { return static_cast<Index>(edges_.size()); }

  /// Undirected edges with u < v, sorted lexicographically.
  const std::vector<Edge>& edges() const { return edges_; }

  std::span<const Index> neighbors(Index v) const {
    return {col_idx_.data() + row_ptr_[v], col_idx_.data() + row_ptr_[v + 1]};
  }
  Index degree(Index v) const { return row_ptr_[v + 1] - row_ptr_[v]; }
  bool has_edge(Index u, Index v) const;

  const std::vector<Index>& row_ptr() const { return row_ptr_; }
  const std::vector<Index>& col_idx() const { return col_idx_; }

 private:
  Index n_;
  std::vector<Edge> edges_;
  std::vector<Index> row_ptr_;
  std::vector<Index> col_idx_;
};

Graph build_graph(Index n, std::span<const Edge> edge_list);

/// Symmetrically normalized adjacency with self-loops,
/// D^-1/2 (A + I) D^-1/2, stored in compressed row form.
class NormalizedAdjacency {
 public:
  using Storage = Eigen::SparseMatrix<double, Eigen::RowMajor>;

  explicit NormalizedAdjacency(Storage m) : m_(std::move(m)) {}

  Index rows() const { return m_.rows(); }
  Index cols() const { return m_.cols(); }
  Index nonzeros() const { return m_.nonZeros(); }
  const Storage& storage() const { return m_; }
  Matrix to_dense() const { return Matrix(m_); }

 private:
  Storage m_;
};

NormalizedAdjacency normalize(const Graph& g);

/// Sparse-dense product L * H. Each output row accumulates its nonzeros in
/// ascending column order.
Matrix spmm(const NormalizedAdjacency& L, const Matrix& H);

/// Raw (unaugmented) degrees d_i = sum_j A_ij.
Vector degrees(const Graph& g);

/// Number of edges whose endpoints carry different labels.
Index edge_cut(const Graph& g, std::span<const Index> part);

}  // namespace sdss
