#include "sdss/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sdss {

Graph::Graph(Index n, std::span<const Edge> edge_list) : n_(n) {
  if (n <= 0) {
    throw DataError("graph must have at least one node");
  }
  edges_.reserve(edge_list.size());
  for (auto [u, v] : edge_list) {
    if (u < 0 || v < 0 || u >= n || v >= n) {
      throw DataError("edge (" + std::to_string(u) + ", " + std::to_string(v) +
                      ") out of range for n=" + std::to_string(n));
    }
    if (u == v) continue;
    edges_.emplace_back(std::min(u, v), std::max(u, v));
  }
  std::sort(edges_.begin(), edges_.end());
  edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());

  row_ptr_.assign(static_cast<size_t>(n) + 1, 0);
  for (auto [u, v] : edges_) {
    ++row_ptr_[u + 1];
    ++row_ptr_[v + 1];
  }
  for (Index i = 0; i < n; ++i) row_ptr_[i + 1] += row_ptr_[i];
  col_idx_.resize(static_cast<size_t>(row_ptr_[n]));
  std::vector<Index> fill(row_ptr_.begin(), row_ptr_.end() - 1);
  for (auto [u, v] : edges_) {
    col_idx_[fill[u]++] = v;
    col_idx_[fill[v]++] = u;
  }
  for (Index i = 0; i < n; ++i) {
    std::sort(col_idx_.begin() + row_ptr_[i], col_idx_.begin() + row_ptr_[i + 1]);
  }
}

bool Graph::has_edge(Index u, Index v) const {
  auto nb = neighbors(u);
  return std::binary_search(nb.begin(), nb.end(), v);
}

Graph build_graph(Index n, std::span<const Edge> edge_list) { return Graph(n, edge_list); }

NormalizedAdjacency normalize(const Graph& g) {
  const Index n = g.num_nodes();
  Vector inv_sqrt(n);
  for (Index i = 0; i < n; ++i) {
    inv_sqrt[i] = 1.0 / std::sqrt(static_cast<double>(g.degree(i) + 1));
  }
  NormalizedAdjacency::Storage m(n, n);
  Eigen::VectorXi row_nnz(n);
  for (Index i = 0; i < n; ++i) row_nnz[i] = static_cast<int>(g.degree(i) + 1);
  m.reserve(row_nnz);
  for (Index i = 0; i < n; ++i) {
    bool diag_done = false;
    for (Index j : g.neighbors(i)) {
      if (!diag_done && j > i) {
        m.insert(i, i) = inv_sqrt[i] * inv_sqrt[i];
        diag_done = true;
      }
      m.insert(i, j) = inv_sqrt[i] * inv_sqrt[j];
    }
    if (!diag_done) m.insert(i, i) = inv_sqrt[i] * inv_sqrt[i];
  }
  m.makeCompressed();
  return NormalizedAdjacency(std::move(m));
}

Matrix spmm(const NormalizedAdjacency& L, const Matrix& H) {
  if (L.cols() != H.rows()) {
    throw ShapeError("spmm: " + shape_str(L.rows(), L.cols()) + " * " +
                     shape_str(H.rows(), H.cols()));
  }
  const auto& s = L.storage();
  const int* outer = s.outerIndexPtr();
  const int* inner = s.innerIndexPtr();
  const double* values = s.valuePtr();
  Matrix out = Matrix::Zero(L.rows(), H.cols());
  for (Index i = 0; i < L.rows(); ++i) {
    for (int k = outer[i]; k < outer[i + 1]; ++k) {
      out.row(i).noalias() += values[k] * H.row(inner[k]);
    }
  }
  return out;
}

Vector degrees(const Graph& g) {
  Vector d(g.num_nodes());
  for (Index i = 0; i < g.num_nodes(); ++i) d[i] = static_cast<double>(g.degree(i));
  return d;
}

Index edge_cut(const Graph& g, std::span<const Index> part) {
  if (static_cast<Index>(part.size()) != g.num_nodes()) {
    throw ShapeError("edge_cut: label count does not match node count");
  }
  Index cut = 0;
  for (auto [u, v] : g.edges()) cut += part[u] != part[v];
  return cut;
}

}  // namespace sdss
