#include <algorithm>
#include <cassert>
#include <deque>
#include <limits>
#include <numeric>
#include <random>

#include "sdss/pretext.hpp"

namespace sdss {

namespace {

constexpr Index kMaxPasses = 64;

double imbalance(Index max_size, Index k, Index n) {
  return static_cast<double>(k * max_size) / static_cast<double>(n);
}

// Roots: one uniform pick, then repeatedly the node farthest (in hops) from
// all chosen roots; unreachable nodes count as infinitely far.
IndexList pick_roots(const Graph& g, Index k, std::mt19937_64& rng) {
  const Index n = g.num_nodes();
  constexpr Index kInf = std::numeric_limits<Index>::max();
  IndexList roots;
  std::vector<Index> dist(n, kInf);
  std::uniform_int_distribution<Index> first(0, n - 1);
  Index next = first(rng);
  for (Index r = 0; r < k; ++r) {
    roots.push_back(next);
    std::deque<Index> queue{next};
    dist[next] = 0;
    while (!queue.empty()) {
      Index u = queue.front();
      queue.pop_front();
      for (Index w : g.neighbors(u)) {
        if (dist[u] + 1 < dist[w]) {
          dist[w] = dist[u] + 1;
          queue.push_back(w);
        }
      }
    }
    Index far = -1;
    IndexList ties;
    for (Index v = 0; v < n; ++v) {
      if (dist[v] == 0) continue;
      if (dist[v] > far) {
        far = dist[v];
        ties.clear();
      }
      if (dist[v] == far) ties.push_back(v);
    }
    if (ties.empty()) break;
    std::uniform_int_distribution<size_t> pick(0, ties.size() - 1);
    next = ties[pick(rng)];
  }
  return roots;
}

class Refiner {
 public:
  Refiner(const Graph& g, Index k, Index cap, IndexList& part)
      : g_(g), k_(k), cap_(cap), part_(part), size_(k, 0), conn_(g.num_nodes() * k, 0) {
    for (Index v = 0; v < g.num_nodes(); ++v) {
      ++size_[part_[v]];
      for (Index w : g.neighbors(v)) ++conn(v, part_[w]);
    }
  }

  // Applies improving moves until a fixed point or the pass limit.
  void run(Index& cut, std::vector<Index>& trace) {
    for (Index pass = 0; pass < kMaxPasses; ++pass) {
      bool improved = false;
      improved |= single_moves(cut, trace);
      improved |= swaps(cut, trace);
      if (!improved) break;
    }
  }

 private:
  Index& conn(Index v, Index p) { return conn_[v * k_ + p]; }
  Index gain(Index v, Index to) { return conn(v, to) - conn(v, part_[v]); }

  void move(Index v, Index to) {
    const Index from = part_[v];
    for (Index w : g_.neighbors(v)) {
      --conn(w, from);
      ++conn(w, to);
    }
    --size_[from];
    ++size_[to];
    part_[v] = to;
  }

  void record(Index& cut, std::vector<Index>& trace, Index gain) {
    assert(gain > 0);
    cut -= gain;
    trace.push_back(cut);
  }

  bool single_moves(Index& cut, std::vector<Index>& trace) {
    bool improved = false;
    for (Index v = 0; v < g_.num_nodes(); ++v) {
      const Index from = part_[v];
      if (size_[from] <= 1) continue;
      Index best_to = -1;
      Index best_gain = 0;
      for (Index to = 0; to < k_; ++to) {
        if (to == from || size_[to] >= cap_) continue;
        const Index gv = gain(v, to);
        if (gv > best_gain) {
          best_gain = gv;
          best_to = to;
        }
      }
      if (best_to >= 0) {
        move(v, best_to);
        record(cut, trace, best_gain);
        improved = true;
      }
    }
    return improved;
  }

  // One best balance-neutral exchange per part pair.
  bool swaps(Index& cut, std::vector<Index>& trace) {
    bool improved = false;
    for (Index a = 0; a < k_; ++a) {
      for (Index b = a + 1; b < k_; ++b) {
        auto side_a = candidates(a, b);
        auto side_b = candidates(b, a);
        Index best = 0;
        Index best_u = -1;
        Index best_v = -1;
        for (auto [gu, u] : side_a) {
          if (side_b.empty() || gu + side_b.front().first <= best) break;
          for (auto [gv, v] : side_b) {
            if (gu + gv <= best) break;
            const Index total = gu + gv - 2 * static_cast<Index>(g_.has_edge(u, v));
            if (total > best) {
              best = total;
              best_u = u;
              best_v = v;
            }
          }
        }
        if (best > 0) {
          move(best_u, b);
          move(best_v, a);
          record(cut, trace, best);
          improved = true;
        }
      }
    }
    return improved;
  }

  // Nodes of `from`, sorted by gain toward `to` (descending, then by id).
  std::vector<std::pair<Index, Index>> candidates(Index from, Index to) {
    std::vector<std::pair<Index, Index>> out;
    for (Index v = 0; v < g_.num_nodes(); ++v) {
      if (part_[v] == from) out.emplace_back(gain(v, to), v);
    }
    std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
      return x.first != y.first ? x.first > y.first : x.second < y.second;
    });
    return out;
  }

  const Graph& g_;
  Index k_;
  Index cap_;
  IndexList& part_;
  std::vector<Index> size_;
  std::vector<Index> conn_;
};

}  // namespace

double partition_imbalance(std::span<const Index> part, Index k) {
  if (part.empty() || k < 1) throw std::invalid_argument("partition_imbalance: empty input");
  std::vector<Index> size(k, 0);
  for (Index p : part) {
    if (p < 0 || p >= k) throw std::invalid_argument("partition_imbalance: label out of range");
    ++size[p];
  }
  return imbalance(*std::max_element(size.begin(), size.end()), k,
                   static_cast<Index>(part.size()));
}

PartitionResult balanced_partition(const Graph& g, Index k, double epsilon, std::uint64_t seed) {
  const Index n = g.num_nodes();
  if (k < 1 || k > n) {
    throw std::invalid_argument("balanced_partition: need 1 <= K <= n, got K=" +
                                std::to_string(k) + ", n=" + std::to_string(n));
  }
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw std::invalid_argument("balanced_partition: epsilon must lie in (0, 1)");
  }
  Index cap = static_cast<Index>(std::floor((1.0 + epsilon) * static_cast<double>(n) /
                                            static_cast<double>(k)));
  while (cap > 0 && imbalance(cap, k, n) > 1.0 + epsilon) --cap;
  const Index target = (n + k - 1) / k;
  if (cap < target) {
    throw std::invalid_argument("balanced_partition: no " + std::to_string(k) +
                                "-way partition of " + std::to_string(n) +
                                " nodes satisfies epsilon=" + std::to_string(epsilon));
  }

  std::mt19937_64 rng(seed);
  IndexList part(n, -1);
  std::vector<Index> size(k, 0);
  std::vector<std::deque<Index>> frontier(k);
  std::vector<Index> scan(n, 0);  // next neighbor slot to inspect per node
  Index assigned = 0;
  auto assign = [&](Index v, Index p) {
    part[v] = p;
    ++size[p];
    frontier[p].push_back(v);
    ++assigned;
  };
  {
    IndexList roots = pick_roots(g, k, rng);
    for (Index p = 0; p < k; ++p) assign(roots[p], p);
  }
  auto grow = [&](Index p) {
    auto& q = frontier[p];
    while (!q.empty()) {
      const Index u = q.front();
      auto nb = g.neighbors(u);
      while (scan[u] < static_cast<Index>(nb.size())) {
        const Index w = nb[scan[u]++];
        if (part[w] < 0) {
          assign(w, p);
          return true;
        }
      }
      q.pop_front();
    }
    return false;
  };
  Index next_free = 0;
  while (assigned < n) {
    bool progress = false;
    for (Index p = 0; p < k && assigned < n; ++p) {
      if (size[p] < target && grow(p)) progress = true;
    }
    if (progress) continue;
    while (part[next_free] >= 0) ++next_free;
    Index smallest = 0;
    for (Index p = 1; p < k; ++p) {
      if (size[p] < size[smallest]) smallest = p;
    }
    assign(next_free, smallest);
  }

  PartitionResult result;
  result.cut = edge_cut(g, part);
  result.cut_trace.push_back(result.cut);
  Refiner(g, k, cap, part).run(result.cut, result.cut_trace);
  assert(result.cut == edge_cut(g, part));
  result.part = std::move(part);
  return result;
}

}  // namespace sdss
