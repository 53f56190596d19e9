#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "ftgcl/graph.hpp"
#include "ftgcl/io.hpp"
#include "ftgcl/topo_embed.hpp"

namespace ftgcl {

enum class Space { Feature, Topology };

inline const char* to_string(Space s) { return s == Space::Feature ? "feature" : "topology"; }

struct Neighbor {
  NodeId node;
  double similarity;
  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

// Per-node top-k_max cosine neighbors, most similar first.
struct NeighborRanking {
  Space space = Space::Feature;
  std::size_t k_max = 0;
  std::vector<std::vector<Neighbor>> lists;

  std::size_t num_nodes() const { return lists.size(); }
};

// A masked proximity graph: each node keeps out-edges to its first k ranked
// neighbors. Node features are not copied; the view refers to the caller's.
struct View {
  Graph graph;
  std::reference_wrapper<const Matrix> features;
  std::size_t k;
  Space space;
};

// Exact brute-force cosine kNN. All-zero rows get empty lists and score 0 as
// candidates for other nodes. Ties go to the smaller node index.
inline NeighborRanking rank_neighbors(const Matrix& vectors, std::size_t k_max, Space space = Space::Feature) {
  const auto n = static_cast<std::size_t>(vectors.rows());
  detail::require(k_max >= 1, "rank_neighbors: k_max must be >= 1");
  detail::require(n >= 2, "rank_neighbors: need at least two vectors");
  if (!vectors.allFinite()) throw InvalidArgument("rank_neighbors: non-finite vector entry");

  Matrix unit = vectors;
  std::vector<char> zero(n, 0);
  for (Eigen::Index i = 0; i < unit.rows(); ++i) {
    const double norm = unit.row(i).norm();
    if (norm == 0.0) {
      zero[static_cast<std::size_t>(i)] = 1;
    } else {
      unit.row(i) /= norm;
    }
  }

  NeighborRanking r;
  r.space = space;
  r.k_max = k_max;
  r.lists.resize(n);
  const std::size_t keep = std::min(k_max, n - 1);
  constexpr Eigen::Index kBlock = 256;
  std::vector<Neighbor> cand;
  cand.reserve(n);
  auto better = [](const Neighbor& a, const Neighbor& b) {
    return a.similarity > b.similarity || (a.similarity == b.similarity && a.node < b.node);
  };
  for (Eigen::Index start = 0; start < unit.rows(); start += kBlock) {
    const Eigen::Index rows = std::min(kBlock, unit.rows() - start);
    const Matrix sims = unit.middleRows(start, rows) * unit.transpose();
    for (Eigen::Index bi = 0; bi < rows; ++bi) {
      const auto i = static_cast<std::size_t>(start + bi);
      if (zero[i]) continue;
      cand.clear();
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const double s = zero[j] ? 0.0 : std::clamp(sims(bi, static_cast<Eigen::Index>(j)), -1.0, 1.0);
        cand.push_back({j, s});
      }
      std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(keep), cand.end(), better);
      r.lists[i].assign(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(keep));
    }
  }
  return r;
}

inline View materialize_view(const NeighborRanking& ranking, const Matrix& features, std::size_t k) {
  if (k < 1 || k > ranking.k_max) {
    throw InvalidArgument("materialize_view: k=" + std::to_string(k) + " outside [1, " +
                          std::to_string(ranking.k_max) + "]");
  }
  std::vector<Edge> edges;
  for (NodeId i = 0; i < ranking.lists.size(); ++i) {
    const auto& l = ranking.lists[i];
    for (std::size_t r = 0; r < std::min(k, l.size()); ++r) edges.emplace_back(i, l[r].node);
  }
  return View{Graph::from_edges(ranking.lists.size(), edges, true), std::cref(features), k, ranking.space};
}

inline std::size_t sample_k(std::size_t k_max, Rng& rng) {
  return std::uniform_int_distribution<std::size_t>(1, k_max)(rng);
}

// Odd steps draw from the feature ranking, even steps from the topology
// ranking; k is uniform on {1..k_max} of the chosen ranking.
inline View sample_view(const NeighborRanking& fpg, const NeighborRanking& tpg, const Matrix& features,
                        std::size_t step, Rng& rng) {
  detail::require(step >= 1, "sample_view: step must be >= 1");
  const auto& ranking = step % 2 == 1 ? fpg : tpg;
  return materialize_view(ranking, features, sample_k(ranking.k_max, rng));
}

// fpg.tsv / tpg.tsv: "node<TAB>neighbor<TAB>similarity" in rank order.
inline void write_ranking_tsv(const fs::path& path, const NeighborRanking& r) {
  auto out = detail::open_output(path);
  for (NodeId i = 0; i < r.lists.size(); ++i)
    for (const auto& nb : r.lists[i]) out << i << '\t' << nb.node << '\t' << detail::format_double(nb.similarity) << '\n';
}

// Reads a ranking dump. Node count comes from the caller since isolated or
// zero-vector nodes have no lines; k_max is the longest list seen.
inline NeighborRanking read_ranking_tsv(const fs::path& path, std::size_t num_nodes, Space space) {
  auto in = detail::open_input(path);
  NeighborRanking r;
  r.space = space;
  r.lists.resize(num_nodes);
  std::string line;
  std::size_t lineno = 0;
  const std::string name = path.filename().string();
  while (std::getline(in, line)) {
    ++lineno;
    auto t = detail::trim(line);
    if (t.empty()) continue;
    const std::string where = name + ":" + std::to_string(lineno);
    const auto a = t.find('\t');
    const auto b = a == std::string_view::npos ? a : t.find('\t', a + 1);
    if (b == std::string_view::npos) throw SchemaError(where + ": expected three tab-separated fields");
    const auto u = detail::parse_number<std::size_t>(t.substr(0, a), where);
    const auto v = detail::parse_number<std::size_t>(t.substr(a + 1, b - a - 1), where);
    const auto s = detail::parse_number<double>(t.substr(b + 1), where);
    if (u >= num_nodes || v >= num_nodes) throw SchemaError(where + ": node index out of range");
    r.lists[u].push_back({v, s});
  }
  for (const auto& l : r.lists) r.k_max = std::max(r.k_max, l.size());
  if (r.k_max == 0) throw SchemaError(name + ": ranking is empty");
  return r;
}

// Keeps only the first k entries of every list.
inline NeighborRanking truncate_ranking(NeighborRanking r, std::size_t k_max) {
  detail::require(k_max >= 1 && k_max <= r.k_max, "truncate_ranking: k_max out of range");
  for (auto& l : r.lists)
    if (l.size() > k_max) l.resize(k_max);
  r.k_max = k_max;
  return r;
}

}  // namespace ftgcl
