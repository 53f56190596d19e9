#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ftgcl/error.hpp"

namespace ftgcl {

using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;
using NodeId = std::size_t;
using Edge = std::pair<NodeId, NodeId>;

// What Graph::from_edges discarded while normalizing its input.
struct BuildReport {
  std::size_t duplicate_edges = 0;
  std::size_t self_loops = 0;
};

// Unweighted graph stored as sorted, duplicate-free in/out neighbor lists.
// Self-loops are never stored. An undirected graph keeps both orientations of
// every edge, so in_neighbors(v) == out_neighbors(v).
class Graph {
 public:
  Graph() = default;

  static Graph from_edges(std::size_t n, std::span<const Edge> edges, bool directed,
                          BuildReport* report = nullptr) {
    Graph g;
    g.n_ = n;
    g.directed_ = directed;
    g.in_.assign(n, {});
    g.out_.assign(n, {});
    BuildReport rep;
    for (const auto& [u, v] : edges) {
      if (u >= n || v >= n) {
        throw InvalidArgument("edge (" + std::to_string(u) + "," + std::to_string(v) +
                              ") out of range for " + std::to_string(n) + " nodes");
      }
      if (u == v) {
        ++rep.self_loops;
        continue;
      }
      g.out_[u].push_back(v);
      g.in_[v].push_back(u);
      if (!directed) {
        g.out_[v].push_back(u);
        g.in_[u].push_back(v);
      }
    }
    std::size_t stored = 0;
    for (auto* lists : {&g.in_, &g.out_}) {
      for (auto& l : *lists) {
        std::sort(l.begin(), l.end());
        l.erase(std::unique(l.begin(), l.end()), l.end());
      }
    }
    for (const auto& l : g.out_) stored += l.size();
    const std::size_t accepted = edges.size() - rep.self_loops;
    const std::size_t kept = directed ? stored : stored / 2;
    rep.duplicate_edges = accepted - kept;
    if (report) *report = rep;
    return g;
  }

  std::size_t num_nodes() const { return n_; }
  bool directed() const { return directed_; }

  // Undirected edges are counted once.
  std::size_t num_edges() const {
    std::size_t s = 0;
    for (const auto& l : out_) s += l.size();
    return directed_ ? s : s / 2;
  }

  std::span<const NodeId> in_neighbors(NodeId v) const { return in_.at(v); }
  std::span<const NodeId> out_neighbors(NodeId v) const { return out_.at(v); }

  bool has_edge(NodeId u, NodeId v) const {
    const auto& l = out_.at(u);
    return std::binary_search(l.begin(), l.end(), v);
  }

  // Directed: every (u,v). Undirected: each edge once as (u,v) with u < v.
  std::vector<Edge> edges() const {
    std::vector<Edge> e;
    for (NodeId u = 0; u < n_; ++u) {
      for (NodeId v : out_[u]) {
        if (directed_ || u < v) e.emplace_back(u, v);
      }
    }
    return e;
  }

  // Sorted union of in- and out-neighbors.
  std::vector<NodeId> undirected_neighbors(NodeId v) const {
    if (!directed_) return out_.at(v);
    std::vector<NodeId> u;
    std::set_union(in_[v].begin(), in_[v].end(), out_[v].begin(), out_[v].end(),
                   std::back_inserter(u));
    return u;
  }

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  std::size_t n_ = 0;
  bool directed_ = false;
  std::vector<std::vector<NodeId>> in_;
  std::vector<std::vector<NodeId>> out_;
};

// Node-induced subgraph. nodes[a] is the host id of local node a.
struct Subgraph {
  std::vector<NodeId> nodes;
  Graph local;
};

inline Subgraph induced_subgraph(const Graph& g, std::vector<NodeId> nodes) {
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  std::vector<Edge> local_edges;
  for (std::size_t a = 0; a < nodes.size(); ++a) {
    for (NodeId w : g.out_neighbors(nodes[a])) {
      auto it = std::lower_bound(nodes.begin(), nodes.end(), w);
      if (it == nodes.end() || *it != w) continue;
      auto b = static_cast<NodeId>(it - nodes.begin());
      if (g.directed() || a < b) local_edges.emplace_back(a, b);
    }
  }
  Subgraph s;
  s.local = Graph::from_edges(nodes.size(), local_edges, g.directed());
  s.nodes = std::move(nodes);
  return s;
}

struct Dataset {
  Graph graph;
  Matrix features;
  std::optional<std::vector<int>> labels;
  std::map<std::string, std::vector<NodeId>> splits;

  std::size_t num_nodes() const { return graph.num_nodes(); }

  std::size_t num_classes() const {
    if (!labels || labels->empty()) return 0;
    return static_cast<std::size_t>(*std::max_element(labels->begin(), labels->end())) + 1;
  }

  // Throws SchemaError on any broken invariant.
  void validate() const {
    const auto n = graph.num_nodes();
    if (static_cast<std::size_t>(features.rows()) != n) {
      throw SchemaError("feature matrix has " + std::to_string(features.rows()) +
                        " rows but graph has " + std::to_string(n) + " nodes");
    }
    if (labels) {
      if (labels->size() != n) {
        throw SchemaError("labels has " + std::to_string(labels->size()) + " entries, expected " +
                          std::to_string(n));
      }
      for (int y : *labels) {
        if (y < 0) throw SchemaError("negative label " + std::to_string(y));
      }
    }
    std::vector<char> seen(n, 0);
    for (const auto& [name, idx] : splits) {
      for (NodeId i : idx) {
        if (i >= n) throw SchemaError("split '" + name + "' index " + std::to_string(i) + " out of range");
        if (seen[i]) throw SchemaError("node " + std::to_string(i) + " appears in more than one split slot");
        seen[i] = 1;
      }
    }
  }
};

// ---------------------------------------------------------------------------
// Generators

inline Graph path_graph(std::size_t n) {
  std::vector<Edge> e;
  for (NodeId i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
  return Graph::from_edges(n, e, false);
}

inline Graph star_graph(std::size_t leaves) {
  std::vector<Edge> e;
  for (NodeId i = 1; i <= leaves; ++i) e.emplace_back(0, i);
  return Graph::from_edges(leaves + 1, e, false);
}

inline Graph complete_graph(std::size_t n) {
  std::vector<Edge> e;
  for (NodeId i = 0; i < n; ++i)
    for (NodeId j = i + 1; j < n; ++j) e.emplace_back(i, j);
  return Graph::from_edges(n, e, false);
}

inline Graph erdos_renyi(std::size_t n, double p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(p);
  std::vector<Edge> e;
  for (NodeId i = 0; i < n; ++i)
    for (NodeId j = i + 1; j < n; ++j)
      if (coin(rng)) e.emplace_back(i, j);
  return Graph::from_edges(n, e, false);
}

// Two m1-cliques joined through a path of m2 bridge nodes. Nodes [0, m1) form
// the first clique, [m1, m1+m2) the bridge, the rest the second clique.
inline Graph barbell(std::size_t m1, std::size_t m2) {
  if (m1 < 3) throw InvalidArgument("barbell: clique size must be at least 3");
  const std::size_t n = 2 * m1 + m2;
  std::vector<Edge> e;
  auto clique = [&](NodeId base) {
    for (NodeId i = 0; i < m1; ++i)
      for (NodeId j = i + 1; j < m1; ++j) e.emplace_back(base + i, base + j);
  };
  clique(0);
  clique(m1 + m2);
  NodeId prev = m1 - 1;
  for (NodeId b = m1; b < m1 + m2; ++b) {
    e.emplace_back(prev, b);
    prev = b;
  }
  e.emplace_back(prev, m1 + m2);
  return Graph::from_edges(n, e, false);
}

// Assortative stochastic block model with one-hot class centroids plus
// Gaussian noise as features. Node i belongs to class i / per_class.
inline Dataset planted_partition(std::size_t classes, std::size_t per_class, double p_in,
                                 double p_out, std::size_t feat_dim, double noise_sd,
                                 std::uint64_t seed) {
  detail::require(classes >= 1 && per_class >= 1, "planted_partition: empty partition");
  detail::require(p_out >= 0.0 && p_in <= 1.0, "planted_partition: probabilities must lie in [0,1]");
  detail::require(p_in >= p_out, "planted_partition: p_in must be >= p_out");
  detail::require(feat_dim >= classes, "planted_partition: feat_dim must be >= classes");
  detail::require(noise_sd >= 0.0, "planted_partition: noise_sd must be non-negative");

  const std::size_t n = classes * per_class;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<int> labels(n);
  for (NodeId i = 0; i < n; ++i) labels[i] = static_cast<int>(i / per_class);

  std::vector<Edge> e;
  for (NodeId i = 0; i < n; ++i) {
    for (NodeId j = i + 1; j < n; ++j) {
      const double p = labels[i] == labels[j] ? p_in : p_out;
      if (unif(rng) < p) e.emplace_back(i, j);
    }
  }

  Matrix x = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(feat_dim));
  std::normal_distribution<double> noise(0.0, 1.0);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    x(i, labels[static_cast<std::size_t>(i)]) = 1.0;
    if (noise_sd > 0.0) {
      for (Eigen::Index f = 0; f < x.cols(); ++f) x(i, f) += noise_sd * noise(rng);
    }
  }

  Dataset d;
  d.graph = Graph::from_edges(n, e, false);
  d.features = std::move(x);
  d.labels = std::move(labels);
  return d;
}

}  // namespace ftgcl
