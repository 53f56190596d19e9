#pragma once

#include <Eigen/SVD>

#include <algorithm>
#include <cstdint>
#include <deque>
#include <numeric>
#include <random>
#include <vector>

#include "ftgcl/graph.hpp"
#include "ftgcl/wl.hpp"

namespace ftgcl {

using Rng = std::mt19937_64;

// Independent stream for `index`, derived deterministically from `seed`.
inline Rng derive_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

// Union of the nodes visited by `gamma` uniform random walks of `len` steps
// from v, as an induced subgraph. Walks follow out-edges and stop at sinks.
inline Subgraph sample_walk_subgraph(const Graph& g, NodeId v, std::size_t gamma, std::size_t len, Rng& rng) {
  detail::require(v < g.num_nodes(), "sample_walk_subgraph: node out of range");
  detail::require(gamma >= 1 && len >= 1, "sample_walk_subgraph: gamma and len must be >= 1");
  std::vector<NodeId> visited{v};
  for (std::size_t w = 0; w < gamma; ++w) {
    NodeId cur = v;
    for (std::size_t step = 0; step < len; ++step) {
      auto nb = g.out_neighbors(cur);
      if (nb.empty()) break;
      std::uniform_int_distribution<std::size_t> pick(0, nb.size() - 1);
      cur = nb[pick(rng)];
      visited.push_back(cur);
    }
  }
  return induced_subgraph(g, std::move(visited));
}

// Induced subgraph on every node within undirected distance r of v.
inline Subgraph egonet(const Graph& g, NodeId v, std::size_t r) {
  detail::require(v < g.num_nodes(), "egonet: node out of range");
  detail::require(r >= 1, "egonet: radius must be >= 1");
  std::vector<std::size_t> dist(g.num_nodes(), SIZE_MAX);
  std::deque<NodeId> queue{v};
  dist[v] = 0;
  std::vector<NodeId> nodes{v};
  while (!queue.empty()) {
    NodeId u = queue.front();
    queue.pop_front();
    if (dist[u] == r) continue;
    for (NodeId w : g.undirected_neighbors(u)) {
      if (dist[w] != SIZE_MAX) continue;
      dist[w] = dist[u] + 1;
      nodes.push_back(w);
      queue.push_back(w);
    }
  }
  return induced_subgraph(g, std::move(nodes));
}

inline std::vector<WlHistogram> wl_histograms(std::span<const Subgraph> subgraphs, std::size_t t,
                                              WlLabelTable& table) {
  std::vector<WlHistogram> h;
  h.reserve(subgraphs.size());
  for (const auto& s : subgraphs) h.push_back(wl_histogram(s, t, table));
  return h;
}

// Dense kernel matrix between two histogram sets.
inline Matrix wl_kernel_matrix(std::span<const WlHistogram> rows, std::span<const WlHistogram> cols) {
  Matrix k(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j)
      k(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = wl_kernel(rows[i], cols[j]);
  return k;
}

// Exact N x N subtree kernel over a subgraph set.
inline Matrix wl_kernel_matrix(std::span<const Subgraph> subgraphs, std::size_t t) {
  WlLabelTable table;
  auto h = wl_histograms(subgraphs, t, table);
  return wl_kernel_matrix(h, h);
}

struct StructuralEmbedding {
  Matrix coords;                 // N x m local-topology coordinates
  std::vector<std::size_t> basis;  // indices of the sampled basis subgraphs
  std::size_t wl_iters = 0;
  std::size_t m = 0;
};

// Nystrom factorization of the WL kernel: K ~= R R^T with R = K_nm * U S^{-1/2} V^T.
// Singular values below eps * max are dropped from the inverse square root.
inline StructuralEmbedding nystrom_embed(std::span<const Subgraph> subgraphs, std::size_t m, std::size_t t,
                                         double eps, Rng& rng) {
  const std::size_t n = subgraphs.size();
  detail::require(m >= 1, "nystrom_embed: m must be >= 1");
  if (m > n) {
    throw InvalidArgument("nystrom_embed: m=" + std::to_string(m) + " exceeds subgraph count " + std::to_string(n));
  }

  // Phase one builds every histogram (and the shared table); phase two only reads.
  WlLabelTable table;
  auto hist = wl_histograms(subgraphs, t, table);

  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<std::size_t> basis;
  basis.reserve(m);
  std::sample(all.begin(), all.end(), std::back_inserter(basis), m, rng);

  std::vector<WlHistogram> basis_hist;
  basis_hist.reserve(m);
  for (auto b : basis) basis_hist.push_back(hist[b]);

  const Matrix k_nm = wl_kernel_matrix(hist, basis_hist);
  const Matrix k_mm = wl_kernel_matrix(basis_hist, basis_hist);

  Eigen::JacobiSVD<Matrix> svd(k_mm, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::VectorXd s = svd.singularValues();
  const double cutoff = eps * (s.size() ? s.maxCoeff() : 0.0);
  Eigen::VectorXd inv_sqrt(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) inv_sqrt(i) = s(i) > cutoff ? 1.0 / std::sqrt(s(i)) : 0.0;
  const Matrix normalizer = svd.matrixU() * inv_sqrt.asDiagonal() * svd.matrixV().transpose();

  StructuralEmbedding out;
  out.coords = k_nm * normalizer;
  out.basis = std::move(basis);
  out.wl_iters = t;
  out.m = m;
  return out;
}

enum class SubgraphExtractor { RandomWalk, Egonet };

struct TopologyConfig {
  SubgraphExtractor extractor = SubgraphExtractor::RandomWalk;
  std::size_t gamma = 30;
  std::size_t walk_len = 10;
  std::size_t radius = 1;
  std::size_t basis = 200;
  std::size_t wl_iters = 3;
  double eps = 1e-10;
  std::uint64_t seed = 0;
};

inline std::vector<Subgraph> extract_subgraphs(const Graph& g, const TopologyConfig& cfg) {
  std::vector<Subgraph> subs;
  subs.reserve(g.num_nodes());
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    if (cfg.extractor == SubgraphExtractor::Egonet) {
      subs.push_back(egonet(g, v, cfg.radius));
    } else {
      Rng rng = derive_rng(cfg.seed, v + 1);
      subs.push_back(sample_walk_subgraph(g, v, cfg.gamma, cfg.walk_len, rng));
    }
  }
  return subs;
}

// Full local-topology pipeline for a graph. The basis count is capped at N.
inline StructuralEmbedding structural_embedding(const Graph& g, const TopologyConfig& cfg) {
  auto subs = extract_subgraphs(g, cfg);
  Rng rng = derive_rng(cfg.seed, 0);
  return nystrom_embed(subs, std::min(cfg.basis, subs.size()), cfg.wl_iters, cfg.eps, rng);
}

}  // namespace ftgcl
