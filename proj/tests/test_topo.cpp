#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <map>
#include <numeric>
#include <random>
#include <set>

#include "ftgcl/topo_embed.hpp"
#include "test_util.hpp"

using namespace ftgcl;

namespace {

Subgraph whole(const Graph& g) {
  std::vector<NodeId> all(g.num_nodes());
  std::iota(all.begin(), all.end(), NodeId{0});
  return induced_subgraph(g, all);
}

// One refinement step on an unlabeled graph separates nodes exactly by degree,
// so the t=1 subtree kernel is n_a*n_b + sum_deg count_a(deg)*count_b(deg).
double one_step_kernel_oracle(const Graph& a, const Graph& b) {
  std::map<std::size_t, double> da, db;
  for (NodeId v = 0; v < a.num_nodes(); ++v) da[a.undirected_neighbors(v).size()] += 1;
  for (NodeId v = 0; v < b.num_nodes(); ++v) db[b.undirected_neighbors(v).size()] += 1;
  double k = static_cast<double>(a.num_nodes() * b.num_nodes());
  for (auto [deg, c] : da)
    if (db.count(deg)) k += c * db[deg];
  return k;
}

Graph permuted(const Graph& g, const std::vector<NodeId>& perm) {
  std::vector<Edge> e;
  for (auto [u, v] : g.edges()) e.emplace_back(perm[u], perm[v]);
  return Graph::from_edges(g.num_nodes(), e, g.directed());
}

}  // namespace

TEST(WlHistogram, SingleNodeYieldsOneFreshLabelPerIteration) {
  WlLabelTable table;
  auto h = wl_histogram(whole(Graph::from_edges(1, std::vector<Edge>{}, false)), 2, table);
  ASSERT_EQ(h.counts.size(), 3u);
  for (auto [label, count] : h.counts) EXPECT_EQ(count, 1u);
  EXPECT_EQ(h.total(), 3u);
}

TEST(WlHistogram, TotalCountIsIterationsTimesNodes) {
  WlLabelTable table;
  const Graph g = erdos_renyi(12, 0.3, 1);
  auto h = wl_histogram(whole(g), 4, table);
  EXPECT_EQ(h.total(), 5u * 12u);
  for (auto [l, c] : h.counts) EXPECT_GT(c, 0u);
}

TEST(WlKernel, PathVersusStarMatchesHandRefinement) {
  WlLabelTable table;
  const auto p3 = wl_histogram(whole(path_graph(3)), 1, table);
  const auto s3 = wl_histogram(whole(star_graph(3)), 1, table);
  EXPECT_DOUBLE_EQ(one_step_kernel_oracle(path_graph(3), path_graph(3)), 14.0);
  EXPECT_DOUBLE_EQ(one_step_kernel_oracle(path_graph(3), star_graph(3)), 18.0);
  EXPECT_DOUBLE_EQ(one_step_kernel_oracle(star_graph(3), star_graph(3)), 26.0);
  EXPECT_DOUBLE_EQ(wl_kernel(p3, p3), 14.0);
  EXPECT_DOUBLE_EQ(wl_kernel(p3, s3), 18.0);
  EXPECT_DOUBLE_EQ(wl_kernel(s3, s3), 26.0);
}

TEST(WlKernel, OneStepKernelMatchesDegreeOracleOnRandomGraphs) {
  WlLabelTable table;
  std::vector<Graph> gs;
  for (std::uint64_t s = 0; s < 6; ++s) gs.push_back(erdos_renyi(5 + s, 0.4, s));
  std::vector<WlHistogram> hs;
  for (const auto& g : gs) hs.push_back(wl_histogram(whole(g), 1, table));
  for (std::size_t i = 0; i < gs.size(); ++i)
    for (std::size_t j = 0; j < gs.size(); ++j) EXPECT_DOUBLE_EQ(wl_kernel(hs[i], hs[j]), one_step_kernel_oracle(gs[i], gs[j]));
}

TEST(WlKernel, SelfKernelIsSquaredNorm) {
  WlLabelTable table;
  auto h = wl_histogram(whole(erdos_renyi(9, 0.4, 7)), 3, table);
  double sq = 0.0;
  for (auto [l, c] : h.counts) sq += static_cast<double>(c * c);
  EXPECT_DOUBLE_EQ(wl_kernel(h, h), sq);
}

TEST(WlKernel, DisjointLabelSetsGiveZero) {
  WlLabelTable table;
  WlHistogram a{table.id(), 1, 0, {{0, 2}, {3, 1}}};
  WlHistogram b{table.id(), 1, 0, {{1, 5}, {4, 1}}};
  EXPECT_EQ(wl_kernel(a, b), 0.0);
}

TEST(WlKernel, DifferentTablesRejected) {
  WlLabelTable t1, t2;
  auto a = wl_histogram(whole(path_graph(3)), 1, t1);
  auto b = wl_histogram(whole(path_graph(3)), 1, t2);
  EXPECT_THROW(wl_kernel(a, b), InvalidArgument);
}

TEST(WlHistogram, InvariantUnderNodeRelabeling) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const Graph g = erdos_renyi(10, 0.35, static_cast<std::uint64_t>(trial));
    std::vector<NodeId> perm(10);
    std::iota(perm.begin(), perm.end(), NodeId{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    WlLabelTable table;
    auto a = wl_histogram(whole(g), 3, table);
    auto b = wl_histogram(whole(permuted(g, perm)), 3, table);
    EXPECT_EQ(a.counts, b.counts);
  }
}

TEST(WalkSubgraph, IsolatedNodeIsSingleton) {
  Graph g = Graph::from_edges(3, std::vector<Edge>{{0, 1}}, false);
  Rng rng(1);
  auto s = sample_walk_subgraph(g, 2, 30, 10, rng);
  EXPECT_EQ(s.nodes, std::vector<NodeId>{2});
  EXPECT_EQ(s.local.num_edges(), 0u);
}

TEST(WalkSubgraph, TriangleStaysInsideTriangle) {
  Graph g = complete_graph(3);
  Rng rng(2);
  auto s = sample_walk_subgraph(g, 0, 30, 10, rng);
  for (NodeId v : s.nodes) EXPECT_LT(v, 3u);
  EXPECT_EQ(s.nodes.size(), 3u);  // 30 walks of 10 steps cover K3 almost surely
}

TEST(WalkSubgraph, SingleStepFromPathEnd) {
  // From node 0 of 0-1-2 the only one-step walk reaches 1.
  Rng rng(3);
  auto s = sample_walk_subgraph(path_graph(3), 0, 1, 1, rng);
  EXPECT_EQ(s.nodes, (std::vector<NodeId>{0, 1}));
  EXPECT_EQ(s.local.num_edges(), 1u);
}

TEST(WalkSubgraph, DirectedWalkStopsAtSink) {
  Graph g = Graph::from_edges(3, std::vector<Edge>{{0, 1}, {2, 0}}, true);
  Rng rng(4);
  auto s = sample_walk_subgraph(g, 0, 5, 10, rng);
  EXPECT_EQ(s.nodes, (std::vector<NodeId>{0, 1}));
}

TEST(Egonet, StarCenterCoversStar) {
  auto s = egonet(star_graph(4), 0, 1);
  EXPECT_EQ(s.nodes.size(), 5u);
  EXPECT_EQ(s.local.num_edges(), 4u);
}

TEST(Egonet, PathLeaf) {
  auto s = egonet(path_graph(5), 0, 1);
  EXPECT_EQ(s.nodes, (std::vector<NodeId>{0, 1}));
  EXPECT_EQ(s.local.num_edges(), 1u);
  EXPECT_EQ(egonet(path_graph(5), 0, 2).nodes.size(), 3u);
}

TEST(Egonet, BarbellCliqueMemberSeesItsClique) {
  const Graph g = barbell(6, 2);
  auto s = egonet(g, 0, 1);
  EXPECT_EQ(s.nodes.size(), 6u);
  EXPECT_TRUE(test::isomorphic(s.local, complete_graph(6)));
}

TEST(Nystrom, FullSamplingReproducesKernel) {
  const Graph g = erdos_renyi(18, 0.25, 11);
  std::vector<Subgraph> subs;
  for (NodeId v = 0; v < g.num_nodes(); ++v) subs.push_back(egonet(g, v, 1));
  const Matrix k = wl_kernel_matrix(subs, 2);
  Rng rng(0);
  auto e = nystrom_embed(subs, subs.size(), 2, 1e-10, rng);
  EXPECT_EQ(e.coords.rows(), 18);
  EXPECT_EQ(e.coords.cols(), 18);
  EXPECT_LE((e.coords * e.coords.transpose() - k).norm() / k.norm(), 1e-6);
}

TEST(Nystrom, IsomorphicSubgraphsShareRows) {
  // Nodes 0 and 2 of P3 have isomorphic egonets.
  std::vector<Subgraph> subs;
  const Graph g = path_graph(3);
  for (NodeId v = 0; v < 3; ++v) subs.push_back(egonet(g, v, 1));
  Rng rng(0);
  auto e = nystrom_embed(subs, 2, 2, 1e-10, rng);
  EXPECT_EQ(e.coords.row(0), e.coords.row(2));
}

TEST(Nystrom, BarbellRolesCoincide) {
  const Graph g = barbell(6, 2);
  std::vector<Subgraph> subs;
  for (NodeId v = 0; v < g.num_nodes(); ++v) subs.push_back(egonet(g, v, 1));
  const auto role = test::egonet_role_classes(g.num_nodes(), [&](std::size_t v) { return subs[v].local; });
  EXPECT_EQ(std::set<int>(role.begin(), role.end()).size(), 3u);

  Rng rng(0);
  auto e = nystrom_embed(subs, subs.size(), 2, 1e-10, rng);
  for (NodeId i = 0; i < g.num_nodes(); ++i) {
    for (NodeId j = 0; j < g.num_nodes(); ++j) {
      const auto ri = e.coords.row(static_cast<Index>(i)), rj = e.coords.row(static_cast<Index>(j));
      if (role[i] == role[j]) {
        EXPECT_LE((ri - rj).norm(), 1e-8 * std::max(1.0, ri.norm()));
        EXPECT_NEAR(ri.dot(rj) / (ri.norm() * rj.norm()), 1.0, 1e-9);
      } else {
        EXPECT_GT(1.0 - ri.dot(rj) / (ri.norm() * rj.norm()), 1e-3);
      }
    }
  }
}

TEST(Nystrom, TooManyBasisVectorsRejected) {
  std::vector<Subgraph> subs{egonet(path_graph(3), 0, 1)};
  Rng rng(0);
  EXPECT_THROW(nystrom_embed(subs, 2, 1, 1e-10, rng), InvalidArgument);
}

TEST(Nystrom, DeterministicGivenSeed) {
  const Graph g = erdos_renyi(30, 0.15, 3);
  TopologyConfig cfg;
  cfg.basis = 10;
  cfg.seed = 77;
  auto a = structural_embedding(g, cfg);
  auto b = structural_embedding(g, cfg);
  EXPECT_EQ(a.basis, b.basis);
  EXPECT_EQ(a.coords, b.coords);
  EXPECT_TRUE(a.coords.allFinite());
}

TEST(KernelMatrix, SymmetricPositiveSemidefinite) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Graph g = erdos_renyi(40, 0.1, seed);
    TopologyConfig cfg;
    cfg.seed = seed;
    cfg.gamma = 5;
    cfg.walk_len = 4;
    const auto subs = extract_subgraphs(g, cfg);
    const Matrix k = wl_kernel_matrix(subs, 3);
    EXPECT_EQ(k, k.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(k);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-8 * es.eigenvalues().maxCoeff());
  }
}
