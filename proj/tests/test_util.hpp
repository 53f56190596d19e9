#pragma once

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <numeric>
#include <string>
#include <vector>

#include <unistd.h>

#include "ftgcl/graph.hpp"

namespace test {

namespace fs = std::filesystem;

// Scratch directory removed on scope exit.
struct TempDir {
  fs::path path;

  TempDir() {
    static std::atomic<int> counter{0};
    path = fs::temp_directory_path() /
           ("ftgcl_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

// Brute-force isomorphism test over all vertex permutations. Only for the
// handful-of-nodes subgraphs used as oracles.
inline bool isomorphic(const ftgcl::Graph& a, const ftgcl::Graph& b) {
  const auto n = a.num_nodes();
  if (n != b.num_nodes() || a.num_edges() != b.num_edges()) return false;
  std::vector<std::size_t> da(n), db(n);
  for (std::size_t v = 0; v < n; ++v) {
    da[v] = a.undirected_neighbors(v).size();
    db[v] = b.undirected_neighbors(v).size();
  }
  auto sa = da, sb = db;
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  if (sa != sb) return false;
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  do {
    bool ok = true;
    for (std::size_t u = 0; u < n && ok; ++u) {
      if (da[u] != db[perm[u]]) ok = false;
      for (std::size_t v = 0; v < n && ok; ++v)
        if (a.has_edge(u, v) != b.has_edge(perm[u], perm[v])) ok = false;
    }
    if (ok) return true;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return false;
}

// Partition of nodes into classes whose r-hop egonets are pairwise isomorphic.
template <typename EgonetFn>
std::vector<int> egonet_role_classes(std::size_t n, EgonetFn egonet_of) {
  std::vector<int> role(n, -1);
  std::vector<ftgcl::Graph> reps;
  for (std::size_t v = 0; v < n; ++v) {
    const ftgcl::Graph g = egonet_of(v);
    for (std::size_t r = 0; r < reps.size(); ++r) {
      if (isomorphic(g, reps[r])) {
        role[v] = static_cast<int>(r);
        break;
      }
    }
    if (role[v] < 0) {
      role[v] = static_cast<int>(reps.size());
      reps.push_back(g);
    }
  }
  return role;
}

}  // namespace test
