#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "ftgcl/graph.hpp"

namespace ftgcl {

using LabelId = std::int64_t;

// Compression table for Weisfeiler-Lehman relabeling. One table must be shared
// by every subgraph of a run so that label ids mean the same thing across
// histograms.
class WlLabelTable {
 public:
  WlLabelTable() : id_(next_id()) {}

  // Tables are identity-bearing; copying would let two histograms claim the
  // same table while their ids diverge.
  WlLabelTable(const WlLabelTable&) = delete;
  WlLabelTable& operator=(const WlLabelTable&) = delete;
  WlLabelTable(WlLabelTable&&) = default;
  WlLabelTable& operator=(WlLabelTable&&) = default;

  std::uint64_t id() const { return id_; }
  std::size_t size() const { return table_.size(); }

  // Label shared by every node before refinement.
  LabelId initial_label() { return compress(-1, {}); }

  // `neighbor_labels` must be sorted.
  LabelId compress(LabelId own, std::vector<LabelId> neighbor_labels) {
    auto [it, inserted] =
        table_.try_emplace({own, std::move(neighbor_labels)}, static_cast<LabelId>(table_.size()));
    return it->second;
  }

 private:
  static std::uint64_t next_id() {
    static std::atomic<std::uint64_t> counter{1};
    return counter++;
  }

  std::map<std::pair<LabelId, std::vector<LabelId>>, LabelId> table_;
  std::uint64_t id_;
};

// Sparse label-count vector accumulated over WL iterations 0..t.
struct WlHistogram {
  std::uint64_t table_id = 0;
  std::size_t node_count = 0;
  std::size_t iterations = 0;
  std::vector<std::pair<LabelId, std::size_t>> counts;  // sorted by label, counts > 0

  std::size_t total() const {
    std::size_t s = 0;
    for (const auto& [l, c] : counts) s += c;
    return s;
  }
};

// Refines node labels t times over the subgraph, treating every edge as
// undirected, and counts labels from every iteration.
inline WlHistogram wl_histogram(const Subgraph& s, std::size_t t, WlLabelTable& table) {
  const Graph& g = s.local;
  const std::size_t n = g.num_nodes();
  std::vector<std::vector<NodeId>> nbrs(n);
  for (NodeId v = 0; v < n; ++v) nbrs[v] = g.undirected_neighbors(v);

  std::map<LabelId, std::size_t> hist;
  std::vector<LabelId> labels(n, table.initial_label());
  for (LabelId l : labels) ++hist[l];

  std::vector<LabelId> next(n);
  std::vector<LabelId> multiset;
  for (std::size_t it = 0; it < t; ++it) {
    for (NodeId v = 0; v < n; ++v) {
      multiset.clear();
      for (NodeId w : nbrs[v]) multiset.push_back(labels[w]);
      std::sort(multiset.begin(), multiset.end());
      next[v] = table.compress(labels[v], multiset);
    }
    labels.swap(next);
    for (LabelId l : labels) ++hist[l];
  }

  WlHistogram h;
  h.table_id = table.id();
  h.node_count = n;
  h.iterations = t;
  h.counts.assign(hist.begin(), hist.end());
  return h;
}

// Subtree kernel value: dot product of the two count vectors.
inline double wl_kernel(const WlHistogram& a, const WlHistogram& b) {
  if (a.table_id != b.table_id) {
    throw InvalidArgument("wl_kernel: histograms come from different compression tables");
  }
  double dot = 0.0;
  auto ia = a.counts.begin();
  auto ib = b.counts.begin();
  while (ia != a.counts.end() && ib != b.counts.end()) {
    if (ia->first < ib->first) {
      ++ia;
    } else if (ib->first < ia->first) {
      ++ib;
    } else {
      dot += static_cast<double>(ia->second) * static_cast<double>(ib->second);
      ++ia;
      ++ib;
    }
  }
  return dot;
}

}  // namespace ftgcl
