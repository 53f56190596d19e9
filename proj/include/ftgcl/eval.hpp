#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "ftgcl/graph.hpp"
#include "ftgcl/topo_embed.hpp"

namespace ftgcl {

struct ProbeResult {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::size_t iterations = 0;
};

struct ProbeOptions {
  double l2 = 1e-3;
  double step = 0.1;
  double tolerance = 1e-5;
  std::size_t max_iterations = 5000;
};

// Unweighted mean of per-class F1 over classes [0, num_classes). A class with
// no true and no predicted members scores 0.
inline double macro_f1(std::span<const int> truth, std::span<const int> pred, std::size_t num_classes) {
  std::vector<double> tp(num_classes), fp(num_classes), fn(num_classes);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto t = static_cast<std::size_t>(truth[i]), p = static_cast<std::size_t>(pred[i]);
    if (t == p) {
      tp[t] += 1;
    } else {
      fp[p] += 1;
      fn[t] += 1;
    }
  }
  double total = 0.0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    const double denom = 2 * tp[c] + fp[c] + fn[c];
    total += denom > 0 ? 2 * tp[c] / denom : 0.0;
  }
  return num_classes ? total / static_cast<double>(num_classes) : 0.0;
}

// L2-regularized multinomial logistic regression fit by full-batch gradient
// descent. Features are standardized with training-set statistics and scaled
// by 1/sqrt(D) so the fixed step is stable for any embedding width. The L2
// term is applied as a proximal shrink, which keeps large penalties stable.
inline ProbeResult logistic_probe(const Matrix& z, std::span<const int> labels, std::span<const NodeId> train_idx,
                                  std::span<const NodeId> test_idx, const ProbeOptions& opt = {}) {
  const auto n = static_cast<std::size_t>(z.rows());
  detail::require(labels.size() == n, "logistic_probe: one label per row required");
  detail::require(!train_idx.empty() && !test_idx.empty(), "logistic_probe: empty train or test set");
  detail::require(opt.l2 >= 0.0, "logistic_probe: l2 must be non-negative");
  {
    std::set<NodeId> tr(train_idx.begin(), train_idx.end());
    for (NodeId i : test_idx) {
      detail::require(i < n, "logistic_probe: test index out of range");
      detail::require(!tr.count(i), "logistic_probe: train and test overlap");
    }
    for (NodeId i : train_idx) detail::require(i < n, "logistic_probe: train index out of range");
  }
  const auto num_classes = static_cast<Index>(*std::max_element(labels.begin(), labels.end()) + 1);
  std::set<int> train_classes;
  for (NodeId i : train_idx) train_classes.insert(labels[i]);
  if (train_classes.size() < 2) throw InvalidArgument("logistic_probe: training set has a single class");

  const Index dim = z.cols();
  const auto m = static_cast<Index>(train_idx.size());
  Matrix x(m, dim);
  Matrix y = Matrix::Zero(m, num_classes);
  for (Index r = 0; r < m; ++r) {
    x.row(r) = z.row(static_cast<Index>(train_idx[static_cast<std::size_t>(r)]));
    y(r, labels[train_idx[static_cast<std::size_t>(r)]]) = 1.0;
  }
  const Eigen::RowVectorXd mu = x.colwise().mean();
  Eigen::RowVectorXd sd = ((x.rowwise() - mu).colwise().squaredNorm() / static_cast<double>(m)).cwiseSqrt();
  for (Index j = 0; j < dim; ++j) sd(j) = sd(j) > 1e-12 ? sd(j) * std::sqrt(static_cast<double>(dim)) : 1.0;
  auto standardize = [&](const Matrix& a) -> Matrix { return (a.rowwise() - mu).array().rowwise() / sd.array(); };
  x = standardize(x);

  Matrix w = Matrix::Zero(dim, num_classes);
  Eigen::RowVectorXd b = Eigen::RowVectorXd::Zero(num_classes);
  auto softmax_rows = [](Matrix logits) {
    for (Index r = 0; r < logits.rows(); ++r) {
      logits.row(r).array() -= logits.row(r).maxCoeff();
      logits.row(r) = logits.row(r).array().exp();
      logits.row(r) /= logits.row(r).sum();
    }
    return logits;
  };

  ProbeResult res;
  for (; res.iterations < opt.max_iterations; ++res.iterations) {
    const Matrix p = softmax_rows((x * w).rowwise() + b);
    const Matrix resid = (p - y) / static_cast<double>(m);
    const Matrix gw = x.transpose() * resid;
    const Eigen::RowVectorXd gb = resid.colwise().sum();
    const double gnorm = std::sqrt((gw + opt.l2 * w).squaredNorm() + gb.squaredNorm());
    if (gnorm < opt.tolerance) break;
    w = (w - opt.step * gw) / (1.0 + opt.step * opt.l2);
    b -= opt.step * gb;
  }

  std::vector<int> truth, pred;
  for (NodeId i : test_idx) {
    const Matrix xi = standardize(z.row(static_cast<Index>(i)));
    Eigen::RowVectorXd logits = xi * w + b;
    Index arg = 0;
    logits.maxCoeff(&arg);
    truth.push_back(labels[i]);
    pred.push_back(static_cast<int>(arg));
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) correct += truth[i] == pred[i];
  res.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());
  res.macro_f1 = macro_f1(truth, pred, static_cast<std::size_t>(num_classes));
  return res;
}

struct LinkScores {
  double auc = 0.0;
  double ap = 0.0;
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Inner-product decoder score sigmoid(z_u . z_v).
inline double link_score(const Matrix& z, NodeId u, NodeId v) {
  return sigmoid(z.row(static_cast<Index>(u)).dot(z.row(static_cast<Index>(v))));
}

// AUC as the Mann-Whitney statistic (ties count one half) and average
// precision from a descending-score sweep with tied scores as one threshold.
inline LinkScores rank_metrics(std::span<const double> pos, std::span<const double> neg) {
  detail::require(!pos.empty() && !neg.empty(), "rank_metrics: empty positive or negative set");
  struct Item {
    double score;
    bool positive;
  };
  std::vector<Item> all;
  for (double s : pos) all.push_back({s, true});
  for (double s : neg) all.push_back({s, false});
  std::sort(all.begin(), all.end(), [](const Item& a, const Item& b) { return a.score > b.score; });

  // Walk groups of equal score from the top.
  double auc_num = 0.0, ap = 0.0;
  double tp = 0, fp = 0;
  const double np = static_cast<double>(pos.size()), nn = static_cast<double>(neg.size());
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    double gp = 0, gn = 0;
    while (j < all.size() && all[j].score == all[i].score) {
      (all[j].positive ? gp : gn) += 1;
      ++j;
    }
    // Negatives in this group lose to every positive above and tie with the
    // positives beside them.
    auc_num += gn * tp + 0.5 * gn * gp;
    tp += gp;
    fp += gn;
    if (gp > 0) ap += (gp / np) * (tp / (tp + fp));
    i = j;
  }
  return {auc_num / (np * nn), ap};
}

inline LinkScores link_pred_eval(const Matrix& z, std::span<const Edge> pos, std::span<const Edge> neg) {
  if (pos.empty() || neg.empty()) throw InvalidArgument("link_pred_eval: empty positive or negative edge set");
  std::set<Edge> seen(pos.begin(), pos.end());
  for (const auto& e : neg) {
    if (seen.count(e)) throw InvalidArgument("link_pred_eval: an edge is both positive and negative");
  }
  // Ranked by the logit z_u . z_v: sigmoid is strictly monotone, so the metrics
  // are unchanged, and the logit does not saturate into artificial ties.
  auto logit = [&](const Edge& e) {
    return z.row(static_cast<Index>(e.first)).dot(z.row(static_cast<Index>(e.second)));
  };
  std::vector<double> ps, ns;
  for (const auto& e : pos) ps.push_back(logit(e));
  for (const auto& e : neg) ns.push_back(logit(e));
  return rank_metrics(ps, ns);
}

struct EdgeSplit {
  Graph train_graph;
  std::vector<Edge> test_pos;
  std::vector<Edge> test_neg;
};

// Holds out a fraction of edges as positives and draws the same number of
// non-edges (no self pairs) uniformly as negatives.
inline EdgeSplit split_edges(const Graph& g, double test_fraction, std::uint64_t seed) {
  detail::require(test_fraction > 0.0 && test_fraction < 1.0, "split_edges: fraction must be in (0,1)");
  auto edges = g.edges();
  detail::require(!edges.empty(), "split_edges: graph has no edges");
  Rng rng(seed);
  std::shuffle(edges.begin(), edges.end(), rng);
  const auto held = std::max<std::size_t>(1, static_cast<std::size_t>(std::round(test_fraction * static_cast<double>(edges.size()))));
  EdgeSplit s;
  s.test_pos.assign(edges.begin(), edges.begin() + static_cast<std::ptrdiff_t>(held));
  std::vector<Edge> rest(edges.begin() + static_cast<std::ptrdiff_t>(held), edges.end());
  s.train_graph = Graph::from_edges(g.num_nodes(), rest, g.directed());

  const std::size_t n = g.num_nodes();
  const std::size_t max_pairs = g.directed() ? n * (n - 1) : n * (n - 1) / 2;
  detail::require(max_pairs >= edges.size() + held, "split_edges: not enough non-edges for negatives");
  std::set<Edge> chosen;
  std::uniform_int_distribution<NodeId> pick(0, n - 1);
  while (s.test_neg.size() < held) {
    NodeId u = pick(rng), v = pick(rng);
    if (u == v) continue;
    if (!g.directed() && u > v) std::swap(u, v);
    if (g.has_edge(u, v) || !chosen.insert({u, v}).second) continue;
    s.test_neg.emplace_back(u, v);
  }
  return s;
}

// Fraction of edges joining same-label endpoints. Undirected edges count once,
// directed edges once per out-edge.
inline double edge_homophily(const Graph& g, std::span<const int> labels) {
  detail::require(labels.size() == g.num_nodes(), "edge_homophily: one label per node required");
  const auto edges = g.edges();
  if (edges.empty()) throw InvalidArgument("edge_homophily: graph has no edges");
  std::size_t same = 0;
  for (const auto& [u, v] : edges) same += labels[u] == labels[v];
  return static_cast<double>(same) / static_cast<double>(edges.size());
}

// Per-class stratified random split into train/val/test fractions.
inline std::map<std::string, std::vector<NodeId>> random_split(std::span<const int> labels, double train_frac,
                                                               double val_frac, std::uint64_t seed) {
  detail::require(train_frac > 0 && val_frac >= 0 && train_frac + val_frac < 1.0, "random_split: bad fractions");
  std::map<int, std::vector<NodeId>> by_class;
  for (NodeId i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  Rng rng(seed);
  std::map<std::string, std::vector<NodeId>> out{{"train", {}}, {"val", {}}, {"test", {}}};
  for (auto& [c, nodes] : by_class) {
    std::shuffle(nodes.begin(), nodes.end(), rng);
    const auto sz = static_cast<double>(nodes.size());
    const auto ntr = std::max<std::size_t>(1, static_cast<std::size_t>(std::round(train_frac * sz)));
    const auto nva = static_cast<std::size_t>(std::round(val_frac * sz));
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      auto& dst = k < ntr ? out["train"] : (k < ntr + nva ? out["val"] : out["test"]);
      dst.push_back(nodes[k]);
    }
  }
  for (auto& [name, v] : out) std::sort(v.begin(), v.end());
  return out;
}

}  // namespace ftgcl
