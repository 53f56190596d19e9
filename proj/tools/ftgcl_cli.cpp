// Command-line front end: view generation, contrastive training, evaluation
// and the barbell structural-embedding demo.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "ftgcl/ftgcl.hpp"

namespace {

using namespace ftgcl;
using nlohmann::json;

struct GenViewsArgs {
  std::string data, out, extractor = "rw";
  std::size_t kmax = 8, gamma = 30, walk_len = 10, basis = 200, wl_iters = 3, radius = 1;
  std::uint64_t seed = 0;
};

struct TrainArgs {
  std::string data, views, variant = "ft", config, out, log;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> iters, kmax, d, d_prime;
  std::optional<double> lr, tau, weight_decay;
  std::optional<std::string> activation;
};

struct EvalArgs {
  std::string data, ckpt, task, splits, out, views;
  double l2 = 1e-3, test_frac = 0.1;
  std::size_t k = 6;
  std::uint64_t seed = 0;
};

struct BarbellArgs {
  std::size_t m1 = 6, m2 = 2, wl_iters = 2;
  std::string out = "embedding.csv";
};

void write_json(const std::string& path, const json& j) { detail::open_output(path) << j.dump(2) << '\n'; }

int run_gen_views(const GenViewsArgs& a) {
  const Dataset data = load_dataset(a.data);
  TopologyConfig topo;
  topo.extractor = a.extractor == "ego" ? SubgraphExtractor::Egonet : SubgraphExtractor::RandomWalk;
  topo.gamma = a.gamma;
  topo.walk_len = a.walk_len;
  topo.radius = a.radius;
  topo.basis = a.basis;
  topo.wl_iters = a.wl_iters;
  topo.seed = a.seed;

  const auto fpg = rank_neighbors(data.features, a.kmax, Space::Feature);
  const auto embedding = structural_embedding(data.graph, topo);
  const auto tpg = rank_neighbors(embedding.coords, a.kmax, Space::Topology);

  const fs::path out(a.out);
  write_ranking_tsv(out / "fpg.tsv", fpg);
  write_ranking_tsv(out / "tpg.tsv", tpg);
  write_matrix_csv(out / "topo_embedding.csv", embedding.coords);
  write_json((out / "views.json").string(), {{"k_max", a.kmax},
                                             {"extractor", a.extractor},
                                             {"gamma", a.gamma},
                                             {"walk_len", a.walk_len},
                                             {"radius", a.radius},
                                             {"basis", embedding.m},
                                             {"wl_iters", a.wl_iters},
                                             {"seed", a.seed}});
  std::cerr << "wrote views for " << data.num_nodes() << " nodes to " << out << '\n';
  return 0;
}

int run_train(const TrainArgs& a) {
  const Dataset data = load_dataset(a.data);
  TrainConfig cfg;
  if (!a.config.empty()) {
    auto in = detail::open_input(a.config);
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw SchemaError(std::string("config is not valid JSON: ") + e.what());
    }
    from_json(j, cfg);
  }
  if (a.seed) cfg.seed = *a.seed;
  if (a.iters) cfg.iterations = *a.iters;
  if (a.kmax) cfg.k_max = *a.kmax;
  if (a.d) cfg.d = *a.d;
  if (a.d_prime) cfg.d_prime = *a.d_prime;
  if (a.lr) cfg.lr = *a.lr;
  if (a.tau) cfg.tau = *a.tau;
  if (a.weight_decay) cfg.weight_decay = *a.weight_decay;
  if (a.activation) cfg.activation = parse_activation(*a.activation);
  cfg.validate();

  Rankings rankings;
  if (a.views.empty()) {
    rankings = build_rankings(data, cfg);
  } else {
    const fs::path dir(a.views);
    rankings.feature = read_ranking_tsv(dir / "fpg.tsv", data.num_nodes(), Space::Feature);
    rankings.topology = read_ranking_tsv(dir / "tpg.tsv", data.num_nodes(), Space::Topology);
    if (cfg.k_max > rankings.feature.k_max || cfg.k_max > rankings.topology.k_max) {
      throw InvalidArgument("k_max " + std::to_string(cfg.k_max) + " exceeds the precomputed rankings");
    }
    rankings.feature = truncate_ranking(std::move(rankings.feature), cfg.k_max);
    rankings.topology = truncate_ranking(std::move(rankings.topology), cfg.k_max);
  }

  const fs::path ckpt(a.out);
  const fs::path log_path = a.log.empty() ? (ckpt.has_parent_path() ? ckpt.parent_path() / "train_log.jsonl"
                                                                    : fs::path("train_log.jsonl"))
                                          : fs::path(a.log);
  auto log = detail::open_output(log_path);
  const auto variant = parse_variant(a.variant);
  const auto result = train(data, cfg, variant, rankings, &log);
  json config = cfg;
  config["variant"] = to_string(variant);
  save_checkpoint(ckpt, result.model.params, config);
  if (!result.trace.empty()) {
    std::cerr << "final loss " << result.trace.back().loss << " after " << result.trace.size() << " steps\n";
  }
  return 0;
}

int run_eval(const EvalArgs& a) {
  const Dataset data = load_dataset(a.data);
  json m = {{"task", a.task},        {"accuracy", nullptr}, {"macro_f1", nullptr}, {"auc", nullptr},
            {"ap", nullptr},         {"homophily", nullptr}, {"seed", a.seed},     {"split", nullptr}};

  if (a.task == "homophily") {
    if (!data.labels) throw InvalidArgument("homophily requires labels.txt");
    m["homophily"] = edge_homophily(data.graph, *data.labels);
    m["edge_counting"] = "undirected edges once, directed edges once per out-edge";
    if (!a.views.empty()) {
      const fs::path dir(a.views);
      for (auto [file, key, space] : {std::tuple{"fpg.tsv", "homophily_fpg", Space::Feature},
                                      std::tuple{"tpg.tsv", "homophily_tpg", Space::Topology}}) {
        const auto r = read_ranking_tsv(dir / file, data.num_nodes(), space);
        const auto view = materialize_view(r, data.features, std::min(a.k, r.k_max));
        m[key] = edge_homophily(view.graph, *data.labels);
      }
      m["view_k"] = a.k;
    }
  } else if (a.task == "classify") {
    if (!data.labels) throw InvalidArgument("classify requires labels.txt");
    if (a.ckpt.empty()) throw InvalidArgument("classify requires --ckpt");
    const auto params = load_checkpoint(a.ckpt);
    auto splits = a.splits.empty() ? data.splits : read_splits(a.splits);
    std::string split_name = a.splits.empty() ? "dataset" : a.splits;
    if (!splits.count("train") || !splits.count("test")) {
      splits = random_split(*data.labels, 0.1, 0.1, a.seed);
      split_name = "random-10/10/80";
    }
    const Matrix z = encode(params.encoder, data.graph, data.features);
    ProbeOptions opt;
    opt.l2 = a.l2;
    const auto r = logistic_probe(z, *data.labels, splits.at("train"), splits.at("test"), opt);
    m["accuracy"] = r.accuracy;
    m["macro_f1"] = r.macro_f1;
    m["split"] = split_name;
  } else if (a.task == "linkpred") {
    if (a.ckpt.empty()) throw InvalidArgument("linkpred requires --ckpt");
    const auto params = load_checkpoint(a.ckpt);
    const auto split = split_edges(data.graph, a.test_frac, a.seed);
    const Matrix z = encode(params.encoder, split.train_graph, data.features);
    const auto r = link_pred_eval(z, split.test_pos, split.test_neg);
    m["auc"] = r.auc;
    m["ap"] = r.ap;
    m["split"] = "edges held out: " + std::to_string(split.test_pos.size());
  } else {
    throw InvalidArgument("unknown task '" + a.task + "'");
  }

  if (a.out.empty()) {
    std::cout << m.dump(2) << '\n';
  } else {
    write_json(a.out, m);
  }
  return 0;
}

int run_demo_barbell(const BarbellArgs& a) {
  const Graph g = barbell(a.m1, a.m2);
  std::vector<Subgraph> subs;
  for (NodeId v = 0; v < g.num_nodes(); ++v) subs.push_back(egonet(g, v, 1));
  Rng rng(0);
  const auto e = nystrom_embed(subs, subs.size(), a.wl_iters, 1e-10, rng);
  write_matrix_csv(a.out, e.coords);
  std::cerr << "wrote " << e.coords.rows() << " x " << e.coords.cols() << " embedding to " << a.out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Feature/topology proximity graph contrastive learning"};
  app.require_subcommand(1);

  GenViewsArgs gv;
  auto* gen = app.add_subcommand("gen-views", "Rank feature and topology neighbors and dump them");
  gen->add_option("--data", gv.data, "Dataset directory")->required();
  gen->add_option("--kmax", gv.kmax, "Neighbors kept per node")->check(CLI::PositiveNumber);
  gen->add_option("--gamma", gv.gamma, "Random walks per node")->check(CLI::PositiveNumber);
  gen->add_option("--walk-len", gv.walk_len, "Random walk length")->check(CLI::PositiveNumber);
  gen->add_option("--basis", gv.basis, "Nystrom basis size (capped at N)")->check(CLI::PositiveNumber);
  gen->add_option("--wl-iters", gv.wl_iters, "WL refinement iterations");
  gen->add_option("--extractor", gv.extractor, "Subgraph extractor")->check(CLI::IsMember({"rw", "ego"}));
  gen->add_option("--radius", gv.radius, "Egonet radius")->check(CLI::PositiveNumber);
  gen->add_option("--seed", gv.seed, "Random seed");
  gen->add_option("--out", gv.out, "Output directory")->required();

  TrainArgs tr;
  auto* trn = app.add_subcommand("train", "Train the shared encoder contrastively");
  trn->add_option("--data", tr.data, "Dataset directory")->required();
  trn->add_option("--views", tr.views, "Directory from gen-views (computed on the fly if omitted)");
  trn->add_option("--variant", tr.variant, "View schedule / objective")->check(CLI::IsMember({"ft", "f", "t", "ft-nl"}));
  trn->add_option("--config", tr.config, "JSON training config");
  trn->add_option("--out", tr.out, "Checkpoint path")->required();
  trn->add_option("--log", tr.log, "Loss log (default: train_log.jsonl beside the checkpoint)");
  trn->add_option("--seed", tr.seed);
  trn->add_option("--iters", tr.iters);
  trn->add_option("--kmax", tr.kmax);
  trn->add_option("--d", tr.d);
  trn->add_option("--d-prime", tr.d_prime);
  trn->add_option("--lr", tr.lr);
  trn->add_option("--tau", tr.tau);
  trn->add_option("--weight-decay", tr.weight_decay);
  trn->add_option("--activation", tr.activation)->check(CLI::IsMember({"relu", "elu", "prelu"}));

  EvalArgs ev;
  auto* evl = app.add_subcommand("eval", "Evaluate embeddings or graph homophily");
  evl->add_option("--data", ev.data, "Dataset directory")->required();
  evl->add_option("--ckpt", ev.ckpt, "Checkpoint from train");
  evl->add_option("--task", ev.task, "Evaluation task")->required()->check(CLI::IsMember({"classify", "linkpred", "homophily"}));
  evl->add_option("--splits", ev.splits, "splits.json overriding the dataset's");
  evl->add_option("--out", ev.out, "metrics.json path (stdout if omitted)");
  evl->add_option("--l2", ev.l2, "Probe L2 penalty");
  evl->add_option("--test-frac", ev.test_frac, "Held-out edge fraction for linkpred");
  evl->add_option("--views", ev.views, "gen-views directory; adds view homophily");
  evl->add_option("--k", ev.k, "k for view homophily")->check(CLI::PositiveNumber);
  evl->add_option("--seed", ev.seed, "Random seed");

  BarbellArgs bb;
  auto* demo = app.add_subcommand("demo-barbell", "Structural embedding of a barbell graph");
  demo->add_option("--m1", bb.m1, "Clique size");
  demo->add_option("--m2", bb.m2, "Bridge length");
  demo->add_option("--wl-iters", bb.wl_iters, "WL refinement iterations");
  demo->add_option("--out", bb.out, "Output CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 2;
  }

  try {
    if (gen->parsed()) return run_gen_views(gv);
    if (trn->parsed()) return run_train(tr);
    if (evl->parsed()) return run_eval(ev);
    if (demo->parsed()) return run_demo_barbell(bb);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
