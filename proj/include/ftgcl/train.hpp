#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ftgcl/contrast.hpp"
#include "ftgcl/encoder.hpp"
#include "ftgcl/topo_embed.hpp"
#include "ftgcl/views.hpp"

namespace ftgcl {

// Defaults follow the Cora row of the published hyperparameter table, plus
// the view-generation defaults (gamma=30, l=10, m=200).
struct TrainConfig {
  std::size_t k_max = 8;
  std::size_t d = 512;        // projection head width
  std::size_t d_prime = 256;  // encoder width
  double lr = 5e-4;
  double tau = 0.2;
  double weight_decay = 5e-5;
  Activation activation = Activation::Prelu;
  bool final_activation = true;
  std::size_t iterations = 400;
  std::uint64_t seed = 0;
  std::size_t gamma = 30;
  std::size_t walk_len = 10;
  std::size_t basis = 200;
  std::size_t wl_iters = 3;

  void validate() const {
    detail::require(k_max >= 1 && d >= 2 && d_prime >= 1, "TrainConfig: k_max, d, d_prime must be positive (d >= 2)");
    detail::require(lr > 0.0 && tau > 0.0 && weight_decay >= 0.0, "TrainConfig: lr and tau must be positive");
    detail::require(gamma >= 1 && walk_len >= 1 && basis >= 1, "TrainConfig: gamma, walk_len, basis must be positive");
  }

  TopologyConfig topology() const {
    TopologyConfig t;
    t.gamma = gamma;
    t.walk_len = walk_len;
    t.basis = basis;
    t.wl_iters = wl_iters;
    t.seed = seed;
    return t;
  }
};

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"k_max", c.k_max},
       {"d", c.d},
       {"d_prime", c.d_prime},
       {"lr", c.lr},
       {"tau", c.tau},
       {"weight_decay", c.weight_decay},
       {"activation", to_string(c.activation)},
       {"final_activation", c.final_activation},
       {"iterations", c.iterations},
       {"seed", c.seed},
       {"gamma", c.gamma},
       {"walk_len", c.walk_len},
       {"basis", c.basis},
       {"wl_iters", c.wl_iters}};
}

// Missing keys keep their defaults; unknown keys are rejected.
inline void from_json(const nlohmann::json& j, TrainConfig& c) {
  if (!j.is_object()) throw SchemaError("config must be a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "k_max") c.k_max = v.get<std::size_t>();
      else if (key == "d") c.d = v.get<std::size_t>();
      else if (key == "d_prime") c.d_prime = v.get<std::size_t>();
      else if (key == "lr") c.lr = v.get<double>();
      else if (key == "tau") c.tau = v.get<double>();
      else if (key == "weight_decay") c.weight_decay = v.get<double>();
      else if (key == "activation") c.activation = parse_activation(v.get<std::string>());
      else if (key == "final_activation") c.final_activation = v.get<bool>();
      else if (key == "iterations") c.iterations = v.get<std::size_t>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "gamma") c.gamma = v.get<std::size_t>();
      else if (key == "walk_len") c.walk_len = v.get<std::size_t>();
      else if (key == "basis") c.basis = v.get<std::size_t>();
      else if (key == "wl_iters") c.wl_iters = v.get<std::size_t>();
      else throw SchemaError("config: unknown key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("config: ") + e.what());
  }
}

// Adam moments for a list of tensors.
struct AdamState {
  std::vector<Matrix> m, v;
  std::size_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One Adam update with weight decay folded into the gradient (g + lambda*theta).
inline void adam_step(AdamState& s, std::span<Matrix* const> params, std::span<const Matrix> grads, double lr,
                      double weight_decay) {
  if (params.size() != grads.size()) throw InvalidArgument("adam_step: parameter and gradient counts differ");
  if (s.m.empty()) {
    for (const Matrix* p : params) {
      s.m.push_back(Matrix::Zero(p->rows(), p->cols()));
      s.v.push_back(Matrix::Zero(p->rows(), p->cols()));
    }
  }
  if (s.m.size() != params.size()) throw InvalidArgument("adam_step: optimizer state does not match parameters");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].rows() != params[i]->rows() || grads[i].cols() != params[i]->cols() ||
        s.m[i].rows() != params[i]->rows() || s.m[i].cols() != params[i]->cols()) {
      throw InvalidArgument("adam_step: shape mismatch for tensor " + std::to_string(i));
    }
    if (!grads[i].allFinite()) throw NumericalError("adam_step: non-finite gradient in tensor " + std::to_string(i));
  }
  ++s.step;
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& theta = *params[i];
    const Matrix g = grads[i] + weight_decay * theta;
    s.m[i] = s.beta1 * s.m[i] + (1.0 - s.beta1) * g;
    s.v[i] = s.beta2 * s.v[i] + (1.0 - s.beta2) * g.cwiseProduct(g);
    const auto m_hat = (s.m[i] / c1).array();
    const auto v_hat = (s.v[i] / c2).array();
    theta.array() -= lr * m_hat / (v_hat.sqrt() + s.eps);
  }
}

enum class Variant { FT, F, T, FTNL };

inline const char* to_string(Variant v) {
  switch (v) {
    case Variant::FT: return "ft";
    case Variant::F: return "f";
    case Variant::T: return "t";
    case Variant::FTNL: return "ft-nl";
  }
  return "?";
}

inline Variant parse_variant(const std::string& s) {
  if (s == "ft") return Variant::FT;
  if (s == "f") return Variant::F;
  if (s == "t") return Variant::T;
  if (s == "ft-nl") return Variant::FTNL;
  throw InvalidArgument("unknown variant '" + s + "' (expected ft, f, t or ft-nl)");
}

struct StepRecord {
  std::size_t step;
  Variant variant;
  Space space;
  std::size_t k;
  double loss;
};

inline nlohmann::json to_json(const StepRecord& r) {
  return {{"step", r.step}, {"variant", to_string(r.variant)}, {"space", to_string(r.space)}, {"k", r.k}, {"loss", r.loss}};
}

struct ModelState {
  ModelParams params;
  AdamState optimizer;
};

struct TrainResult {
  ModelState model;
  std::vector<StepRecord> trace;
};

// Feature and topology rankings at k_max, computed once before training.
struct Rankings {
  NeighborRanking feature;
  NeighborRanking topology;
};

inline Rankings build_rankings(const Dataset& data, const TrainConfig& cfg) {
  Rankings r;
  r.feature = rank_neighbors(data.features, cfg.k_max, Space::Feature);
  const auto topo = structural_embedding(data.graph, cfg.topology());
  r.topology = rank_neighbors(topo.coords, cfg.k_max, Space::Topology);
  return r;
}

inline Space view_space(Variant v, std::size_t step) {
  switch (v) {
    case Variant::F: return Space::Feature;
    case Variant::T: return Space::Topology;
    default: return step % 2 == 1 ? Space::Feature : Space::Topology;
  }
}

// Contrastive training loop. Each step draws k uniformly from {1..k_max},
// masks the ranking for the step's space, encodes the graph and the view with
// the same parameters, and applies one Adam update.
inline TrainResult train(const Dataset& data, const TrainConfig& cfg, Variant variant, const Rankings& rankings,
                         std::ostream* log = nullptr) {
  cfg.validate();
  data.validate();
  if (cfg.k_max >= data.num_nodes()) throw InvalidArgument("train: k_max must be smaller than the node count");
  for (const auto* r : {&rankings.feature, &rankings.topology}) {
    if (r->num_nodes() != data.num_nodes()) throw InvalidArgument("train: ranking size does not match dataset");
  }

  TrainResult result;
  result.model.params = init_model(data.features.cols(), static_cast<Index>(cfg.d_prime), static_cast<Index>(cfg.d),
                                   cfg.activation, cfg.final_activation, cfg.seed);
  Rng view_rng = derive_rng(cfg.seed, 0x5eed);
  const AttentionLayout base_layout(data.graph);

  for (std::size_t step = 1; step <= cfg.iterations; ++step) {
    const Space space = view_space(variant, step);
    const auto& ranking = space == Space::Feature ? rankings.feature : rankings.topology;
    const std::size_t k = sample_k(std::min(cfg.k_max, ranking.k_max), view_rng);
    const View view = materialize_view(ranking, data.features, k);
    const AttentionLayout view_layout(view.graph);

    ad::Tape tape;
    ModelVars vars = bind(tape, result.model.params);
    ad::Var x = tape.constant(data.features);
    ad::Var z = encode(vars.encoder, base_layout, x);
    ad::Var za = encode(vars.encoder, view_layout, x);
    ad::Var h = project(vars.head, z);
    ad::Var ha = project(vars.head, za);

    ContrastLoss loss;
    ad::Gradients grads;
    try {
      loss = variant == Variant::FTNL ? node_level_loss(h, ha, cfg.tau) : channel_loss(h, ha, cfg.tau);
      grads = tape.backward(loss.loss);
    } catch (const std::runtime_error& e) {
      throw NumericalError("training aborted at step " + std::to_string(step) + ": " + e.what());
    }

    auto tensors = result.model.params.tensors();
    std::vector<Matrix*> ptrs;
    std::vector<Matrix> g;
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      ptrs.push_back(tensors[i].second);
      g.push_back(grads[vars.leaves[i]]);
    }
    adam_step(result.model.optimizer, ptrs, g, cfg.lr, cfg.weight_decay);

    StepRecord rec{step, variant, space, k, loss.loss.value()(0, 0)};
    if (log) *log << to_json(rec).dump() << '\n';
    result.trace.push_back(rec);
  }
  return result;
}

inline TrainResult train(const Dataset& data, const TrainConfig& cfg, Variant variant, std::ostream* log = nullptr) {
  return train(data, cfg, variant, build_rankings(data, cfg), log);
}

}  // namespace ftgcl
