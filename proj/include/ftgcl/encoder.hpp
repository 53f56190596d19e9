#pragma once

#include <array>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "ftgcl/autodiff.hpp"
#include "ftgcl/graph.hpp"
#include "ftgcl/io.hpp"

namespace ftgcl {

enum class Activation { Relu, Elu, Prelu };

inline const char* to_string(Activation a) {
  switch (a) {
    case Activation::Relu: return "relu";
    case Activation::Elu: return "elu";
    case Activation::Prelu: return "prelu";
  }
  return "?";
}

inline Activation parse_activation(const std::string& s) {
  if (s == "relu") return Activation::Relu;
  if (s == "elu") return Activation::Elu;
  if (s == "prelu") return Activation::Prelu;
  throw InvalidArgument("unknown activation '" + s + "' (expected relu, elu or prelu)");
}

inline constexpr double kAttentionSlope = 0.2;
inline constexpr double kLogitClamp = 50.0;
inline constexpr double kPreluInit = 0.25;

struct GatLayerParams {
  Matrix weight;     // in x out
  Matrix attention;  // 2*out x 1; first half scores the receiving node, second the sender
  Matrix slope;      // 1x1, used only with PReLU
};

struct EncoderParams {
  std::array<GatLayerParams, 2> layers;
  Activation activation = Activation::Prelu;
  bool final_activation = true;

  Index out_dim() const { return layers[1].weight.cols(); }
};

struct HeadParams {
  Matrix w1, b1, w2, b2;
  Matrix slope;  // 1x1, used only with PReLU
  Activation activation = Activation::Prelu;
};

struct ModelParams {
  EncoderParams encoder;
  HeadParams head;

  // Trainable tensors in a fixed order. PReLU slopes appear only when PReLU
  // is the configured activation.
  std::vector<std::pair<std::string, Matrix*>> tensors() {
    std::vector<std::pair<std::string, Matrix*>> t;
    for (std::size_t l = 0; l < 2; ++l) {
      const std::string p = "encoder.layer" + std::to_string(l + 1) + ".";
      t.emplace_back(p + "weight", &encoder.layers[l].weight);
      t.emplace_back(p + "attention", &encoder.layers[l].attention);
      if (encoder.activation == Activation::Prelu) t.emplace_back(p + "slope", &encoder.layers[l].slope);
    }
    t.emplace_back("head.w1", &head.w1);
    t.emplace_back("head.b1", &head.b1);
    t.emplace_back("head.w2", &head.w2);
    t.emplace_back("head.b2", &head.b2);
    if (head.activation == Activation::Prelu) t.emplace_back("head.slope", &head.slope);
    return t;
  }
};

namespace detail {

inline Matrix glorot_uniform(Index rows, Index cols, Index fan_in, Index fan_out, std::mt19937_64& rng) {
  const double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> u(-s, s);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = u(rng);
  return m;
}

}  // namespace detail

// Glorot-uniform weights and attention vectors, zero biases, PReLU slopes 0.25.
inline ModelParams init_model(Index in_dim, Index hidden, Index proj, Activation act, bool final_activation,
                              std::uint64_t seed) {
  detail::require(in_dim > 0 && hidden > 0 && proj > 0, "init_model: dimensions must be positive");
  std::mt19937_64 rng(seed);
  ModelParams p;
  p.encoder.activation = act;
  p.encoder.final_activation = final_activation;
  Index in = in_dim;
  for (auto& layer : p.encoder.layers) {
    layer.weight = detail::glorot_uniform(in, hidden, in, hidden, rng);
    layer.attention = detail::glorot_uniform(2 * hidden, 1, 2 * hidden, 1, rng);
    layer.slope = Matrix::Constant(1, 1, kPreluInit);
    in = hidden;
  }
  p.head.activation = act;
  p.head.w1 = detail::glorot_uniform(hidden, proj, hidden, proj, rng);
  p.head.b1 = Matrix::Zero(1, proj);
  p.head.w2 = detail::glorot_uniform(proj, proj, proj, proj, rng);
  p.head.b2 = Matrix::Zero(1, proj);
  p.head.slope = Matrix::Constant(1, 1, kPreluInit);
  return p;
}

// Message-passing layout of a graph for attention: for every receiving node i
// (in order) the senders N_in(i) plus i itself. Self-loops exist only here.
struct AttentionLayout {
  Index num_nodes = 0;
  std::vector<Index> offsets;  // num_nodes + 1
  std::vector<Index> senders;
  std::vector<Index> receivers;

  explicit AttentionLayout(const Graph& g) : num_nodes(static_cast<Index>(g.num_nodes())) {
    offsets.reserve(g.num_nodes() + 1);
    offsets.push_back(0);
    for (NodeId i = 0; i < g.num_nodes(); ++i) {
      auto in = g.in_neighbors(i);
      auto pos = std::lower_bound(in.begin(), in.end(), i);
      for (auto it = in.begin(); it != pos; ++it) senders.push_back(static_cast<Index>(*it));
      senders.push_back(static_cast<Index>(i));
      for (auto it = pos; it != in.end(); ++it) senders.push_back(static_cast<Index>(*it));
      receivers.resize(senders.size(), static_cast<Index>(i));
      offsets.push_back(static_cast<Index>(senders.size()));
    }
  }
};

// Tape handles for one layer's parameters.
struct GatLayerVars {
  ad::Var weight, attention, slope;
};

struct EncoderVars {
  std::array<GatLayerVars, 2> layers;
  Activation activation;
  bool final_activation;
};

struct HeadVars {
  ad::Var w1, b1, w2, b2, slope;
  Activation activation;
};

struct ModelVars {
  EncoderVars encoder;
  HeadVars head;
  // Leaf handle for every trainable tensor, aligned with ModelParams::tensors().
  std::vector<ad::Var> leaves;
};

// Registers every parameter once on the tape. Both forward passes of a
// training step must use the returned handles so the parameters are shared.
inline ModelVars bind(ad::Tape& tape, ModelParams& p) {
  ModelVars v;
  v.encoder.activation = p.encoder.activation;
  v.encoder.final_activation = p.encoder.final_activation;
  v.head.activation = p.head.activation;
  auto leaf = [&](const Matrix& m, bool trainable) {
    ad::Var x = trainable ? tape.parameter(m) : tape.constant(m);
    if (trainable) v.leaves.push_back(x);
    return x;
  };
  for (std::size_t l = 0; l < 2; ++l) {
    auto& src = p.encoder.layers[l];
    v.encoder.layers[l].weight = leaf(src.weight, true);
    v.encoder.layers[l].attention = leaf(src.attention, true);
    v.encoder.layers[l].slope = leaf(src.slope, p.encoder.activation == Activation::Prelu);
  }
  v.head.w1 = leaf(p.head.w1, true);
  v.head.b1 = leaf(p.head.b1, true);
  v.head.w2 = leaf(p.head.w2, true);
  v.head.b2 = leaf(p.head.b2, true);
  v.head.slope = leaf(p.head.slope, p.head.activation == Activation::Prelu);
  return v;
}

inline ad::Var activate(const ad::Var& x, Activation act, const ad::Var& slope) {
  switch (act) {
    case Activation::Relu: return ad::relu(x);
    case Activation::Elu: return ad::elu(x);
    case Activation::Prelu: return ad::prelu(x, slope);
  }
  throw InvalidArgument("unknown activation");
}

// One single-head attention layer aggregating over in-neighbors plus self:
// e_ij = LeakyReLU(a^T [W h_i || W h_j]), alpha = softmax_j(e_ij),
// out_i = sum_j alpha_ij W h_j, optionally activated.
inline ad::Var gat_layer(const GatLayerVars& p, const AttentionLayout& layout, const ad::Var& h_in,
                         Activation act, bool apply_activation) {
  if (h_in.rows() != layout.num_nodes) throw InvalidArgument("gat_layer: feature rows do not match graph size");
  if (h_in.cols() != p.weight.rows()) {
    throw InvalidArgument("gat_layer: input width " + std::to_string(h_in.cols()) + " but weight expects " +
                          std::to_string(p.weight.rows()));
  }
  const Index out = p.weight.cols();
  if (p.attention.rows() != 2 * out || p.attention.cols() != 1) throw InvalidArgument("gat_layer: attention must be 2*out x 1");

  ad::Var wh = ad::matmul(h_in, p.weight);
  ad::Var score_recv = ad::matmul(wh, ad::slice_rows(p.attention, 0, out));
  ad::Var score_send = ad::matmul(wh, ad::slice_rows(p.attention, out, out));
  ad::Var logits = ad::add(ad::gather_rows(score_recv, layout.receivers), ad::gather_rows(score_send, layout.senders));
  logits = ad::clamp(ad::leaky_relu(logits, kAttentionSlope), -kLogitClamp, kLogitClamp);
  ad::Var alpha = ad::segment_softmax(logits, layout.offsets);
  ad::Var messages = ad::mul_col_broadcast(ad::gather_rows(wh, layout.senders), alpha);
  ad::Var agg = ad::scatter_add_rows(messages, layout.receivers, layout.num_nodes);
  return apply_activation ? activate(agg, act, p.slope) : agg;
}

inline ad::Var encode(const EncoderVars& enc, const AttentionLayout& layout, const ad::Var& x) {
  ad::Var h = gat_layer(enc.layers[0], layout, x, enc.activation, true);
  return gat_layer(enc.layers[1], layout, h, enc.activation, enc.final_activation);
}

inline ad::Var project(const HeadVars& head, const ad::Var& z) {
  if (z.cols() != head.w1.rows()) throw InvalidArgument("project: embedding width does not match head input");
  ad::Var h = ad::add_row_broadcast(ad::matmul(z, head.w1), head.b1);
  h = activate(h, head.activation, head.slope);
  return ad::add_row_broadcast(ad::matmul(h, head.w2), head.b2);
}

// Value-only forward pass of the encoder.
inline Matrix encode(const EncoderParams& enc, const Graph& g, const Matrix& x) {
  if (static_cast<std::size_t>(x.rows()) != g.num_nodes()) throw InvalidArgument("encode: feature rows do not match graph size");
  ad::Tape tape;
  EncoderVars vars;
  vars.activation = enc.activation;
  vars.final_activation = enc.final_activation;
  for (std::size_t l = 0; l < 2; ++l) {
    vars.layers[l] = {tape.constant(enc.layers[l].weight), tape.constant(enc.layers[l].attention),
                      tape.constant(enc.layers[l].slope)};
  }
  AttentionLayout layout(g);
  return encode(vars, layout, tape.constant(x)).value();
}

inline Matrix project(const HeadParams& head, const Matrix& z) {
  ad::Tape tape;
  HeadVars v{tape.constant(head.w1), tape.constant(head.b1), tape.constant(head.w2),
             tape.constant(head.b2), tape.constant(head.slope), head.activation};
  return project(v, tape.constant(z)).value();
}

// ---------------------------------------------------------------------------
// Checkpoints: JSON, format tag "ftgcl-ckpt-v1", named tensors with shapes.

inline constexpr const char* kCheckpointFormat = "ftgcl-ckpt-v1";

inline nlohmann::json tensor_to_json(const Matrix& m) {
  std::vector<double> data(static_cast<std::size_t>(m.size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) data[static_cast<std::size_t>(i * m.cols() + j)] = m(i, j);
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

inline Matrix tensor_from_json(const nlohmann::json& j, const std::string& name) {
  const auto r = j.at("rows").get<Index>();
  const auto c = j.at("cols").get<Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (r < 0 || c < 0 || static_cast<Index>(data.size()) != r * c) {
    throw SchemaError("checkpoint tensor '" + name + "' has inconsistent shape");
  }
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index jj = 0; jj < c; ++jj) m(i, jj) = data[static_cast<std::size_t>(i * c + jj)];
  return m;
}

inline nlohmann::json model_to_json(ModelParams p, const nlohmann::json& config = nlohmann::json::object()) {
  nlohmann::json tensors = nlohmann::json::object();
  for (auto& [name, m] : p.tensors()) tensors[name] = tensor_to_json(*m);
  // Inactive slopes are still saved so a checkpoint is self-contained.
  for (std::size_t l = 0; l < 2; ++l)
    tensors["encoder.layer" + std::to_string(l + 1) + ".slope"] = tensor_to_json(p.encoder.layers[l].slope);
  tensors["head.slope"] = tensor_to_json(p.head.slope);
  return {{"format", kCheckpointFormat},
          {"activation", to_string(p.encoder.activation)},
          {"final_activation", p.encoder.final_activation},
          {"config", config},
          {"tensors", tensors}};
}

inline ModelParams model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kCheckpointFormat) {
      throw SchemaError("unsupported checkpoint format '" + j.at("format").get<std::string>() + "'");
    }
    ModelParams p;
    p.encoder.activation = parse_activation(j.at("activation").get<std::string>());
    p.encoder.final_activation = j.at("final_activation").get<bool>();
    p.head.activation = p.encoder.activation;
    const auto& t = j.at("tensors");
    auto get = [&](const std::string& name) { return tensor_from_json(t.at(name), name); };
    for (std::size_t l = 0; l < 2; ++l) {
      const std::string pre = "encoder.layer" + std::to_string(l + 1) + ".";
      p.encoder.layers[l] = {get(pre + "weight"), get(pre + "attention"), get(pre + "slope")};
    }
    p.head.w1 = get("head.w1");
    p.head.b1 = get("head.b1");
    p.head.w2 = get("head.w2");
    p.head.b2 = get("head.b2");
    p.head.slope = get("head.slope");
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed checkpoint: ") + e.what());
  }
}

inline void save_checkpoint(const fs::path& path, const ModelParams& p,
                            const nlohmann::json& config = nlohmann::json::object()) {
  detail::open_output(path) << model_to_json(p, config).dump() << '\n';
}

inline ModelParams load_checkpoint(const fs::path& path) {
  auto in = detail::open_input(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  return model_from_json(j);
}

}  // namespace ftgcl
