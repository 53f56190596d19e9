#pragma once

#include <random>
#include <string>
#include <vector>

#include "ftgcl/autodiff.hpp"

namespace test {

using ftgcl::ad::Index;
using ftgcl::ad::Matrix;
using ftgcl::ad::Tape;
using ftgcl::ad::Var;

inline Matrix seeded_matrix(Index rows, Index cols, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = u(rng);
  return m;
}

// Reduces a matrix output to a scalar with fixed random weights so every
// output entry receives a distinct adjoint.
inline Var weighted_sum(const Var& y) {
  const Matrix w = seeded_matrix(y.rows(), y.cols(), 1000 + static_cast<std::uint64_t>(y.rows() * 31 + y.cols()));
  return ftgcl::ad::sum(ftgcl::ad::mul(y, y.tape().constant(w)));
}

struct GradientCase {
  std::string name;
  ftgcl::ad::ScalarFn fn;
  Eigen::VectorXd x0;
};

inline GradientCase unary_case(std::string name, std::function<Var(const Var&)> op, Index r, Index c,
                               double lo = -1.0, double hi = 1.0) {
  auto fn = ftgcl::ad::tape_function([op](Tape&, std::span<const Var> in) { return weighted_sum(op(in[0])); },
                                     {{r, c}});
  const Matrix x = seeded_matrix(r, c, std::hash<std::string>{}(name), lo, hi);
  return {std::move(name), std::move(fn), Eigen::Map<const Eigen::VectorXd>(x.data(), x.size())};
}

inline GradientCase binary_case(std::string name, std::function<Var(const Var&, const Var&)> op,
                                std::pair<Index, Index> sa, std::pair<Index, Index> sb) {
  auto fn = ftgcl::ad::tape_function(
      [op](Tape&, std::span<const Var> in) { return weighted_sum(op(in[0], in[1])); }, {sa, sb});
  const auto seed = std::hash<std::string>{}(name);
  const Matrix a = seeded_matrix(sa.first, sa.second, seed);
  const Matrix b = seeded_matrix(sb.first, sb.second, seed + 1);
  const Matrix both[] = {a, b};
  return {std::move(name), std::move(fn), ftgcl::ad::flatten(both)};
}

// One case per differentiable primitive.
inline std::vector<GradientCase> primitive_gradient_cases() {
  namespace ad = ftgcl::ad;
  std::vector<GradientCase> cases;
  cases.push_back(binary_case("matmul", [](const Var& a, const Var& b) { return ad::matmul(a, b); }, {3, 4}, {4, 2}));
  cases.push_back(unary_case("transpose", [](const Var& a) { return ad::transpose(a); }, 3, 5));
  cases.push_back(binary_case("add", [](const Var& a, const Var& b) { return ad::add(a, b); }, {3, 2}, {3, 2}));
  cases.push_back(binary_case("sub", [](const Var& a, const Var& b) { return ad::sub(a, b); }, {3, 2}, {3, 2}));
  cases.push_back(binary_case("mul", [](const Var& a, const Var& b) { return ad::mul(a, b); }, {3, 2}, {3, 2}));
  cases.push_back(binary_case(
      "add_row_broadcast", [](const Var& a, const Var& b) { return ad::add_row_broadcast(a, b); }, {4, 3}, {1, 3}));
  cases.push_back(binary_case(
      "add_col_broadcast", [](const Var& a, const Var& b) { return ad::add_col_broadcast(a, b); }, {4, 3}, {4, 1}));
  cases.push_back(binary_case(
      "mul_col_broadcast", [](const Var& a, const Var& b) { return ad::mul_col_broadcast(a, b); }, {4, 3}, {4, 1}));
  cases.push_back(unary_case("scale", [](const Var& a) { return ad::scale(a, -2.5); }, 2, 3));
  cases.push_back(unary_case("exp", [](const Var& a) { return ad::exp(a); }, 3, 3));
  cases.push_back(unary_case("log", [](const Var& a) { return ad::log(a); }, 3, 3, 0.2, 3.0));
  cases.push_back(unary_case("relu", [](const Var& a) { return ad::relu(a); }, 4, 3));
  cases.push_back(unary_case("leaky_relu", [](const Var& a) { return ad::leaky_relu(a); }, 4, 3));
  cases.push_back(unary_case("elu", [](const Var& a) { return ad::elu(a); }, 4, 3));
  cases.push_back(binary_case("prelu", [](const Var& a, const Var& s) { return ad::prelu(a, s); }, {4, 3}, {1, 1}));
  cases.push_back(unary_case("clamp", [](const Var& a) { return ad::clamp(a, -0.5, 0.5); }, 4, 4));
  cases.push_back(unary_case(
      "segment_softmax", [](const Var& a) { return ad::segment_softmax(a, {0, 3, 3, 4, 7}); }, 7, 1, -2.0, 2.0));
  cases.push_back(unary_case("row_normalize", [](const Var& a) { return ad::row_normalize(a); }, 4, 3));
  cases.push_back(unary_case("col_normalize", [](const Var& a) { return ad::col_normalize(a); }, 4, 3));
  cases.push_back(unary_case("sum", [](const Var& a) { return ad::sum(a); }, 3, 2));
  cases.push_back(unary_case("mean", [](const Var& a) { return ad::mean(a); }, 3, 2));
  cases.push_back(unary_case("row_sum", [](const Var& a) { return ad::row_sum(a); }, 3, 4));
  cases.push_back(unary_case("col_sum", [](const Var& a) { return ad::col_sum(a); }, 3, 4));
  cases.push_back(unary_case("gather_rows", [](const Var& a) { return ad::gather_rows(a, {2, 0, 2, 1, 2}); }, 3, 2));
  cases.push_back(unary_case(
      "scatter_add_rows", [](const Var& a) { return ad::scatter_add_rows(a, {1, 3, 1, 0}, 5); }, 4, 2));
  cases.push_back(unary_case("slice_rows", [](const Var& a) { return ad::slice_rows(a, 1, 2); }, 4, 3));
  cases.push_back(unary_case("slice_cols", [](const Var& a) { return ad::slice_cols(a, 1, 2); }, 3, 4));
  return cases;
}

}  // namespace test
