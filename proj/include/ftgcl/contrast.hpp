#pragma once

#include <cmath>
#include <string>

#include "ftgcl/autodiff.hpp"
#include "ftgcl/graph.hpp"

namespace ftgcl {

struct ContrastLoss {
  ad::Var loss;
  // Cosine similarities evaluated to form the loss (d*d for channels, N*N for nodes).
  std::size_t similarity_evaluations = 0;
};

namespace detail {

inline void check_pair(const Matrix& h, const Matrix& ha, double tau) {
  if (!(tau > 0.0)) throw InvalidArgument("contrastive loss: tau must be positive");
  if (h.rows() != ha.rows() || h.cols() != ha.cols()) throw InvalidArgument("contrastive loss: H and H_a shapes differ");
}

}  // namespace detail

// Symmetric contrast over a square similarity matrix phi (phi(i,j) compares
// item i of the first view with item j of the second):
//   l_i = -( log e^{phi_ii/tau} / sum_{j!=i} e^{phi_ij/tau}
//          + log e^{phi_ii/tau} / sum_{j!=i} e^{phi_ji/tau} ),   L = mean_i l_i.
// The positive pair is excluded from both denominators.
inline ad::Var contrast_from_similarity(const ad::Var& phi, double tau) {
  const Index d = phi.rows();
  if (phi.cols() != d || d < 2) throw InvalidArgument("contrastive loss: need a square similarity matrix with d >= 2");
  if (!(tau > 0.0)) throw InvalidArgument("contrastive loss: tau must be positive");
  ad::Tape& t = phi.tape();
  const Matrix eye = Matrix::Identity(d, d);
  ad::Var scaled = ad::scale(phi, 1.0 / tau);
  ad::Var off = ad::mul(ad::exp(scaled), t.constant(Matrix::Ones(d, d) - eye));
  ad::Var row_terms = ad::sum(ad::log(ad::row_sum(off)));
  ad::Var col_terms = ad::sum(ad::log(ad::col_sum(off)));
  ad::Var positives = ad::sum(ad::mul(scaled, t.constant(eye)));
  ad::Var total = ad::add(ad::scale(positives, -2.0), ad::add(row_terms, col_terms));
  return ad::scale(total, 1.0 / static_cast<double>(d));
}

// Channel-level loss: columns of H and H_a are the contrasted items.
inline ContrastLoss channel_loss(const ad::Var& h, const ad::Var& ha, double tau) {
  detail::check_pair(h.value(), ha.value(), tau);
  if (h.cols() < 2) throw InvalidArgument("channel_loss: need at least two channels");
  ad::Var phi = ad::matmul(ad::transpose(ad::col_normalize(h)), ad::col_normalize(ha));
  const auto d = static_cast<std::size_t>(h.cols());
  return {contrast_from_similarity(phi, tau), d * d};
}

// Node-level baseline: rows of H and H_a are the contrasted items.
inline ContrastLoss node_level_loss(const ad::Var& h, const ad::Var& ha, double tau) {
  detail::check_pair(h.value(), ha.value(), tau);
  if (h.rows() < 2) throw InvalidArgument("node_level_loss: need at least two nodes");
  ad::Var phi = ad::matmul(ad::row_normalize(h), ad::transpose(ad::row_normalize(ha)));
  const auto n = static_cast<std::size_t>(h.rows());
  return {contrast_from_similarity(phi, tau), n * n};
}

inline double channel_loss(const Matrix& h, const Matrix& ha, double tau) {
  ad::Tape t;
  return channel_loss(t.constant(h), t.constant(ha), tau).loss.value()(0, 0);
}

inline double node_level_loss(const Matrix& h, const Matrix& ha, double tau) {
  ad::Tape t;
  return node_level_loss(t.constant(h), t.constant(ha), tau).loss.value()(0, 0);
}

// d x d cosine matrix between the channels of H and H_a.
inline Matrix channel_similarity(const Matrix& h, const Matrix& ha) {
  if (h.rows() != ha.rows() || h.cols() != ha.cols()) throw InvalidArgument("channel_similarity: shapes differ");
  Eigen::RowVectorXd nh = h.colwise().norm(), nha = ha.colwise().norm();
  for (Index j = 0; j < h.cols(); ++j) {
    if (nh(j) == 0.0 || nha(j) == 0.0) throw InvalidArgument("channel_similarity: zero-norm column " + std::to_string(j));
  }
  return (h * nh.cwiseInverse().asDiagonal()).transpose() * (ha * nha.cwiseInverse().asDiagonal());
}

// Evaluates -L in expectation form, with uniform expectations over j != i and
// the additive constant 2 log(d-1), and returns its distance from -L computed
// by channel_loss. Uses plain loops independent of the tape.
inline double expectation_form_check(const Matrix& h, const Matrix& ha, double tau) {
  detail::check_pair(h, ha, tau);
  const Index d = h.cols();
  if (d < 2) throw InvalidArgument("expectation_form_check: need at least two channels");
  const Matrix phi = channel_similarity(h, ha);
  const double dd = static_cast<double>(d);

  double positive = 0.0, rows = 0.0, cols = 0.0;
  for (Index i = 0; i < d; ++i) {
    positive += phi(i, i) / tau;
    double mean_row = 0.0, mean_col = 0.0;
    for (Index j = 0; j < d; ++j) {
      if (j == i) continue;
      mean_row += std::exp(phi(i, j) / tau);
      mean_col += std::exp(phi(j, i) / tau);
    }
    rows += std::log(mean_row / (dd - 1.0));
    cols += std::log(mean_col / (dd - 1.0));
  }
  const double neg_loss = 2.0 * positive / dd - rows / dd - cols / dd - 2.0 * std::log(dd - 1.0);
  return std::abs(neg_loss + channel_loss(h, ha, tau));
}

}  // namespace ftgcl
