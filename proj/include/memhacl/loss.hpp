#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "memhacl/nn/ops.hpp"

namespace memhacl {

// Result of the group contrastive objective. Representations are laid out
// H x 2P with the A-side groups in columns [0, P) and the B-side groups in
// columns [P, 2P); (A_i, B_i) is the positive pair for clip i.
template <class Scalar>
struct ContrastiveResult {
  Scalar loss = 0;
  std::vector<Scalar> per_anchor_a;  // l^A_i
  std::vector<Scalar> per_anchor_b;  // l^B_i
  Matrix<Scalar> grad;               // d loss / d reps, H x 2P
};

// Normalized temperature-scaled cross-entropy over group representations.
// For anchor A_i the positive is B_i and the candidate set is the other
// 2(P-1) groups of the minibatch plus the positive (the anchor itself is
// excluded); symmetric for B_i. Loss = (1/2P) * sum_i (l^A_i + l^B_i).
template <class Scalar>
ContrastiveResult<Scalar> contrastive_loss(const Matrix<Scalar>& reps,
                                           Scalar tau,
                                           bool want_grad = false) {
  if (tau <= Scalar(0)) throw std::invalid_argument("temperature must be > 0");
  const Index total = reps.cols();
  if (total < 4 || total % 2 != 0) {
    throw std::invalid_argument(
        "contrastive loss needs 2P group representations with P >= 2");
  }
  const Index p = total / 2;

  Vector<Scalar> norms = reps.colwise().norm().transpose();
  for (Index i = 0; i < total; ++i) {
    if (norms(i) == Scalar(0)) {
      throw std::invalid_argument("zero-norm group representation at column " +
                                  std::to_string(i));
    }
    if (!std::isfinite(static_cast<double>(norms(i)))) {
      throw std::invalid_argument("non-finite group representation at column " +
                                  std::to_string(i));
    }
  }
  Matrix<Scalar> unit = reps;
  unit.array().rowwise() /= norms.transpose().array();

  const Matrix<Scalar> sim = unit.transpose() * unit;  // cosine similarities

  // Row-wise softmax over candidates j != anchor, at logits sim/tau.
  ContrastiveResult<Scalar> out;
  out.per_anchor_a.resize(static_cast<std::size_t>(p));
  out.per_anchor_b.resize(static_cast<std::size_t>(p));
  Matrix<Scalar> softmax = Matrix<Scalar>::Zero(total, total);
  Scalar loss_sum = 0;
  for (Index a = 0; a < total; ++a) {
    const Index positive = (a + p) % total;
    Scalar max_logit = -std::numeric_limits<Scalar>::infinity();
    for (Index j = 0; j < total; ++j) {
      if (j == a) continue;
      max_logit = std::max(max_logit, sim(a, j) / tau);
    }
    Scalar denom = 0;
    for (Index j = 0; j < total; ++j) {
      if (j == a) continue;
      const Scalar e = std::exp(sim(a, j) / tau - max_logit);
      softmax(a, j) = e;
      denom += e;
    }
    softmax.row(a) /= denom;
    const Scalar l = -std::log(softmax(a, positive));
    if (a < p) {
      out.per_anchor_a[static_cast<std::size_t>(a)] = l;
    } else {
      out.per_anchor_b[static_cast<std::size_t>(a - p)] = l;
    }
    loss_sum += l;
  }
  out.loss = loss_sum / static_cast<Scalar>(total);

  if (want_grad) {
    // dL/dsim(a,j) = (softmax(a,j) - [j = positive(a)]) / (tau * 2P), j != a.
    Matrix<Scalar> g = softmax;
    for (Index a = 0; a < total; ++a) {
      g(a, (a + p) % total) -= Scalar(1);
    }
    g /= tau * static_cast<Scalar>(total);

    // sim = unit^T unit  =>  dUnit = unit * (g + g^T).
    const Matrix<Scalar> dunit = unit * (g + g.transpose());

    // unit_i = z_i / |z_i|  =>  dz_i = (dunit_i - unit_i (unit_i . dunit_i)) / |z_i|.
    out.grad.resize(reps.rows(), total);
    for (Index i = 0; i < total; ++i) {
      const Scalar proj = unit.col(i).dot(dunit.col(i));
      out.grad.col(i) = (dunit.col(i) - unit.col(i) * proj) / norms(i);
    }
  }
  return out;
}

template <class Scalar>
struct CrossEntropyResult {
  Scalar loss = 0;
  Matrix<Scalar> grad;           // d loss / d logits, K x n
  std::vector<int> predictions;  // argmax per column
};

// Mean negative log-softmax-probability of the true class.
template <class Scalar>
CrossEntropyResult<Scalar> cross_entropy(const Matrix<Scalar>& logits,
                                         const std::vector<int>& labels,
                                         bool want_grad = false) {
  const Index n = logits.cols();
  const Index k = logits.rows();
  if (static_cast<Index>(labels.size()) != n) {
    throw std::invalid_argument("label count does not match logit columns");
  }
  for (int label : labels) {
    if (label < 0 || label >= k) {
      throw std::invalid_argument("label " + std::to_string(label) +
                                  " out of range for " + std::to_string(k) +
                                  " classes");
    }
  }
  if (n == 0) throw std::invalid_argument("empty batch in cross entropy");

  const Matrix<Scalar> probs = softmax_columns(logits);
  CrossEntropyResult<Scalar> out;
  out.predictions.resize(static_cast<std::size_t>(n));
  Scalar loss_sum = 0;
  for (Index i = 0; i < n; ++i) {
    Index best = 0;
    probs.col(i).maxCoeff(&best);
    out.predictions[static_cast<std::size_t>(i)] = static_cast<int>(best);
    loss_sum -= std::log(probs(labels[static_cast<std::size_t>(i)], i));
  }
  out.loss = loss_sum / static_cast<Scalar>(n);

  if (want_grad) {
    out.grad = probs;
    for (Index i = 0; i < n; ++i) {
      out.grad(labels[static_cast<std::size_t>(i)], i) -= Scalar(1);
    }
    out.grad /= static_cast<Scalar>(n);
  }
  return out;
}

}  // namespace memhacl
