#pragma once

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "memhacl/nn/ops.hpp"
#include "memhacl/nn/params.hpp"

namespace memhacl {

// Multi-head scaled dot-product self-attention over an unordered set of
// members. Input is dim x Q with one member per column; queries, keys and
// values are all the members, there is no positional encoding, so the layer
// is permutation-equivariant in the member axis.
//
// The forward cache is explicit so one parameter set can attend over many
// groups per step; gradients accumulate across backward calls.
template <class Scalar>
class MultiHeadSelfAttention {
 public:
  struct Cache {
    Matrix<Scalar> x, q, k, v, concat;
    std::vector<Matrix<Scalar>> weights;  // per head, Q x Q rows=queries
  };

  MultiHeadSelfAttention(Index dim, Index heads) : dim_(dim), heads_(heads) {
    if (heads <= 0 || dim % heads != 0) {
      throw std::invalid_argument(
          "attention width " + std::to_string(dim) +
          " must be divisible by head count " + std::to_string(heads));
    }
    head_dim_ = dim / heads;
    for (Matrix<Scalar>* w : {&wq_, &wk_, &wv_, &wo_}) w->setZero(dim, dim);
    for (Matrix<Scalar>* g : {&grad_wq_, &grad_wk_, &grad_wv_, &grad_wo_}) {
      g->setZero(dim, dim);
    }
  }

  void init(std::mt19937_64& rng) {
    for (Matrix<Scalar>* w : {&wq_, &wk_, &wv_, &wo_}) {
      fan_in_normal_init(*w, dim_, 1.0, rng);
    }
  }

  Index heads() const { return heads_; }
  Index head_dim() const { return head_dim_; }

  Matrix<Scalar> forward(const Matrix<Scalar>& members, Cache* cache) const {
    if (members.rows() != dim_) {
      throw std::invalid_argument("attention: member width mismatch");
    }
    const Index q_count = members.cols();
    if (q_count < 1) throw std::invalid_argument("attention: empty group");

    Matrix<Scalar> q = wq_ * members;
    Matrix<Scalar> k = wk_ * members;
    Matrix<Scalar> v = wv_ * members;
    const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(head_dim_));

    Matrix<Scalar> concat(dim_, q_count);
    std::vector<Matrix<Scalar>> weights;
    weights.reserve(static_cast<std::size_t>(heads_));
    for (Index h = 0; h < heads_; ++h) {
      const auto qh = q.middleRows(h * head_dim_, head_dim_);
      const auto kh = k.middleRows(h * head_dim_, head_dim_);
      const auto vh = v.middleRows(h * head_dim_, head_dim_);
      Matrix<Scalar> logits = (qh.transpose() * kh) * scale;  // rows = queries
      if (!logits.allFinite()) {
        throw std::runtime_error("attention produced non-finite logits");
      }
      Matrix<Scalar> w = softmax_rows(logits);
      concat.middleRows(h * head_dim_, head_dim_).noalias() = vh * w.transpose();
      weights.push_back(std::move(w));
    }
    Matrix<Scalar> out = wo_ * concat;
    if (cache) {
      cache->x = members;
      cache->q = std::move(q);
      cache->k = std::move(k);
      cache->v = std::move(v);
      cache->concat = std::move(concat);
      cache->weights = std::move(weights);
    }
    return out;
  }

  Matrix<Scalar> backward(const Matrix<Scalar>& dy, const Cache& cache) {
    const Index q_count = cache.x.cols();
    const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(head_dim_));

    grad_wo_.noalias() += dy * cache.concat.transpose();
    const Matrix<Scalar> dconcat = wo_.transpose() * dy;

    Matrix<Scalar> dq(dim_, q_count), dk(dim_, q_count), dv(dim_, q_count);
    for (Index h = 0; h < heads_; ++h) {
      const auto qh = cache.q.middleRows(h * head_dim_, head_dim_);
      const auto kh = cache.k.middleRows(h * head_dim_, head_dim_);
      const auto vh = cache.v.middleRows(h * head_dim_, head_dim_);
      const auto dout = dconcat.middleRows(h * head_dim_, head_dim_);
      const Matrix<Scalar>& w = cache.weights[static_cast<std::size_t>(h)];

      dv.middleRows(h * head_dim_, head_dim_).noalias() = dout * w;
      Matrix<Scalar> dw = dout.transpose() * vh;  // Q x Q, rows = queries

      // Softmax backward per row: dl = w .* (dw - rowwise dot(dw, w)).
      Matrix<Scalar> dlogits(q_count, q_count);
      for (Index a = 0; a < q_count; ++a) {
        const Scalar dot = dw.row(a).dot(w.row(a));
        dlogits.row(a) =
            (w.row(a).array() * (dw.row(a).array() - dot)).matrix();
      }
      dlogits *= scale;

      dq.middleRows(h * head_dim_, head_dim_).noalias() =
          kh * dlogits.transpose();
      dk.middleRows(h * head_dim_, head_dim_).noalias() = qh * dlogits;
    }

    grad_wq_.noalias() += dq * cache.x.transpose();
    grad_wk_.noalias() += dk * cache.x.transpose();
    grad_wv_.noalias() += dv * cache.x.transpose();
    return wq_.transpose() * dq + wk_.transpose() * dk + wv_.transpose() * dv;
  }

  void collect(ParamList<Scalar>& out, const std::string& prefix) {
    out.push_back({prefix + ".wq", &wq_, &grad_wq_});
    out.push_back({prefix + ".wk", &wk_, &grad_wk_});
    out.push_back({prefix + ".wv", &wv_, &grad_wv_});
    out.push_back({prefix + ".wo", &wo_, &grad_wo_});
  }

  Matrix<Scalar>& value_weight() { return wv_; }
  Matrix<Scalar>& output_weight() { return wo_; }
  Matrix<Scalar>& query_weight() { return wq_; }
  Matrix<Scalar>& key_weight() { return wk_; }

 private:
  Index dim_, heads_, head_dim_;
  Matrix<Scalar> wq_, wk_, wv_, wo_;
  Matrix<Scalar> grad_wq_, grad_wk_, grad_wv_, grad_wo_;
};

}  // namespace memhacl
