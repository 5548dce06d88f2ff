#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "memhacl/nn/params.hpp"

namespace memhacl {

// Adam with bias correction. State slots are bound to a parameter list once
// and keyed by position, so the list must be stable across steps.
template <class Scalar>
class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void bind(const ParamList<Scalar>& params) {
    m_.clear();
    v_.clear();
    for (const auto& p : params) {
      m_.push_back(Matrix<Scalar>::Zero(p.value->rows(), p.value->cols()));
      v_.push_back(Matrix<Scalar>::Zero(p.value->rows(), p.value->cols()));
    }
    step_ = 0;
  }

  void step(const ParamList<Scalar>& params) {
    if (m_.size() != params.size()) {
      throw std::logic_error("Adam state not bound to this parameter list");
    }
    ++step_;
    const Scalar bc1 = Scalar(1) - std::pow(Scalar(beta1_), Scalar(step_));
    const Scalar bc2 = Scalar(1) - std::pow(Scalar(beta2_), Scalar(step_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto& p = params[i];
      if (!p.grad) continue;
      if (!p.grad->allFinite()) {
        throw std::runtime_error("non-finite gradient in " + p.name);
      }
      auto& m = m_[i];
      auto& v = v_[i];
      m = Scalar(beta1_) * m + Scalar(1 - beta1_) * (*p.grad);
      v = (Scalar(beta2_) * v.array() +
           Scalar(1 - beta2_) * p.grad->array().square())
              .matrix();
      p.value->array() -= Scalar(lr_) * (m.array() / bc1) /
                          ((v.array() / bc2).sqrt() + Scalar(eps_));
    }
  }

  double learning_rate() const { return lr_; }
  void set_learning_rate(double lr) { lr_ = lr; }
  std::uint64_t step_count() const { return step_; }
  void set_step_count(std::uint64_t t) { step_ = t; }

  std::vector<Matrix<Scalar>>& first_moments() { return m_; }
  std::vector<Matrix<Scalar>>& second_moments() { return v_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::uint64_t step_ = 0;
  std::vector<Matrix<Scalar>> m_, v_;
};

}  // namespace memhacl
