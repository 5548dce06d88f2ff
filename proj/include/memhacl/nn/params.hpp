#pragma once

#include <random>
#include <string>
#include <vector>

#include "memhacl/types.hpp"

namespace memhacl {

enum class Mode { Train, Eval };

// Named view of one parameter (or state) tensor and its gradient slot.
// State tensors (batch-norm running statistics) carry grad == nullptr.
template <class Scalar>
struct TensorRef {
  std::string name;
  Matrix<Scalar>* value = nullptr;
  Matrix<Scalar>* grad = nullptr;
};

template <class Scalar>
using ParamList = std::vector<TensorRef<Scalar>>;

template <class Scalar>
void zero_grads(const ParamList<Scalar>& params) {
  for (const auto& p : params) {
    if (p.grad) p.grad->setZero();
  }
}

template <class Scalar>
Index param_count(const ParamList<Scalar>& params) {
  Index n = 0;
  for (const auto& p : params) n += p.value->size();
  return n;
}

// Fan-in-scaled normal init; gain 2 for layers feeding a ReLU, 1 otherwise.
template <class Scalar>
void fan_in_normal_init(Matrix<Scalar>& w, Index fan_in, double gain,
                        std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, std::sqrt(gain / double(fan_in)));
  for (Index j = 0; j < w.cols(); ++j) {
    for (Index i = 0; i < w.rows(); ++i) {
      w(i, j) = static_cast<Scalar>(dist(rng));
    }
  }
}

}  // namespace memhacl
