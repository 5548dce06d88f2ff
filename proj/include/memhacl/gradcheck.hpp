#pragma once

#include <algorithm>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "memhacl/nn/params.hpp"

namespace memhacl {

struct GradCheckBlock {
  std::string name;
  Index coords_checked = 0;
  double max_rel_error = 0.0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckBlock> blocks;
  double max_rel_error = 0.0;

  bool passed(double tolerance) const { return max_rel_error < tolerance; }
};

// Central finite differences against analytic gradients.
//
// `loss_fn` must be a pure, deterministic function of the current parameter
// values (the caller reseeds any dropout stream per evaluation); `grad_fn`
// evaluates the same function and fills the gradient slots of `params`.
// Per-coordinate error is |analytic - numeric| / max(1, |analytic|,
// |numeric|); up to `coords_per_block` coordinates are sampled per tensor.
template <class Scalar>
GradCheckReport gradient_check(const ParamList<Scalar>& params,
                               const std::function<Scalar()>& loss_fn,
                               const std::function<void()>& grad_fn,
                               Index coords_per_block, std::mt19937_64& rng,
                               double step_scale = 1e-5) {
  zero_grads(params);
  grad_fn();
  std::vector<Matrix<Scalar>> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params) analytic.push_back(*p.grad);

  GradCheckReport report;
  for (std::size_t b = 0; b < params.size(); ++b) {
    const auto& p = params[b];
    if (!p.grad) continue;
    GradCheckBlock block;
    block.name = p.name;

    const Index numel = p.value->size();
    std::vector<Index> coords(static_cast<std::size_t>(numel));
    for (Index i = 0; i < numel; ++i) coords[static_cast<std::size_t>(i)] = i;
    if (numel > coords_per_block) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(static_cast<std::size_t>(coords_per_block));
    }

    Scalar* data = p.value->data();
    for (Index idx : coords) {
      const Scalar original = data[idx];
      const Scalar h =
          static_cast<Scalar>(step_scale) *
          std::max(Scalar(1), std::abs(original));
      data[idx] = original + h;
      const Scalar lp = loss_fn();
      data[idx] = original - h;
      const Scalar lm = loss_fn();
      data[idx] = original;

      const double numeric = static_cast<double>((lp - lm) / (2 * h));
      const double exact = static_cast<double>(analytic[b].data()[idx]);
      const double rel = std::abs(exact - numeric) /
                         std::max({1.0, std::abs(exact), std::abs(numeric)});
      if (rel > block.max_rel_error) {
        block.max_rel_error = rel;
        block.worst_analytic = exact;
        block.worst_numeric = numeric;
      }
      ++block.coords_checked;
    }
    report.max_rel_error = std::max(report.max_rel_error, block.max_rel_error);
    report.blocks.push_back(std::move(block));
  }
  return report;
}

}  // namespace memhacl
