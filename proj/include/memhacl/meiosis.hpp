#pragma once

#include <numeric>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "memhacl/sampler.hpp"

namespace memhacl {

// Crossover split position c: the exchanged prefix is c timepoints long,
// constrained to 1 < c < M-1.
struct SplitPosition {
  Index c = 2;

  void validate(Index timepoints) const {
    if (!(c > 1 && c < timepoints - 1)) {
      throw std::invalid_argument(
          "split position c=" + std::to_string(c) + " violates 1 < c < M-1 (M=" +
          std::to_string(timepoints) + ")");
    }
  }
};

inline SplitPosition random_split_position(Index timepoints,
                                           std::mt19937_64& rng) {
  if (timepoints < 4) {
    throw std::invalid_argument("need M >= 4 for a valid split position");
  }
  std::uniform_int_distribution<Index> dist(2, timepoints - 2);
  return SplitPosition{dist(rng)};
}

// Swaps the first c timepoints of two equally shaped signals, all channels
// together: {A, B} -> {B[:,0:c] | A[:,c:], A[:,0:c] | B[:,c:]}.
template <class DerivedA, class DerivedB>
std::pair<Matrix<typename DerivedA::Scalar>, Matrix<typename DerivedA::Scalar>>
crossover_signals(const Eigen::MatrixBase<DerivedA>& a,
                  const Eigen::MatrixBase<DerivedB>& b, SplitPosition c) {
  static_assert(std::is_same_v<typename DerivedA::Scalar,
                               typename DerivedB::Scalar>);
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("crossover requires equally shaped signals");
  }
  c.validate(a.cols());
  using S = typename DerivedA::Scalar;
  Matrix<S> a_out(a.rows(), a.cols());
  Matrix<S> b_out(b.rows(), b.cols());
  a_out.leftCols(c.c) = b.leftCols(c.c);
  a_out.rightCols(a.cols() - c.c) = a.rightCols(a.cols() - c.c);
  b_out.leftCols(c.c) = a.leftCols(c.c);
  b_out.rightCols(b.cols() - c.c) = b.rightCols(b.cols() - c.c);
  return {std::move(a_out), std::move(b_out)};
}

template <class Scalar>
std::pair<MESample<Scalar>, MESample<Scalar>> crossover(
    const MESample<Scalar>& a, const MESample<Scalar>& b, SplitPosition c) {
  if (!(a.layout == b.layout)) {
    throw std::invalid_argument("crossover requires identical modality layouts");
  }
  auto [da, db] = crossover_signals(a.data, b.data, c);
  return {MESample<Scalar>{std::move(da), a.sample_rate, a.layout},
          MESample<Scalar>{std::move(db), b.sample_rate, b.layout}};
}

// Two homologous groups obtained from one clip-aligned group: pair members
// randomly, cross each pair over at c, send the two outputs of every pair to
// opposite sides.
template <class Scalar>
std::pair<std::vector<MESample<Scalar>>, std::vector<MESample<Scalar>>>
meiosis_group(const std::vector<MESample<Scalar>>& group, SplitPosition c,
              std::mt19937_64& rng) {
  const auto n = static_cast<Index>(group.size());
  if (n == 0 || n % 2 != 0) {
    throw std::invalid_argument("meiosis needs an even, nonempty group");
  }
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<MESample<Scalar>> side_a, side_b;
  side_a.reserve(static_cast<std::size_t>(n / 2));
  side_b.reserve(static_cast<std::size_t>(n / 2));
  std::uniform_int_distribution<int> coin(0, 1);
  for (Index k = 0; k < n; k += 2) {
    auto [first, second] = crossover(group[order[k]], group[order[k + 1]], c);
    if (coin(rng) == 0) {
      side_a.push_back(std::move(first));
      side_b.push_back(std::move(second));
    } else {
      side_a.push_back(std::move(second));
      side_b.push_back(std::move(first));
    }
  }
  return {std::move(side_a), std::move(side_b)};
}

// 2P augmented groups from P sampled groups; pair (A_i, B_i) is the positive
// pair for clip clip_id[i].
struct AugmentedBatch {
  struct Pair {
    std::vector<MESample<float>> group_a;  // Q samples
    std::vector<MESample<float>> group_b;  // Q samples
    Index clip_id = 0;
  };
  std::vector<Pair> pairs;  // size P

  Index p() const { return static_cast<Index>(pairs.size()); }
  Index q() const {
    return pairs.empty() ? 0 : static_cast<Index>(pairs.front().group_a.size());
  }
};

// One split position c is shared by the whole batch.
inline AugmentedBatch meiosis_batch(const GroupBatch& batch, SplitPosition c,
                                    std::mt19937_64& rng) {
  AugmentedBatch out;
  out.pairs.reserve(batch.groups.size());
  for (std::size_t i = 0; i < batch.groups.size(); ++i) {
    auto [a, b] = meiosis_group(batch.groups[i], c, rng);
    out.pairs.push_back({std::move(a), std::move(b), batch.clip_ids[i]});
  }
  return out;
}

}  // namespace memhacl
