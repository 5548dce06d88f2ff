#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "memhacl/dataset.hpp"

namespace memhacl {

struct SamplerConfig {
  Index clips_per_batch = 8;   // P
  Index half_group = 2;        // Q
  std::uint64_t seed = 0;

  void validate(Index subjects) const {
    if (clips_per_batch < 2) {
      throw std::invalid_argument("P must be >= 2 (the loss needs negatives)");
    }
    if (half_group < 1) throw std::invalid_argument("Q must be >= 1");
    if (2 * half_group > subjects) {
      throw std::invalid_argument(
          "2Q = " + std::to_string(2 * half_group) + " exceeds subject count " +
          std::to_string(subjects));
    }
  }
};

// P stimulus-aligned groups of 2Q samples; group i holds the samples the
// selected 2Q subjects recorded for clip clip_ids[i].
struct GroupBatch {
  std::vector<Index> clip_ids;     // size P, distinct
  std::vector<Index> subject_ids;  // size 2Q, distinct, shared by all groups
  std::vector<std::vector<MESample<float>>> groups;  // P x 2Q

  Index p() const { return static_cast<Index>(clip_ids.size()); }
  Index group_size() const {
    return groups.empty() ? 0 : static_cast<Index>(groups.front().size());
  }
};

// One pass over the train-split clips in seeded shuffled order, emitting
// batches of P clips; a trailing batch of fewer than P clips is dropped so
// every batch contributes exactly 2P loss terms. Subjects are resampled
// independently per batch, without repetition within the batch.
class EpochIterator {
 public:
  EpochIterator(const LabeledDataset& dataset, SamplerConfig config)
      : dataset_(&dataset), config_(config), rng_(config.seed) {
    config_.validate(dataset.num_subjects());
    clip_order_ = dataset.clips_in_split(Split::Train);
    if (clip_order_.empty()) {
      throw std::invalid_argument("train split is empty");
    }
    std::shuffle(clip_order_.begin(), clip_order_.end(), rng_);
  }

  Index batches_per_epoch() const {
    return static_cast<Index>(clip_order_.size()) / config_.clips_per_batch;
  }

  std::optional<GroupBatch> next_batch() {
    const Index p = config_.clips_per_batch;
    if (cursor_ + p > static_cast<Index>(clip_order_.size())) {
      return std::nullopt;  // end of epoch; short remainder dropped
    }
    GroupBatch batch;
    batch.clip_ids.assign(clip_order_.begin() + cursor_,
                          clip_order_.begin() + cursor_ + p);
    cursor_ += p;

    std::vector<Index> subjects(
        static_cast<std::size_t>(dataset_->num_subjects()));
    std::iota(subjects.begin(), subjects.end(), Index{0});
    std::shuffle(subjects.begin(), subjects.end(), rng_);
    subjects.resize(static_cast<std::size_t>(2 * config_.half_group));
    batch.subject_ids = subjects;

    batch.groups.reserve(static_cast<std::size_t>(p));
    for (Index clip : batch.clip_ids) {
      std::vector<MESample<float>> group;
      group.reserve(subjects.size());
      for (Index s : subjects) group.push_back(dataset_->sample(clip, s));
      batch.groups.push_back(std::move(group));
    }
    return batch;
  }

 private:
  const LabeledDataset* dataset_;
  SamplerConfig config_;
  std::mt19937_64 rng_;
  std::vector<Index> clip_order_;
  Index cursor_ = 0;
};

inline EpochIterator new_epoch(const LabeledDataset& dataset,
                               SamplerConfig config) {
  return EpochIterator(dataset, config);
}

}  // namespace memhacl
