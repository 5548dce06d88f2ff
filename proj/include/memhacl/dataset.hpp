#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "memhacl/modality.hpp"
#include "memhacl/sample.hpp"
#include "memhacl/types.hpp"

namespace memhacl {

enum class Split { Train, Test, Val };

std::string to_string(Split s);

// In-memory dataset: tensor [clips V x subjects S x 1 x C x M] (row-major),
// per-(clip,subject) ratings/labels, per-clip split assignment.
// Immutable after load; safe for concurrent reads.
class LabeledDataset {
 public:
  LabeledDataset() = default;
  LabeledDataset(Index clips, Index subjects, Index channels, Index timepoints,
                 double sample_rate, ModalityLayout layout);

  Index num_clips() const { return clips_; }
  Index num_subjects() const { return subjects_; }
  Index channels() const { return channels_; }
  Index timepoints() const { return timepoints_; }
  double sample_rate() const { return sample_rate_; }
  const ModalityLayout& layout() const { return layout_; }

  std::array<Index, 5> dims() const {
    return {clips_, subjects_, 1, channels_, timepoints_};
  }

  // Raw payload, row-major [V][S][C][M].
  std::vector<float>& storage() { return storage_; }
  const std::vector<float>& storage() const { return storage_; }

  Eigen::Map<const RowMatrix<float>> sample_view(Index clip,
                                                 Index subject) const;
  MESample<float> sample(Index clip, Index subject) const;
  void set_sample(Index clip, Index subject, const Matrix<float>& data);

  bool has_ratings() const { return !ratings_.empty(); }
  const std::vector<RatingRecord>& ratings() const { return ratings_; }

  // Requires one record per (clip, subject); relabels with the threshold.
  void set_ratings(std::vector<RatingRecord> ratings, double threshold = 5.0);
  void relabel(double threshold);

  const Labels& labels(Index clip, Index subject) const;

  bool has_split() const { return !clip_split_.empty(); }
  Split clip_split(Index clip) const;
  void set_clip_split(std::vector<Split> split);
  std::vector<Index> clips_in_split(Split s) const;

  // Validates payload finiteness (naming the offending index), layout
  // coverage and rating ranges.
  void validate() const;

 private:
  Index flat_index(Index clip, Index subject) const {
    return clip * subjects_ + subject;
  }

  Index clips_ = 0, subjects_ = 0, channels_ = 0, timepoints_ = 0;
  double sample_rate_ = 0.0;
  ModalityLayout layout_;
  std::vector<float> storage_;
  std::vector<RatingRecord> ratings_;   // indexed [clip*S + subject]
  std::vector<Labels> labels_;          // same indexing
  std::vector<Split> clip_split_;       // per clip
};

// Splits one raw trial [C x (baseline+stimulus)*rate] into stimulus_seconds
// non-overlapping one-second segments with the element-wise mean of the
// baseline one-second windows subtracted from each.
std::vector<MESample<float>> window_and_debaseline(
    const Matrix<float>& raw_trial, int baseline_seconds, int stimulus_seconds,
    double sample_rate, const ModalityLayout& layout);

struct SplitRatios {
  double train = 0.70;
  double test = 0.15;
  double val = 0.15;
};

// Seeded clip-level partition. Deterministic rounding:
// train = floor(train*V), test = floor(test*V), val = remainder.
std::vector<Split> split_dataset(LabeledDataset& dataset, SplitRatios ratios,
                                 std::uint64_t seed);

struct SplitCounts {
  Index train_clips = 0, test_clips = 0, val_clips = 0;
  Index train_segments = 0, test_segments = 0, val_segments = 0;
};

SplitCounts split_counts(const LabeledDataset& dataset);

// Flat (clip, subject) fine-tuning view of one split, in clip-major order:
// flat index k maps to (clips[k / S], k % S).
struct FinetuneView {
  Split split = Split::Train;
  std::vector<Index> clips;  // clips belonging to the split, ascending
  Index subjects = 0;

  Index size() const { return static_cast<Index>(clips.size()) * subjects; }
  std::pair<Index, Index> clip_subject(Index flat) const {
    return {clips[static_cast<std::size_t>(flat / subjects)], flat % subjects};
  }
};

FinetuneView reshape_for_finetune(const LabeledDataset& dataset, Split split);

// Restriction to a subset of modalities (channel rows are copied out in
// layout order); ratings and split assignment carry over.
LabeledDataset select_modalities(const LabeledDataset& dataset,
                                 const std::vector<Modality>& keep,
                                 double label_threshold = 5.0);

}  // namespace memhacl
