#include "memhacl/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace memhacl {

std::string to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Test: return "test";
    case Split::Val: return "val";
  }
  return "train";
}

std::string to_string(LabelTask t) {
  switch (t) {
    case LabelTask::Valence: return "valence";
    case LabelTask::Arousal: return "arousal";
    case LabelTask::FourClass: return "four";
  }
  return "four";
}

LabelTask label_task_from_string(const std::string& name) {
  if (name == "valence") return LabelTask::Valence;
  if (name == "arousal") return LabelTask::Arousal;
  if (name == "four" || name == "four_class") return LabelTask::FourClass;
  throw std::invalid_argument("unknown label task: '" + name + "'");
}

LabeledDataset::LabeledDataset(Index clips, Index subjects, Index channels,
                               Index timepoints, double sample_rate,
                               ModalityLayout layout)
    : clips_(clips),
      subjects_(subjects),
      channels_(channels),
      timepoints_(timepoints),
      sample_rate_(sample_rate),
      layout_(std::move(layout)) {
  if (clips <= 0 || subjects <= 0 || channels <= 0 || timepoints <= 0) {
    throw std::invalid_argument("dataset dimensions must be positive");
  }
  layout_.validate(channels_);
  storage_.assign(static_cast<std::size_t>(clips) * subjects * channels *
                      timepoints,
                  0.0f);
}

Eigen::Map<const RowMatrix<float>> LabeledDataset::sample_view(
    Index clip, Index subject) const {
  const std::size_t offset = static_cast<std::size_t>(flat_index(clip, subject)) *
                             channels_ * timepoints_;
  return {storage_.data() + offset, channels_, timepoints_};
}

MESample<float> LabeledDataset::sample(Index clip, Index subject) const {
  return {sample_view(clip, subject), sample_rate_, layout_};
}

void LabeledDataset::set_sample(Index clip, Index subject,
                                const Matrix<float>& data) {
  if (data.rows() != channels_ || data.cols() != timepoints_) {
    throw std::invalid_argument("sample shape mismatch in set_sample");
  }
  const std::size_t offset = static_cast<std::size_t>(flat_index(clip, subject)) *
                             channels_ * timepoints_;
  Eigen::Map<RowMatrix<float>>(storage_.data() + offset, channels_,
                               timepoints_) = data;
}

void LabeledDataset::set_ratings(std::vector<RatingRecord> ratings,
                                 double threshold) {
  if (static_cast<Index>(ratings.size()) != clips_ * subjects_) {
    throw std::invalid_argument(
        "ratings table has " + std::to_string(ratings.size()) +
        " records, expected clips*subjects = " +
        std::to_string(clips_ * subjects_));
  }
  ratings_ = std::move(ratings);
  relabel(threshold);
}

void LabeledDataset::relabel(double threshold) {
  labels_.clear();
  labels_.reserve(ratings_.size());
  for (const auto& r : ratings_) labels_.push_back(threshold_labels(r, threshold));
}

const Labels& LabeledDataset::labels(Index clip, Index subject) const {
  if (labels_.empty()) {
    throw std::logic_error("dataset has no labels (ratings missing)");
  }
  return labels_[static_cast<std::size_t>(flat_index(clip, subject))];
}

Split LabeledDataset::clip_split(Index clip) const {
  if (clip_split_.empty()) throw std::logic_error("dataset has no split yet");
  return clip_split_[static_cast<std::size_t>(clip)];
}

void LabeledDataset::set_clip_split(std::vector<Split> split) {
  if (static_cast<Index>(split.size()) != clips_) {
    throw std::invalid_argument("split assignment size mismatch");
  }
  clip_split_ = std::move(split);
}

std::vector<Index> LabeledDataset::clips_in_split(Split s) const {
  std::vector<Index> out;
  for (Index v = 0; v < clips_; ++v) {
    if (clip_split(v) == s) out.push_back(v);
  }
  return out;
}

void LabeledDataset::validate() const {
  layout_.validate(channels_);
  if (sample_rate_ <= 0) throw std::invalid_argument("sample_rate must be > 0");
  if (timepoints_ <= 2) {
    throw std::invalid_argument("dataset has M <= 2 timepoints");
  }
  for (std::size_t i = 0; i < storage_.size(); ++i) {
    if (!std::isfinite(storage_[i])) {
      const Index m = static_cast<Index>(i) % timepoints_;
      Index rest = static_cast<Index>(i) / timepoints_;
      const Index c = rest % channels_;
      rest /= channels_;
      const Index s = rest % subjects_;
      const Index v = rest / subjects_;
      throw std::invalid_argument(
          "non-finite value at [clip=" + std::to_string(v) + ", subject=" +
          std::to_string(s) + ", channel=" + std::to_string(c) +
          ", timepoint=" + std::to_string(m) + "]");
    }
  }
  for (const auto& r : ratings_) r.validate();
}

std::vector<MESample<float>> window_and_debaseline(
    const Matrix<float>& raw_trial, int baseline_seconds, int stimulus_seconds,
    double sample_rate, const ModalityLayout& layout) {
  if (sample_rate <= 0) throw std::invalid_argument("sample_rate must be > 0");
  if (baseline_seconds < 1) {
    throw std::invalid_argument("baseline_seconds must be >= 1");
  }
  const Index rate = static_cast<Index>(sample_rate);
  if (static_cast<double>(rate) != sample_rate) {
    throw std::invalid_argument("sample_rate must be an integer Hz");
  }
  const Index expected = (baseline_seconds + stimulus_seconds) * rate;
  if (raw_trial.cols() != expected) {
    throw std::invalid_argument(
        "trial has " + std::to_string(raw_trial.cols()) + " timepoints, need " +
        std::to_string(expected) + " = (baseline+stimulus)*rate");
  }

  // Element-wise average of the baseline one-second windows.
  Matrix<float> baseline_mean = Matrix<float>::Zero(raw_trial.rows(), rate);
  for (int b = 0; b < baseline_seconds; ++b) {
    baseline_mean += raw_trial.middleCols(b * rate, rate);
  }
  baseline_mean /= static_cast<float>(baseline_seconds);

  std::vector<MESample<float>> out;
  out.reserve(static_cast<std::size_t>(stimulus_seconds));
  for (int k = 0; k < stimulus_seconds; ++k) {
    MESample<float> seg;
    seg.data = raw_trial.middleCols((baseline_seconds + k) * rate, rate) -
               baseline_mean;
    seg.sample_rate = sample_rate;
    seg.layout = layout;
    out.push_back(std::move(seg));
  }
  return out;
}

std::vector<Split> split_dataset(LabeledDataset& dataset, SplitRatios ratios,
                                 std::uint64_t seed) {
  const double sum = ratios.train + ratios.test + ratios.val;
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("split ratios must sum to 1");
  }
  const Index v = dataset.num_clips();
  if (v < 3) throw std::invalid_argument("need at least 3 clips to split");

  const Index n_train = static_cast<Index>(std::floor(ratios.train * v));
  const Index n_test = static_cast<Index>(std::floor(ratios.test * v));

  std::vector<Index> order(static_cast<std::size_t>(v));
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<Split> split(static_cast<std::size_t>(v), Split::Val);
  for (Index i = 0; i < n_train; ++i) split[order[i]] = Split::Train;
  for (Index i = n_train; i < n_train + n_test; ++i) split[order[i]] = Split::Test;
  dataset.set_clip_split(split);
  return split;
}

SplitCounts split_counts(const LabeledDataset& dataset) {
  SplitCounts c;
  for (Index v = 0; v < dataset.num_clips(); ++v) {
    switch (dataset.clip_split(v)) {
      case Split::Train: ++c.train_clips; break;
      case Split::Test: ++c.test_clips; break;
      case Split::Val: ++c.val_clips; break;
    }
  }
  c.train_segments = c.train_clips * dataset.num_subjects();
  c.test_segments = c.test_clips * dataset.num_subjects();
  c.val_segments = c.val_clips * dataset.num_subjects();
  return c;
}

FinetuneView reshape_for_finetune(const LabeledDataset& dataset, Split split) {
  FinetuneView view;
  view.split = split;
  view.clips = dataset.clips_in_split(split);
  view.subjects = dataset.num_subjects();
  return view;
}

LabeledDataset select_modalities(const LabeledDataset& dataset,
                                 const std::vector<Modality>& keep,
                                 double label_threshold) {
  const ModalityLayout reduced = dataset.layout().select(keep);
  std::vector<Index> rows;
  for (std::size_t i = 0; i < dataset.layout().entries.size(); ++i) {
    const auto& e = dataset.layout().entries[i];
    if (std::find_if(reduced.entries.begin(), reduced.entries.end(),
                     [&](const ModalityEntry& r) {
                       return r.modality == e.modality;
                     }) == reduced.entries.end()) {
      continue;
    }
    const Index off = dataset.layout().channel_offset(i);
    for (Index c = 0; c < e.channels; ++c) rows.push_back(off + c);
  }

  LabeledDataset out(dataset.num_clips(), dataset.num_subjects(),
                     static_cast<Index>(rows.size()), dataset.timepoints(),
                     dataset.sample_rate(), reduced);
  Matrix<float> buffer(static_cast<Index>(rows.size()), dataset.timepoints());
  for (Index v = 0; v < dataset.num_clips(); ++v) {
    for (Index s = 0; s < dataset.num_subjects(); ++s) {
      const auto src = dataset.sample_view(v, s);
      for (std::size_t r = 0; r < rows.size(); ++r) {
        buffer.row(static_cast<Index>(r)) = src.row(rows[r]);
      }
      out.set_sample(v, s, buffer);
    }
  }
  if (dataset.has_ratings()) {
    out.set_ratings(dataset.ratings(), label_threshold);
  }
  if (dataset.has_split()) {
    std::vector<Split> split;
    split.reserve(static_cast<std::size_t>(dataset.num_clips()));
    for (Index v = 0; v < dataset.num_clips(); ++v) {
      split.push_back(dataset.clip_split(v));
    }
    out.set_clip_split(std::move(split));
  }
  return out;
}

}  // namespace memhacl
