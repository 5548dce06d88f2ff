#pragma once

#include <stdexcept>
#include <string>

#include "memhacl/modality.hpp"
#include "memhacl/types.hpp"

namespace memhacl {

// One windowed multimodal signal segment: channels x timepoints.
template <class Scalar>
struct MESample {
  Matrix<Scalar> data;  // C x M
  double sample_rate = 0.0;
  ModalityLayout layout;

  Index channels() const { return data.rows(); }
  Index timepoints() const { return data.cols(); }

  void validate() const {
    if (data.cols() <= 2) {
      throw std::invalid_argument(
          "sample has M=" + std::to_string(data.cols()) +
          " timepoints; need M > 2 for a valid crossover split position");
    }
    if (!data.allFinite()) {
      throw std::invalid_argument("sample contains non-finite values");
    }
    layout.validate(data.rows());
  }

  template <class Other>
  MESample<Other> cast() const {
    return MESample<Other>{data.template cast<Other>(), sample_rate, layout};
  }
};

using MESampleF = MESample<float>;
using MESampleD = MESample<double>;

struct RatingRecord {
  int subject_id = 0;
  int clip_id = 0;
  double valence = 0.0;  // in [1, 9]
  double arousal = 0.0;  // in [1, 9]

  void validate() const {
    auto in_range = [](double r) { return r >= 1.0 && r <= 9.0; };
    if (!in_range(valence) || !in_range(arousal)) {
      throw std::invalid_argument(
          "rating out of [1,9] for subject " + std::to_string(subject_id) +
          ", clip " + std::to_string(clip_id) + ": valence=" +
          std::to_string(valence) + ", arousal=" + std::to_string(arousal));
    }
  }
};

struct Labels {
  int valence_binary = 0;  // 1 iff valence > threshold
  int arousal_binary = 0;  // 1 iff arousal > threshold
  int four_class = 0;      // 2*arousal_binary + valence_binary

  friend bool operator==(const Labels&, const Labels&) = default;
};

// High iff rating is strictly greater than the threshold (default 5.0).
// Four-class encoding: 0=LV/LA, 1=HV/LA, 2=LV/HA, 3=HV/HA.
inline Labels threshold_labels(const RatingRecord& record,
                               double threshold = 5.0) {
  Labels out;
  out.valence_binary = record.valence > threshold ? 1 : 0;
  out.arousal_binary = record.arousal > threshold ? 1 : 0;
  out.four_class = 2 * out.arousal_binary + out.valence_binary;
  return out;
}

enum class LabelTask { Valence, Arousal, FourClass };

inline int task_num_classes(LabelTask t) {
  return t == LabelTask::FourClass ? 4 : 2;
}

inline int task_label(const Labels& l, LabelTask t) {
  switch (t) {
    case LabelTask::Valence: return l.valence_binary;
    case LabelTask::Arousal: return l.arousal_binary;
    case LabelTask::FourClass: return l.four_class;
  }
  return 0;
}

std::string to_string(LabelTask t);
LabelTask label_task_from_string(const std::string& name);

}  // namespace memhacl
