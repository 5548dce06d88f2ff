#include "memhacl/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "memhacl/rng.hpp"

namespace memhacl {

namespace {

// Band-limited waveform: a sum of three unit sinusoids with frequencies in
// [f_lo, f_hi] cycles per window, normalized to unit RMS.
Vector<double> band_waveform(Index m, double f_lo, double f_hi,
                             std::mt19937_64& rng) {
  std::uniform_real_distribution<double> freq(f_lo, f_hi);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  Vector<double> w = Vector<double>::Zero(m);
  for (int s = 0; s < 3; ++s) {
    const double f = freq(rng);
    const double ph = phase(rng);
    for (Index t = 0; t < m; ++t) {
      w(t) += std::sin(2.0 * std::numbers::pi * f * t / double(m) + ph);
    }
  }
  const double rms = std::sqrt(w.squaredNorm() / double(m));
  if (rms > 0) w /= rms;
  return w;
}

}  // namespace

LabeledDataset generate(const SynthSpec& spec) {
  spec.validate();
  const Index v = spec.clips, s = spec.subjects, c = spec.channels,
              m = spec.timepoints, d = spec.signature_dim;

  ModalityLayout layout;
  if (c >= 4) {
    // EEG gets the bulk, one channel each for the peripheral modalities.
    layout.entries = {{Modality::EEG, c - 3},
                      {Modality::GSR, 1},
                      {Modality::Resp, 1},
                      {Modality::Temp, 1}};
  } else {
    layout = single_modality_layout(Modality::EEG, c);
  }
  LabeledDataset dataset(v, s, c, m, spec.sample_rate, layout);

  // Balanced four-class assignment over clips, shuffled.
  std::mt19937_64 class_rng(derive_seed(spec.seed, "classes"));
  std::vector<int> clip_class(static_cast<std::size_t>(v));
  for (Index i = 0; i < v; ++i) clip_class[i] = static_cast<int>(i % 4);
  std::shuffle(clip_class.begin(), clip_class.end(), class_rng);

  // Clip signatures: low-band dims carry the valence level, high-band dims
  // the arousal level.
  std::mt19937_64 sig_rng(derive_seed(spec.seed, "signatures"));
  std::uniform_real_distribution<double> jitter(0.95, 1.05);
  std::vector<Matrix<double>> signatures(static_cast<std::size_t>(v));
  const Index low_dims = d / 2;
  for (Index clip = 0; clip < v; ++clip) {
    const int cls = clip_class[static_cast<std::size_t>(clip)];
    const bool valence_high = (cls & 1) != 0;
    const bool arousal_high = (cls >> 1) != 0;
    const double amp_low = (valence_high ? 1.6 : 0.55) * jitter(sig_rng);
    const double amp_high = (arousal_high ? 1.6 : 0.55) * jitter(sig_rng);
    Matrix<double> z(d, m);
    for (Index dim = 0; dim < d; ++dim) {
      const bool low = dim < low_dims;
      Vector<double> w = low ? band_waveform(m, 1.0, 3.0, sig_rng)
                             : band_waveform(m, 8.0, 16.0, sig_rng);
      z.row(dim) = (low ? amp_low : amp_high) * w.transpose();
    }
    signatures[static_cast<std::size_t>(clip)] = std::move(z);
  }

  // Ratings: identical for every subject, inside the class half-range.
  std::mt19937_64 rating_rng(derive_seed(spec.seed, "ratings"));
  std::uniform_real_distribution<double> high_rating(6.0, 8.5);
  std::uniform_real_distribution<double> low_rating(1.5, 4.5);
  std::vector<RatingRecord> ratings;
  ratings.reserve(static_cast<std::size_t>(v * s));
  std::vector<std::pair<double, double>> clip_ratings(
      static_cast<std::size_t>(v));
  for (Index clip = 0; clip < v; ++clip) {
    const int cls = clip_class[static_cast<std::size_t>(clip)];
    const double valence =
        (cls & 1) ? high_rating(rating_rng) : low_rating(rating_rng);
    const double arousal =
        (cls >> 1) ? high_rating(rating_rng) : low_rating(rating_rng);
    clip_ratings[static_cast<std::size_t>(clip)] = {valence, arousal};
  }
  for (Index clip = 0; clip < v; ++clip) {
    for (Index subject = 0; subject < s; ++subject) {
      ratings.push_back({static_cast<int>(subject), static_cast<int>(clip),
                         clip_ratings[static_cast<std::size_t>(clip)].first,
                         clip_ratings[static_cast<std::size_t>(clip)].second});
    }
  }

  // Subject-specific channel mixing around one base matrix.
  std::mt19937_64 mix_rng(derive_seed(spec.seed, "mixing"));
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double mix_scale = 1.0 / std::sqrt(static_cast<double>(d));
  Matrix<double> base_mix(c, d);
  for (Index j = 0; j < d; ++j) {
    for (Index i = 0; i < c; ++i) base_mix(i, j) = gauss(mix_rng) * mix_scale;
  }
  std::vector<Matrix<double>> mixing(static_cast<std::size_t>(s));
  for (Index subject = 0; subject < s; ++subject) {
    Matrix<double> delta(c, d);
    for (Index j = 0; j < d; ++j) {
      for (Index i = 0; i < c; ++i) delta(i, j) = gauss(mix_rng) * mix_scale;
    }
    mixing[static_cast<std::size_t>(subject)] =
        base_mix + spec.subject_noise * delta;
  }

  // Clean signals first, to calibrate the noise power against the actual
  // mean signal power.
  double signal_power = 0.0;
  std::vector<Matrix<double>> clean(static_cast<std::size_t>(v * s));
  for (Index clip = 0; clip < v; ++clip) {
    for (Index subject = 0; subject < s; ++subject) {
      Matrix<double> x = mixing[static_cast<std::size_t>(subject)] *
                         signatures[static_cast<std::size_t>(clip)];
      signal_power += x.squaredNorm() / static_cast<double>(x.size());
      clean[static_cast<std::size_t>(clip * s + subject)] = std::move(x);
    }
  }
  signal_power /= static_cast<double>(v * s);
  const double noise_sigma =
      std::isinf(spec.snr) ? 0.0 : std::sqrt(signal_power / spec.snr);

  std::mt19937_64 noise_rng(derive_seed(spec.seed, "noise"));
  for (Index clip = 0; clip < v; ++clip) {
    for (Index subject = 0; subject < s; ++subject) {
      Matrix<double>& x = clean[static_cast<std::size_t>(clip * s + subject)];
      if (noise_sigma > 0) {
        for (Index t = 0; t < m; ++t) {
          for (Index ch = 0; ch < c; ++ch) {
            x(ch, t) += noise_sigma * gauss(noise_rng);
          }
        }
      }
      dataset.set_sample(clip, subject, x.cast<float>());
    }
  }

  dataset.set_ratings(std::move(ratings));
  dataset.validate();
  return dataset;
}

SynthSelfCheck synth_self_check(const LabeledDataset& dataset) {
  const Index v = dataset.num_clips();
  const Index s = dataset.num_subjects();
  SynthSelfCheck check;
  check.chance = 1.0 / static_cast<double>(v);

  // Nearest-centroid clip probe on raw flattened signals.
  const Index dim = dataset.channels() * dataset.timepoints();
  Matrix<double> centroids = Matrix<double>::Zero(dim, v);
  for (Index clip = 0; clip < v; ++clip) {
    for (Index subject = 0; subject < s; ++subject) {
      const auto view = dataset.sample_view(clip, subject);
      centroids.col(clip) +=
          Eigen::Map<const Vector<float>>(view.data(), dim).cast<double>();
    }
    centroids.col(clip) /= static_cast<double>(s);
  }
  Index hits = 0;
  for (Index clip = 0; clip < v; ++clip) {
    for (Index subject = 0; subject < s; ++subject) {
      const auto view = dataset.sample_view(clip, subject);
      const Vector<double> x =
          Eigen::Map<const Vector<float>>(view.data(), dim).cast<double>();
      Index best = 0;
      (centroids.colwise() - x).colwise().squaredNorm().minCoeff(&best);
      if (best == clip) ++hits;
    }
  }
  check.centroid_probe_accuracy =
      static_cast<double>(hits) / static_cast<double>(v * s);

  // Mean Pearson correlation between subject pairs, within vs between clips.
  const auto pearson = [&](Index clip_a, Index subj_a, Index clip_b,
                           Index subj_b) {
    const auto va = dataset.sample_view(clip_a, subj_a);
    const auto vb = dataset.sample_view(clip_b, subj_b);
    const Vector<double> a =
        Eigen::Map<const Vector<float>>(va.data(), dim).cast<double>();
    const Vector<double> b =
        Eigen::Map<const Vector<float>>(vb.data(), dim).cast<double>();
    const Vector<double> ac = a.array() - a.mean();
    const Vector<double> bc = b.array() - b.mean();
    const double denom = ac.norm() * bc.norm();
    return denom > 0 ? ac.dot(bc) / denom : 0.0;
  };
  double within = 0.0;
  Index within_n = 0;
  double between = 0.0;
  Index between_n = 0;
  for (Index clip = 0; clip < v; ++clip) {
    for (Index a = 0; a < s; ++a) {
      for (Index b = a + 1; b < s; ++b) {
        within += pearson(clip, a, clip, b);
        ++within_n;
      }
    }
    const Index other = (clip + 1) % v;
    for (Index a = 0; a < s; ++a) {
      between += pearson(clip, a, other, a);
      ++between_n;
    }
  }
  check.within_clip_corr = within_n ? within / within_n : 0.0;
  check.between_clip_corr = between_n ? between / between_n : 0.0;

  check.class_prevalence = {0.0, 0.0, 0.0, 0.0};
  if (dataset.has_ratings()) {
    for (Index clip = 0; clip < v; ++clip) {
      for (Index subject = 0; subject < s; ++subject) {
        check.class_prevalence[static_cast<std::size_t>(
            dataset.labels(clip, subject).four_class)] += 1.0;
      }
    }
    for (auto& p : check.class_prevalence) p /= static_cast<double>(v * s);
  }
  return check;
}

}  // namespace memhacl
