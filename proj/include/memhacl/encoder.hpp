#pragma once

#include <array>
#include <cmath>
#include <memory>
#include <optional>

#include "memhacl/nn/layers.hpp"

namespace memhacl {

// 1D residual encoder f: one sample (C x M) -> D-dim representation.
// 17 convolution layers: a kernel-9 stem plus 8 two-conv residual blocks.
// Within each block the first kernel runs along time, the second is a
// pointwise (length-1) convolution mixing feature channels. Time resolution
// halves (stride 2) wherever the width steps up; the head is a global
// average pool over time followed by a fully connected layer to D.
struct EncoderConfig {
  Index in_channels = 36;   // C
  Index timepoints = 128;   // M
  Index stem_kernel = 9;
  Index stem_pool_kernel = 3;
  Index stem_pool_stride = 2;
  std::array<Index, 8> block_kernels{15, 15, 11, 11, 7, 3, 3, 5};
  std::array<Index, 8> block_widths{64, 64, 128, 128, 256, 256, 512, 512};
  Index embed_dim = 512;    // D
  double width_multiplier = 1.0;

  Index scaled(Index w) const {
    return std::max<Index>(1, static_cast<Index>(std::llround(
                                  static_cast<double>(w) * width_multiplier)));
  }
  Index scaled_embed_dim() const { return scaled(embed_dim); }

  void validate() const {
    if (in_channels < 1) throw std::invalid_argument("encoder needs C >= 1");
    if (timepoints < 3) throw std::invalid_argument("encoder needs M >= 3");
    if (width_multiplier <= 0) {
      throw std::invalid_argument("width multiplier must be positive");
    }
  }
};

template <class Scalar>
class ResidualBlock1d {
 public:
  ResidualBlock1d(Index in_ch, Index out_ch, Index kernel, Index stride)
      : conv1_(in_ch, out_ch, kernel, stride),
        bn1_(out_ch),
        conv2_(out_ch, out_ch, 1, 1),
        bn2_(out_ch),
        projects_(in_ch != out_ch || stride != 1) {
    if (projects_) {
      proj_conv_.emplace(in_ch, out_ch, 1, stride);
      proj_bn_.emplace(out_ch);
    }
  }

  void init(std::mt19937_64& rng) {
    conv1_.init(rng);
    conv2_.init(rng);
    if (projects_) proj_conv_->init(rng, 1.0);
  }

  SeqBatch<Scalar> forward(const SeqBatch<Scalar>& x, Mode mode) {
    SeqBatch<Scalar> y = conv1_.forward(x, mode);
    y.data = bn1_.forward(y.data, mode);
    y.data = relu1_.forward(y.data, mode);
    y = conv2_.forward(y, mode);
    y.data = bn2_.forward(y.data, mode);

    SeqBatch<Scalar> shortcut;
    if (projects_) {
      shortcut = proj_conv_->forward(x, mode);
      shortcut.data = proj_bn_->forward(shortcut.data, mode);
    } else {
      shortcut = x;
    }
    y.data += shortcut.data;
    y.data = relu_out_.forward(y.data, mode);
    return y;
  }

  SeqBatch<Scalar> backward(const SeqBatch<Scalar>& dy_in) {
    SeqBatch<Scalar> dy = dy_in;
    dy.data = relu_out_.backward(dy.data);

    // Shortcut branch.
    SeqBatch<Scalar> dx_shortcut;
    if (projects_) {
      SeqBatch<Scalar> t = dy;
      t.data = proj_bn_->backward(t.data);
      dx_shortcut = proj_conv_->backward(t);
    } else {
      dx_shortcut = dy;
    }

    // Main branch.
    SeqBatch<Scalar> t = dy;
    t.data = bn2_.backward(t.data);
    t = conv2_.backward(t);
    t.data = relu1_.backward(t.data);
    t.data = bn1_.backward(t.data);
    SeqBatch<Scalar> dx = conv1_.backward(t);

    dx.data += dx_shortcut.data;
    return dx;
  }

  void collect(ParamList<Scalar>& out, const std::string& prefix) {
    conv1_.collect(out, prefix + ".conv1");
    bn1_.collect(out, prefix + ".bn1");
    conv2_.collect(out, prefix + ".conv2");
    bn2_.collect(out, prefix + ".bn2");
    if (projects_) {
      proj_conv_->collect(out, prefix + ".proj");
      proj_bn_->collect(out, prefix + ".proj_bn");
    }
  }

  void collect_state(ParamList<Scalar>& out, const std::string& prefix) {
    bn1_.collect_state(out, prefix + ".bn1");
    bn2_.collect_state(out, prefix + ".bn2");
    if (projects_) proj_bn_->collect_state(out, prefix + ".proj_bn");
  }

 private:
  Conv1d<Scalar> conv1_;
  BatchNorm1d<Scalar> bn1_;
  ReluLayer<Scalar> relu1_;
  Conv1d<Scalar> conv2_;
  BatchNorm1d<Scalar> bn2_;
  bool projects_;
  std::optional<Conv1d<Scalar>> proj_conv_;
  std::optional<BatchNorm1d<Scalar>> proj_bn_;
  ReluLayer<Scalar> relu_out_;
};

template <class Scalar>
class Encoder {
 public:
  explicit Encoder(const EncoderConfig& config)
      : config_(config),
        stem_(config.in_channels, config.scaled(config.block_widths[0]),
              config.stem_kernel, 1),
        stem_bn_(config.scaled(config.block_widths[0])),
        stem_pool_(config.stem_pool_kernel, config.stem_pool_stride),
        head_(config.scaled(config.block_widths[7]), config.scaled_embed_dim()) {
    config.validate();
    Index in_ch = config.scaled(config.block_widths[0]);
    for (int b = 0; b < 8; ++b) {
      const Index out_ch = config.scaled(config.block_widths[b]);
      const Index stride = out_ch != in_ch ? 2 : 1;
      blocks_.push_back(std::make_unique<ResidualBlock1d<Scalar>>(
          in_ch, out_ch, config.block_kernels[b], stride));
      in_ch = out_ch;
    }
  }

  const EncoderConfig& config() const { return config_; }
  Index embed_dim() const { return config_.scaled_embed_dim(); }

  void init(std::mt19937_64& rng) {
    stem_.init(rng);
    for (auto& b : blocks_) b->init(rng);
    head_.init(rng, 1.0);
  }

  // Input: batch of samples, channels x (n * M); output: D x n embeddings.
  Matrix<Scalar> forward(const SeqBatch<Scalar>& x, Mode mode) {
    if (x.channels() != config_.in_channels || x.len != config_.timepoints) {
      throw std::invalid_argument(
          "encoder input shape (" + std::to_string(x.channels()) + " x " +
          std::to_string(x.len) + ") does not match configured (" +
          std::to_string(config_.in_channels) + " x " +
          std::to_string(config_.timepoints) + ")");
    }
    SeqBatch<Scalar> y = stem_.forward(x, mode);
    y.data = stem_bn_.forward(y.data, mode);
    y.data = stem_relu_.forward(y.data, mode);
    y = stem_pool_.forward(y, mode);
    for (auto& b : blocks_) y = b->forward(y, mode);
    Matrix<Scalar> pooled = avg_pool_.forward(y, mode);
    return head_.forward(pooled, mode);
  }

  // Gradient of the last train-mode forward; returns d(input).
  SeqBatch<Scalar> backward(const Matrix<Scalar>& dembed) {
    Matrix<Scalar> dpool = head_.backward(dembed);
    SeqBatch<Scalar> dy = avg_pool_.backward(dpool);
    for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) {
      dy = (*it)->backward(dy);
    }
    dy = stem_pool_.backward(dy);
    dy.data = stem_relu_.backward(dy.data);
    dy.data = stem_bn_.backward(dy.data);
    return stem_.backward(dy);
  }

  void collect(ParamList<Scalar>& out, const std::string& prefix = "encoder") {
    stem_.collect(out, prefix + ".stem");
    stem_bn_.collect(out, prefix + ".stem_bn");
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      blocks_[b]->collect(out, prefix + ".block" + std::to_string(b));
    }
    head_.collect(out, prefix + ".head");
  }

  void collect_state(ParamList<Scalar>& out,
                     const std::string& prefix = "encoder") {
    stem_bn_.collect_state(out, prefix + ".stem_bn");
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      blocks_[b]->collect_state(out, prefix + ".block" + std::to_string(b));
    }
  }

 private:
  EncoderConfig config_;
  Conv1d<Scalar> stem_;
  BatchNorm1d<Scalar> stem_bn_;
  ReluLayer<Scalar> stem_relu_;
  MaxPool1d<Scalar> stem_pool_;
  std::vector<std::unique_ptr<ResidualBlock1d<Scalar>>> blocks_;
  GlobalAvgPool<Scalar> avg_pool_;
  Linear<Scalar> head_;
};

// Vectorized encode; train mode computes batch-norm statistics over the batch.
template <class Scalar>
Matrix<Scalar> encode_batch(Encoder<Scalar>& encoder,
                            const std::vector<MESample<Scalar>>& samples,
                            Mode mode) {
  return encoder.forward(seq_batch_from_samples(samples), mode);
}

template <class Scalar>
Vector<Scalar> encode(Encoder<Scalar>& encoder, const MESample<Scalar>& sample,
                      Mode mode) {
  return encode_batch(encoder, std::vector<MESample<Scalar>>{sample}, mode)
      .col(0);
}

}  // namespace memhacl
