#pragma once

#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "memhacl/nn/params.hpp"
#include "memhacl/nn/ops.hpp"
#include "memhacl/sample.hpp"

namespace memhacl {

// Batch of 1D multichannel sequences, stored channels x (n * len) with
// sample-major column blocks: columns [i*len, (i+1)*len) hold sample i.
template <class Scalar>
struct SeqBatch {
  Matrix<Scalar> data;
  Index n = 0;
  Index len = 0;

  Index channels() const { return data.rows(); }
  auto sample(Index i) { return data.middleCols(i * len, len); }
  auto sample(Index i) const { return data.middleCols(i * len, len); }
};

template <class Scalar>
SeqBatch<Scalar> seq_batch_from_samples(
    const std::vector<MESample<Scalar>>& samples) {
  if (samples.empty()) throw std::invalid_argument("empty sample batch");
  const Index c = samples.front().channels();
  const Index m = samples.front().timepoints();
  SeqBatch<Scalar> out;
  out.n = static_cast<Index>(samples.size());
  out.len = m;
  out.data.resize(c, out.n * m);
  for (Index i = 0; i < out.n; ++i) {
    if (samples[i].channels() != c || samples[i].timepoints() != m) {
      throw std::invalid_argument("inconsistent sample shapes in batch");
    }
    out.sample(i) = samples[i].data;
  }
  return out;
}

inline Index conv_out_len(Index in_len, Index stride) {
  return (in_len + stride - 1) / stride;  // same padding
}

// 1D convolution along time with same padding. Weight layout:
// out_ch x (in_ch * kernel); column-block t of a kernel row addresses
// input channel ci at tap t via row index ci*kernel + t.
template <class Scalar>
class Conv1d {
 public:
  Conv1d(Index in_ch, Index out_ch, Index kernel, Index stride = 1)
      : in_ch_(in_ch), out_ch_(out_ch), kernel_(kernel), stride_(stride) {
    weight_.setZero(out_ch, in_ch * kernel);
    bias_.setZero(out_ch, 1);
    grad_weight_.setZero(out_ch, in_ch * kernel);
    grad_bias_.setZero(out_ch, 1);
  }

  void init(std::mt19937_64& rng, double gain = 2.0) {
    fan_in_normal_init(weight_, in_ch_ * kernel_, gain, rng);
    bias_.setZero();
  }

  SeqBatch<Scalar> forward(const SeqBatch<Scalar>& x, Mode mode) {
    if (x.channels() != in_ch_) {
      throw std::invalid_argument("Conv1d: expected " + std::to_string(in_ch_) +
                                  " input channels, got " +
                                  std::to_string(x.channels()));
    }
    Matrix<Scalar> cols = im2col(x);
    SeqBatch<Scalar> y;
    y.n = x.n;
    y.len = conv_out_len(x.len, stride_);
    y.data.noalias() = weight_ * cols;
    y.data.colwise() += bias_.col(0);
    if (mode == Mode::Train) {
      cols_ = std::move(cols);
      in_len_ = x.len;
    }
    return y;
  }

  SeqBatch<Scalar> backward(const SeqBatch<Scalar>& dy) {
    grad_weight_.noalias() += dy.data * cols_.transpose();
    grad_bias_.col(0) += dy.data.rowwise().sum();
    const Matrix<Scalar> dcols = weight_.transpose() * dy.data;
    return col2im(dcols, dy.n, dy.len);
  }

  void collect(ParamList<Scalar>& out, const std::string& prefix) {
    out.push_back({prefix + ".weight", &weight_, &grad_weight_});
    out.push_back({prefix + ".bias", &bias_, &grad_bias_});
  }

  Index out_channels() const { return out_ch_; }

 private:
  Index pad_left(Index in_len) const {
    const Index out = conv_out_len(in_len, stride_);
    const Index total = std::max<Index>(0, (out - 1) * stride_ + kernel_ - in_len);
    return total / 2;
  }

  Matrix<Scalar> im2col(const SeqBatch<Scalar>& x) const {
    const Index out = conv_out_len(x.len, stride_);
    const Index pad = pad_left(x.len);
    Matrix<Scalar> cols = Matrix<Scalar>::Zero(in_ch_ * kernel_, x.n * out);
    for (Index i = 0; i < x.n; ++i) {
      const auto sample = x.sample(i);
      for (Index j = 0; j < out; ++j) {
        const Index start = j * stride_ - pad;
        const Index col = i * out + j;
        for (Index t = 0; t < kernel_; ++t) {
          const Index src = start + t;
          if (src < 0 || src >= x.len) continue;
          for (Index c = 0; c < in_ch_; ++c) {
            cols(c * kernel_ + t, col) = sample(c, src);
          }
        }
      }
    }
    return cols;
  }

  SeqBatch<Scalar> col2im(const Matrix<Scalar>& dcols, Index n,
                          Index out_len) const {
    SeqBatch<Scalar> dx;
    dx.n = n;
    dx.len = in_len_;
    dx.data = Matrix<Scalar>::Zero(in_ch_, n * in_len_);
    const Index pad = pad_left(in_len_);
    for (Index i = 0; i < n; ++i) {
      auto dsample = dx.sample(i);
      for (Index j = 0; j < out_len; ++j) {
        const Index start = j * stride_ - pad;
        const Index col = i * out_len + j;
        for (Index t = 0; t < kernel_; ++t) {
          const Index src = start + t;
          if (src < 0 || src >= in_len_) continue;
          for (Index c = 0; c < in_ch_; ++c) {
            dsample(c, src) += dcols(c * kernel_ + t, col);
          }
        }
      }
    }
    return dx;
  }

  Index in_ch_, out_ch_, kernel_, stride_;
  Matrix<Scalar> weight_, bias_, grad_weight_, grad_bias_;
  Matrix<Scalar> cols_;
  Index in_len_ = 0;
};

// Batch normalization over the column axis, one statistic per feature row.
// For sequence batches the columns span batch x time, for dense stages just
// the batch. Train mode normalizes with batch statistics and updates the
// running estimates; eval mode uses the running estimates only.
template <class Scalar>
class BatchNorm1d {
 public:
  explicit BatchNorm1d(Index features, Scalar momentum = Scalar(0.1),
                       Scalar eps = Scalar(1e-5))
      : features_(features), momentum_(momentum), eps_(eps) {
    gamma_.setOnes(features, 1);
    beta_.setZero(features, 1);
    grad_gamma_.setZero(features, 1);
    grad_beta_.setZero(features, 1);
    running_mean_.setZero(features, 1);
    running_var_.setOnes(features, 1);
  }

  Matrix<Scalar> forward(const Matrix<Scalar>& x, Mode mode) {
    if (x.rows() != features_) {
      throw std::invalid_argument("BatchNorm1d: feature count mismatch");
    }
    if (mode == Mode::Eval) {
      const Vector<Scalar> scale =
          gamma_.col(0).array() *
          (running_var_.col(0).array() + eps_).sqrt().inverse();
      Matrix<Scalar> y = x.colwise() - running_mean_.col(0);
      y.array().colwise() *= scale.array();
      y.colwise() += beta_.col(0);
      return y;
    }
    const auto n = static_cast<Scalar>(x.cols());
    const Vector<Scalar> mean = x.rowwise().mean();
    Matrix<Scalar> centered = x.colwise() - mean;
    const Vector<Scalar> var = centered.array().square().rowwise().mean();
    inv_std_ = (var.array() + eps_).sqrt().inverse();
    xhat_ = (centered.array().colwise() * inv_std_.array()).matrix();
    Matrix<Scalar> y = (xhat_.array().colwise() * gamma_.col(0).array()).matrix();
    y.colwise() += beta_.col(0);

    running_mean_.col(0) = (Scalar(1) - momentum_) * running_mean_.col(0) +
                           momentum_ * mean;
    running_var_.col(0) =
        (Scalar(1) - momentum_) * running_var_.col(0) + momentum_ * var;
    cols_ = n;
    return y;
  }

  Matrix<Scalar> backward(const Matrix<Scalar>& dy) {
    grad_gamma_.col(0) += (dy.array() * xhat_.array()).rowwise().sum();
    grad_beta_.col(0) += dy.rowwise().sum();

    // dx = inv_std/N * (N*dxhat - rowsum(dxhat) - xhat * rowsum(dxhat*xhat))
    const Matrix<Scalar> dxhat = dy.array().colwise() * gamma_.col(0).array();
    const Vector<Scalar> sum_dxhat = dxhat.rowwise().sum();
    const Vector<Scalar> sum_dxhat_xhat =
        (dxhat.array() * xhat_.array()).rowwise().sum();
    Matrix<Scalar> dx = cols_ * dxhat;
    dx.colwise() -= sum_dxhat;
    dx -= (xhat_.array().colwise() * sum_dxhat_xhat.array()).matrix();
    dx.array().colwise() *= inv_std_.array() / cols_;
    return dx;
  }

  void collect(ParamList<Scalar>& out, const std::string& prefix) {
    out.push_back({prefix + ".gamma", &gamma_, &grad_gamma_});
    out.push_back({prefix + ".beta", &beta_, &grad_beta_});
  }

  void collect_state(ParamList<Scalar>& out, const std::string& prefix) {
    out.push_back({prefix + ".running_mean", &running_mean_, nullptr});
    out.push_back({prefix + ".running_var", &running_var_, nullptr});
  }

 private:
  Index features_;
  Scalar momentum_, eps_;
  Matrix<Scalar> gamma_, beta_, grad_gamma_, grad_beta_;
  Matrix<Scalar> running_mean_, running_var_;
  Matrix<Scalar> xhat_;
  Vector<Scalar> inv_std_;
  Scalar cols_ = 1;
};

template <class Scalar>
class ReluLayer {
 public:
  Matrix<Scalar> forward(const Matrix<Scalar>& x, Mode mode) {
    if (mode == Mode::Train) {
      mask_ = (x.array() > Scalar(0)).template cast<Scalar>().matrix();
    }
    return relu(x);
  }

  Matrix<Scalar> backward(const Matrix<Scalar>& dy) const {
    return (dy.array() * mask_.array()).matrix();
  }

 private:
  Matrix<Scalar> mask_;
};

// Max pooling along time. Windows are clamped to the valid range, so no
// padding value ever wins.
template <class Scalar>
class MaxPool1d {
 public:
  MaxPool1d(Index kernel, Index stride) : kernel_(kernel), stride_(stride) {}

  SeqBatch<Scalar> forward(const SeqBatch<Scalar>& x, Mode mode) {
    const Index out = conv_out_len(x.len, stride_);
    const Index total_pad =
        std::max<Index>(0, (out - 1) * stride_ + kernel_ - x.len);
    const Index pad = total_pad / 2;
    SeqBatch<Scalar> y;
    y.n = x.n;
    y.len = out;
    y.data.resize(x.channels(), x.n * out);
    const bool record = mode == Mode::Train;
    if (record) {
      argmax_.assign(static_cast<std::size_t>(x.channels() * x.n * out), 0);
      in_len_ = x.len;
    }
    for (Index i = 0; i < x.n; ++i) {
      const auto sample = x.sample(i);
      for (Index j = 0; j < out; ++j) {
        const Index start = std::max<Index>(0, j * stride_ - pad);
        const Index stop = std::min(x.len, j * stride_ - pad + kernel_);
        for (Index c = 0; c < x.channels(); ++c) {
          Index best = start;
          Scalar best_val = sample(c, start);
          for (Index t = start + 1; t < stop; ++t) {
            if (sample(c, t) > best_val) {
              best_val = sample(c, t);
              best = t;
            }
          }
          y.data(c, i * out + j) = best_val;
          if (record) {
            argmax_[static_cast<std::size_t>((i * out + j) * x.channels() +
                                             c)] = best;
          }
        }
      }
    }
    return y;
  }

  SeqBatch<Scalar> backward(const SeqBatch<Scalar>& dy) const {
    SeqBatch<Scalar> dx;
    dx.n = dy.n;
    dx.len = in_len_;
    dx.data = Matrix<Scalar>::Zero(dy.channels(), dy.n * in_len_);
    for (Index i = 0; i < dy.n; ++i) {
      auto dsample = dx.sample(i);
      for (Index j = 0; j < dy.len; ++j) {
        for (Index c = 0; c < dy.channels(); ++c) {
          const Index src = argmax_[static_cast<std::size_t>(
              (i * dy.len + j) * dy.channels() + c)];
          dsample(c, src) += dy.data(c, i * dy.len + j);
        }
      }
    }
    return dx;
  }

 private:
  Index kernel_, stride_;
  std::vector<Index> argmax_;
  Index in_len_ = 0;
};

// Global average pool over time: SeqBatch -> channels x n matrix.
template <class Scalar>
class GlobalAvgPool {
 public:
  Matrix<Scalar> forward(const SeqBatch<Scalar>& x, Mode mode) {
    Matrix<Scalar> y(x.channels(), x.n);
    for (Index i = 0; i < x.n; ++i) y.col(i) = x.sample(i).rowwise().mean();
    if (mode == Mode::Train) len_ = x.len;
    return y;
  }

  SeqBatch<Scalar> backward(const Matrix<Scalar>& dy) const {
    SeqBatch<Scalar> dx;
    dx.n = dy.cols();
    dx.len = len_;
    dx.data.resize(dy.rows(), dx.n * len_);
    for (Index i = 0; i < dx.n; ++i) {
      dx.sample(i).colwise() = dy.col(i) / static_cast<Scalar>(len_);
    }
    return dx;
  }

 private:
  Index len_ = 1;
};

// Fully connected layer on features x batch matrices: y = W x + b.
template <class Scalar>
class Linear {
 public:
  Linear(Index in, Index out) : in_(in), out_(out) {
    weight_.setZero(out, in);
    bias_.setZero(out, 1);
    grad_weight_.setZero(out, in);
    grad_bias_.setZero(out, 1);
  }

  void init(std::mt19937_64& rng, double gain = 2.0) {
    fan_in_normal_init(weight_, in_, gain, rng);
    bias_.setZero();
  }

  Matrix<Scalar> forward(const Matrix<Scalar>& x, Mode mode) {
    if (x.rows() != in_) {
      throw std::invalid_argument("Linear: expected " + std::to_string(in_) +
                                  " input features, got " +
                                  std::to_string(x.rows()));
    }
    Matrix<Scalar> y = weight_ * x;
    y.colwise() += bias_.col(0);
    if (mode == Mode::Train) input_ = x;
    return y;
  }

  Matrix<Scalar> backward(const Matrix<Scalar>& dy) {
    grad_weight_.noalias() += dy * input_.transpose();
    grad_bias_.col(0) += dy.rowwise().sum();
    return weight_.transpose() * dy;
  }

  void collect(ParamList<Scalar>& out, const std::string& prefix) {
    out.push_back({prefix + ".weight", &weight_, &grad_weight_});
    out.push_back({prefix + ".bias", &bias_, &grad_bias_});
  }

  const Matrix<Scalar>& weight() const { return weight_; }
  Matrix<Scalar>& weight() { return weight_; }
  Matrix<Scalar>& bias() { return bias_; }

 private:
  Index in_, out_;
  Matrix<Scalar> weight_, bias_, grad_weight_, grad_bias_;
  Matrix<Scalar> input_;
};

// Inverted dropout: active in train mode only, scales kept units by 1/(1-p).
template <class Scalar>
class Dropout {
 public:
  explicit Dropout(double p) : p_(p) {
    if (p < 0.0 || p >= 1.0) throw std::invalid_argument("dropout p in [0,1)");
  }

  Matrix<Scalar> forward(const Matrix<Scalar>& x, Mode mode,
                         std::mt19937_64& rng) {
    if (mode == Mode::Eval || p_ == 0.0) {
      mask_.resize(0, 0);
      return x;
    }
    const Scalar scale = Scalar(1.0 / (1.0 - p_));
    std::bernoulli_distribution keep(1.0 - p_);
    mask_.resize(x.rows(), x.cols());
    for (Index j = 0; j < x.cols(); ++j) {
      for (Index i = 0; i < x.rows(); ++i) {
        mask_(i, j) = keep(rng) ? scale : Scalar(0);
      }
    }
    return (x.array() * mask_.array()).matrix();
  }

  Matrix<Scalar> backward(const Matrix<Scalar>& dy) const {
    if (mask_.size() == 0) return dy;
    return (dy.array() * mask_.array()).matrix();
  }

 private:
  double p_;
  Matrix<Scalar> mask_;
};

}  // namespace memhacl
