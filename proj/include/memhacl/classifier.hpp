#pragma once

#include <array>
#include <cmath>

#include "memhacl/nn/layers.hpp"

namespace memhacl {

// Fine-tuning head c: three fully connected layers D -> 256 -> 128 -> K with
// batch norm after the first two, ReLU and dropout 0.5; nothing after the
// output layer.
struct ClassifierConfig {
  Index input_dim = 512;
  std::array<Index, 2> hidden{256, 128};
  Index num_classes = 4;  // K in {2, 4}
  double dropout = 0.5;
  double width_multiplier = 1.0;

  Index scaled(Index w) const {
    return std::max<Index>(1, static_cast<Index>(std::llround(
                                  static_cast<double>(w) * width_multiplier)));
  }

  void validate() const {
    if (num_classes != 2 && num_classes != 4) {
      throw std::invalid_argument("classifier supports K in {2, 4}");
    }
    if (input_dim < 1) throw std::invalid_argument("classifier input dim >= 1");
  }
};

template <class Scalar>
class Classifier {
 public:
  explicit Classifier(const ClassifierConfig& config)
      : config_(config),
        fc1_(config.input_dim, config.scaled(config.hidden[0])),
        bn1_(config.scaled(config.hidden[0])),
        drop1_(config.dropout),
        fc2_(config.scaled(config.hidden[0]), config.scaled(config.hidden[1])),
        bn2_(config.scaled(config.hidden[1])),
        drop2_(config.dropout),
        fc3_(config.scaled(config.hidden[1]), config.num_classes) {
    config.validate();
  }

  const ClassifierConfig& config() const { return config_; }
  Index num_classes() const { return config_.num_classes; }

  void init(std::mt19937_64& rng) {
    fc1_.init(rng);
    fc2_.init(rng);
    fc3_.init(rng, 1.0);
  }

  // Embeddings D x n -> logits K x n.
  Matrix<Scalar> forward(const Matrix<Scalar>& embeddings, Mode mode,
                         std::mt19937_64& rng) {
    Matrix<Scalar> z = fc1_.forward(embeddings, mode);
    z = bn1_.forward(z, mode);
    z = relu1_.forward(z, mode);
    z = drop1_.forward(z, mode, rng);
    z = fc2_.forward(z, mode);
    z = bn2_.forward(z, mode);
    z = relu2_.forward(z, mode);
    z = drop2_.forward(z, mode, rng);
    return fc3_.forward(z, mode);
  }

  Matrix<Scalar> backward(const Matrix<Scalar>& dlogits) {
    Matrix<Scalar> d = fc3_.backward(dlogits);
    d = drop2_.backward(d);
    d = relu2_.backward(d);
    d = bn2_.backward(d);
    d = fc2_.backward(d);
    d = drop1_.backward(d);
    d = relu1_.backward(d);
    d = bn1_.backward(d);
    return fc1_.backward(d);
  }

  void collect(ParamList<Scalar>& out, const std::string& prefix = "classifier") {
    fc1_.collect(out, prefix + ".fc1");
    bn1_.collect(out, prefix + ".bn1");
    fc2_.collect(out, prefix + ".fc2");
    bn2_.collect(out, prefix + ".bn2");
    fc3_.collect(out, prefix + ".fc3");
  }

  void collect_state(ParamList<Scalar>& out,
                     const std::string& prefix = "classifier") {
    bn1_.collect_state(out, prefix + ".bn1");
    bn2_.collect_state(out, prefix + ".bn2");
  }

  Linear<Scalar>& output_layer() { return fc3_; }

 private:
  ClassifierConfig config_;
  Linear<Scalar> fc1_;
  BatchNorm1d<Scalar> bn1_;
  ReluLayer<Scalar> relu1_;
  Dropout<Scalar> drop1_;
  Linear<Scalar> fc2_;
  BatchNorm1d<Scalar> bn2_;
  ReluLayer<Scalar> relu2_;
  Dropout<Scalar> drop2_;
  Linear<Scalar> fc3_;
};

}  // namespace memhacl
