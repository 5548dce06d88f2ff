#pragma once

#include <array>
#include <cmath>

#include "memhacl/nn/attention.hpp"
#include "memhacl/nn/layers.hpp"

namespace memhacl {

// Group projector g: member-wise MLP lift from the encoder dimension up to
// the latent dimension H, 8-head self-attention over the group members, and
// an element-wise max pool over members into one H-dim group representation.
struct ProjectorConfig {
  Index input_dim = 512;                      // encoder embed dim D
  std::array<Index, 3> mlp_widths{1024, 2048, 4096};
  Index heads = 8;
  double dropout = 0.5;
  double width_multiplier = 1.0;

  Index scaled(Index w) const {
    return std::max<Index>(1, static_cast<Index>(std::llround(
                                  static_cast<double>(w) * width_multiplier)));
  }
  Index latent_dim() const { return scaled(mlp_widths[2]); }
  Index head_dim() const { return latent_dim() / heads; }

  void validate() const {
    if (input_dim < 1) throw std::invalid_argument("projector input dim >= 1");
    if (!(scaled(mlp_widths[0]) < scaled(mlp_widths[1]) &&
          scaled(mlp_widths[1]) < scaled(mlp_widths[2]))) {
      throw std::invalid_argument("projector widths must be increasing");
    }
    if (latent_dim() % heads != 0) {
      throw std::invalid_argument("latent dim must be divisible by head count");
    }
  }
};

template <class Scalar>
class Projector {
 public:
  explicit Projector(const ProjectorConfig& config)
      : config_(config),
        fc1_(config.input_dim, config.scaled(config.mlp_widths[0])),
        bn1_(config.scaled(config.mlp_widths[0])),
        fc2_(config.scaled(config.mlp_widths[0]),
             config.scaled(config.mlp_widths[1])),
        bn2_(config.scaled(config.mlp_widths[1])),
        dropout_(config.dropout),
        fc3_(config.scaled(config.mlp_widths[1]), config.latent_dim()),
        attention_(config.latent_dim(), config.heads) {
    config.validate();
  }

  const ProjectorConfig& config() const { return config_; }
  Index latent_dim() const { return config_.latent_dim(); }
  MultiHeadSelfAttention<Scalar>& attention() { return attention_; }

  void init(std::mt19937_64& rng) {
    fc1_.init(rng);
    fc2_.init(rng);
    fc3_.init(rng, 1.0);
    attention_.init(rng);
  }

  // Member-wise MLP: D x n -> H x n. Batch norm runs over all n members
  // given to the call; dropout is active in train mode only.
  Matrix<Scalar> lift(const Matrix<Scalar>& embeddings, Mode mode,
                      std::mt19937_64& rng) {
    Matrix<Scalar> z = fc1_.forward(embeddings, mode);
    z = bn1_.forward(z, mode);
    z = relu1_.forward(z, mode);
    z = fc2_.forward(z, mode);
    z = bn2_.forward(z, mode);
    z = relu2_.forward(z, mode);
    z = dropout_.forward(z, mode, rng);
    return fc3_.forward(z, mode);
  }

  Matrix<Scalar> lift_backward(const Matrix<Scalar>& dlifted) {
    Matrix<Scalar> d = fc3_.backward(dlifted);
    d = dropout_.backward(d);
    d = relu2_.backward(d);
    d = bn2_.backward(d);
    d = fc2_.backward(d);
    d = relu1_.backward(d);
    d = bn1_.backward(d);
    return fc1_.backward(d);
  }

  // Attention + max pool over one group of lifted members (H x Q).
  Matrix<Scalar> attend_pool(const Matrix<Scalar>& members, Mode mode) {
    typename MultiHeadSelfAttention<Scalar>::Cache* cache = nullptr;
    if (mode == Mode::Train) {
      group_caches_.emplace_back();
      cache = &group_caches_.back().attention;
    }
    Matrix<Scalar> attended = attention_.forward(members, cache);
    Vector<Scalar> pooled(attended.rows());
    std::vector<Index> argmax(static_cast<std::size_t>(attended.rows()));
    for (Index r = 0; r < attended.rows(); ++r) {
      Index best = 0;
      attended.row(r).maxCoeff(&best);
      argmax[static_cast<std::size_t>(r)] = best;
      pooled(r) = attended(r, best);
    }
    if (mode == Mode::Train) {
      group_caches_.back().argmax = std::move(argmax);
      group_caches_.back().members = attended.cols();
    }
    return pooled;
  }

  // Full composition over a flat batch of per-member embeddings ordered
  // group-major: D x (G*Q) -> H x G. Batch norm statistics span the whole
  // flat batch in train mode.
  Matrix<Scalar> forward_groups(const Matrix<Scalar>& embeddings,
                                Index group_size, Mode mode,
                                std::mt19937_64& rng) {
    if (group_size < 1 || embeddings.cols() % group_size != 0) {
      throw std::invalid_argument("group size must divide member count");
    }
    group_caches_.clear();
    const Index groups = embeddings.cols() / group_size;
    Matrix<Scalar> lifted = lift(embeddings, mode, rng);
    if (mode == Mode::Train) lifted_cols_ = lifted.cols();
    Matrix<Scalar> reps(latent_dim(), groups);
    for (Index g = 0; g < groups; ++g) {
      reps.col(g) =
          attend_pool(lifted.middleCols(g * group_size, group_size), mode);
    }
    return reps;
  }

  // Backward through pool, attention and lift; returns d(embeddings).
  Matrix<Scalar> backward_groups(const Matrix<Scalar>& dreps) {
    const Index groups = dreps.cols();
    if (static_cast<std::size_t>(groups) != group_caches_.size()) {
      throw std::logic_error("backward_groups without matching forward");
    }
    const Index group_size = lifted_cols_ / groups;
    Matrix<Scalar> dlifted(latent_dim(), lifted_cols_);
    for (Index g = 0; g < groups; ++g) {
      const auto& cache = group_caches_[static_cast<std::size_t>(g)];
      Matrix<Scalar> dattended =
          Matrix<Scalar>::Zero(latent_dim(), cache.members);
      for (Index r = 0; r < latent_dim(); ++r) {
        dattended(r, cache.argmax[static_cast<std::size_t>(r)]) = dreps(r, g);
      }
      dlifted.middleCols(g * group_size, group_size) =
          attention_.backward(dattended, cache.attention);
    }
    return lift_backward(dlifted);
  }

  // Single-group convenience: D x Q -> H-dim group representation.
  Vector<Scalar> group_project(const Matrix<Scalar>& embeddings, Mode mode,
                               std::mt19937_64& rng) {
    return forward_groups(embeddings, embeddings.cols(), mode, rng).col(0);
  }

  void collect(ParamList<Scalar>& out, const std::string& prefix = "projector") {
    fc1_.collect(out, prefix + ".fc1");
    bn1_.collect(out, prefix + ".bn1");
    fc2_.collect(out, prefix + ".fc2");
    bn2_.collect(out, prefix + ".bn2");
    fc3_.collect(out, prefix + ".fc3");
    attention_.collect(out, prefix + ".attention");
  }

  void collect_state(ParamList<Scalar>& out,
                     const std::string& prefix = "projector") {
    bn1_.collect_state(out, prefix + ".bn1");
    bn2_.collect_state(out, prefix + ".bn2");
  }

 private:
  struct GroupCache {
    typename MultiHeadSelfAttention<Scalar>::Cache attention;
    std::vector<Index> argmax;
    Index members = 0;
  };

  ProjectorConfig config_;
  Linear<Scalar> fc1_;
  BatchNorm1d<Scalar> bn1_;
  ReluLayer<Scalar> relu1_;
  Linear<Scalar> fc2_;
  BatchNorm1d<Scalar> bn2_;
  ReluLayer<Scalar> relu2_;
  Dropout<Scalar> dropout_;
  Linear<Scalar> fc3_;
  MultiHeadSelfAttention<Scalar> attention_;
  std::vector<GroupCache> group_caches_;
  Index lifted_cols_ = 0;
};

// Element-wise maximum over group members (H x Q -> H), the symmetric pool.
template <class Derived>
Vector<typename Derived::Scalar> group_pool(
    const Eigen::MatrixBase<Derived>& members) {
  if (members.cols() < 1) throw std::invalid_argument("empty group");
  return members.rowwise().maxCoeff();
}

}  // namespace memhacl
