#include "memhacl/model_checks.hpp"

namespace memhacl {

namespace {

SeqBatch<double> random_input(Index n, Index channels, Index timepoints,
                              std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  SeqBatch<double> x;
  x.n = n;
  x.len = timepoints;
  x.data.resize(channels, n * timepoints);
  for (Index j = 0; j < x.data.cols(); ++j) {
    for (Index i = 0; i < x.data.rows(); ++i) x.data(i, j) = gauss(rng);
  }
  return x;
}

}  // namespace

GradCheckReport check_contrastive_gradients(const ModelCheckConfig& config) {
  EncoderConfig ec;
  ec.in_channels = config.channels;
  ec.timepoints = config.timepoints;
  ec.width_multiplier = config.scale;
  ProjectorConfig pc;
  pc.input_dim = ec.scaled_embed_dim();
  pc.width_multiplier = config.scale;
  pc.dropout = config.dropout;

  PretrainModel<double> model(ec, pc);
  std::mt19937_64 init_rng(derive_seed(config.seed, "gradcheck-init"));
  model.init(init_rng);

  std::mt19937_64 data_rng(derive_seed(config.seed, "gradcheck-data"));
  const Index members = 2 * config.p_clips * config.q_half;
  const SeqBatch<double> x =
      random_input(members, config.channels, config.timepoints, data_rng);

  const std::uint64_t dropout_seed = derive_seed(config.seed, "gradcheck-drop");
  auto run = [&](bool want_grads) -> double {
    // Dropout reseeded per evaluation: the mask depends only on shapes, so
    // finite differences and the analytic pass see the same function.
    std::mt19937_64 dropout_rng(dropout_seed);
    Matrix<double> embeddings = model.encoder.forward(x, Mode::Train);
    Matrix<double> reps = model.projector.forward_groups(
        embeddings, config.q_half, Mode::Train, dropout_rng);
    auto loss = contrastive_loss(reps, config.tau, want_grads);
    if (want_grads) {
      Matrix<double> dembed = model.projector.backward_groups(loss.grad);
      model.encoder.backward(dembed);
    }
    return loss.loss;
  };

  const ParamList<double> params = model.params();
  std::mt19937_64 coord_rng(derive_seed(config.seed, "gradcheck-coords"));
  return gradient_check<double>(
      params, [&] { return run(false); }, [&] { run(true); },
      config.coords_per_block, coord_rng, config.fd_step);
}

GradCheckReport check_finetune_gradients(const ModelCheckConfig& config) {
  EncoderConfig ec;
  ec.in_channels = config.channels;
  ec.timepoints = config.timepoints;
  ec.width_multiplier = config.scale;
  ClassifierConfig cc;
  cc.input_dim = ec.scaled_embed_dim();
  cc.num_classes = 4;
  cc.width_multiplier = config.scale;
  cc.dropout = config.dropout;

  FinetuneModel<double> model(ec, cc);
  std::mt19937_64 init_rng(derive_seed(config.seed, "gradcheck-ft-init"));
  model.init(init_rng);

  std::mt19937_64 data_rng(derive_seed(config.seed, "gradcheck-ft-data"));
  const Index n = 8;
  const SeqBatch<double> x =
      random_input(n, config.channels, config.timepoints, data_rng);
  std::vector<int> labels(static_cast<std::size_t>(n));
  std::uniform_int_distribution<int> label_dist(0, 3);
  for (auto& l : labels) l = label_dist(data_rng);

  const std::uint64_t dropout_seed =
      derive_seed(config.seed, "gradcheck-ft-drop");
  auto run = [&](bool want_grads) -> double {
    std::mt19937_64 dropout_rng(dropout_seed);
    Matrix<double> logits = model.forward(x, Mode::Train, dropout_rng);
    auto ce = cross_entropy(logits, labels, want_grads);
    if (want_grads) {
      Matrix<double> dembed = model.classifier.backward(ce.grad);
      model.encoder.backward(dembed);
    }
    return ce.loss;
  };

  const ParamList<double> params = model.params();
  std::mt19937_64 coord_rng(derive_seed(config.seed, "gradcheck-ft-coords"));
  return gradient_check<double>(
      params, [&] { return run(false); }, [&] { run(true); },
      config.coords_per_block, coord_rng, config.fd_step);
}

}  // namespace memhacl
