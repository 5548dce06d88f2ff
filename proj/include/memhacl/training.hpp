#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "memhacl/adam.hpp"
#include "memhacl/checkpoint.hpp"
#include "memhacl/classifier.hpp"
#include "memhacl/dataset.hpp"
#include "memhacl/encoder.hpp"
#include "memhacl/loss.hpp"
#include "memhacl/meiosis.hpp"
#include "memhacl/projector.hpp"
#include "memhacl/rng.hpp"
#include "memhacl/sampler.hpp"

namespace memhacl {

// One flat configuration covering both stages; presets fill the recipes.
struct ExperimentConfig {
  std::string stage = "pretrain";  // "pretrain" | "finetune"
  std::string data_path;
  std::string out_dir;
  std::string preset;
  std::string task = "four";        // valence | arousal | four
  std::string modalities = "all";   // comma list, e.g. "EEG,GSR"
  std::uint64_t seed = 0;
  int epochs = 50;
  Index batch_size = 32;            // fine-tuning minibatch
  double lr = 1e-4;
  double tau = 0.1;
  Index p_clips = 8;                // P
  Index q_half = 2;                 // Q
  double scale = 1.0;               // width multiplier
  double dropout = 0.5;
  bool freeze_encoder = false;
  int repeats = 1;
  int threads = 1;
  int checkpoint_every = 0;         // epochs between full checkpoints; 0 = final only
  double label_threshold = 5.0;
  double train_ratio = 0.70, test_ratio = 0.15, val_ratio = 0.15;

  nlohmann::json to_json() const;
  // Overlay: keys present in `j` replace the corresponding `base` fields.
  static ExperimentConfig from_json(const nlohmann::json& j,
                                    const ExperimentConfig& base = {});
  void validate() const;

  SplitRatios ratios() const { return {train_ratio, test_ratio, val_ratio}; }
  LabelTask label_task() const { return label_task_from_string(task); }

  EncoderConfig encoder_config(Index channels, Index timepoints) const {
    EncoderConfig ec;
    ec.in_channels = channels;
    ec.timepoints = timepoints;
    ec.width_multiplier = scale;
    return ec;
  }
  ProjectorConfig projector_config(Index embed_dim) const {
    ProjectorConfig pc;
    pc.input_dim = embed_dim;
    pc.width_multiplier = scale;
    pc.dropout = dropout;
    return pc;
  }
  ClassifierConfig classifier_config(Index embed_dim) const {
    ClassifierConfig cc;
    cc.input_dim = embed_dim;
    cc.num_classes = task_num_classes(label_task());
    cc.width_multiplier = scale;
    cc.dropout = dropout;
    return cc;
  }
};

// Applies one of the named recipe presets (deap_pretrain, deap_finetune,
// mahnob_pretrain, mahnob_finetune, desk_pretrain, desk_finetune).
void apply_preset(ExperimentConfig& config, const std::string& name);
std::vector<std::string> preset_names();

template <class Scalar>
struct PretrainModel {
  Encoder<Scalar> encoder;
  Projector<Scalar> projector;

  PretrainModel(const EncoderConfig& ec, const ProjectorConfig& pc)
      : encoder(ec), projector(pc) {}

  void init(std::mt19937_64& rng) {
    encoder.init(rng);
    projector.init(rng);
  }

  ParamList<Scalar> params() {
    ParamList<Scalar> out;
    encoder.collect(out);
    projector.collect(out);
    return out;
  }
  ParamList<Scalar> state() {
    ParamList<Scalar> out;
    encoder.collect_state(out);
    projector.collect_state(out);
    return out;
  }
};

template <class Scalar>
struct FinetuneModel {
  Encoder<Scalar> encoder;
  Classifier<Scalar> classifier;

  FinetuneModel(const EncoderConfig& ec, const ClassifierConfig& cc)
      : encoder(ec), classifier(cc) {}

  void init(std::mt19937_64& rng) {
    encoder.init(rng);
    classifier.init(rng);
  }

  Matrix<Scalar> forward(const SeqBatch<Scalar>& x, Mode mode,
                         std::mt19937_64& rng) {
    return classifier.forward(encoder.forward(x, mode), mode, rng);
  }

  ParamList<Scalar> params() {
    ParamList<Scalar> out;
    encoder.collect(out);
    classifier.collect(out);
    return out;
  }
  ParamList<Scalar> trainable_params(bool freeze_encoder) {
    ParamList<Scalar> out;
    if (!freeze_encoder) encoder.collect(out);
    classifier.collect(out);
    return out;
  }
  ParamList<Scalar> state() {
    ParamList<Scalar> out;
    encoder.collect_state(out);
    classifier.collect_state(out);
    return out;
  }
};

using TelemetryFn = std::function<void(const nlohmann::json&)>;

// One pre-training step over an already augmented batch: encode the 2PQ
// member samples, project the 2P groups, take the contrastive loss and
// backpropagate. Column layout: A_1..A_P then B_1..B_P, members group-major.
template <class Scalar>
Scalar pretrain_step(PretrainModel<Scalar>& model, const AugmentedBatch& batch,
                     Scalar tau, std::mt19937_64& dropout_rng,
                     Adam<Scalar>* optimizer,
                     const ParamList<Scalar>* params) {
  const Index p = batch.p();
  const Index q = batch.q();
  std::vector<MESample<Scalar>> members;
  members.reserve(static_cast<std::size_t>(2 * p * q));
  for (const auto& pair : batch.pairs) {
    for (const auto& s : pair.group_a) members.push_back(s.template cast<Scalar>());
  }
  for (const auto& pair : batch.pairs) {
    for (const auto& s : pair.group_b) members.push_back(s.template cast<Scalar>());
  }

  if (params) zero_grads(*params);
  Matrix<Scalar> embeddings =
      encode_batch(model.encoder, members, Mode::Train);
  Matrix<Scalar> reps =
      model.projector.forward_groups(embeddings, q, Mode::Train, dropout_rng);
  auto loss = contrastive_loss(reps, tau, optimizer != nullptr);
  if (optimizer) {
    Matrix<Scalar> dembed = model.projector.backward_groups(loss.grad);
    model.encoder.backward(dembed);
    optimizer->step(*params);
  }
  return loss.loss;
}

struct PretrainOutput {
  std::unique_ptr<PretrainModel<float>> model;
  std::vector<double> iteration_losses;
  std::vector<double> epoch_losses;
  Index iterations_per_epoch = 0;
};

struct PretrainEpochContext {
  std::uint64_t epoch = 0;
  PretrainModel<float>& model;
  Adam<float>& optimizer;
  const ParamList<float>& params;
  std::string rng_state;  // meiosis + dropout streams at epoch end
};
using PretrainEpochHook = std::function<void(PretrainEpochContext&)>;

// Algorithm: per epoch, enumerate train clips in P-sized groups; one shared
// split position per iteration; meiosis -> encode -> project -> contrastive
// loss -> Adam update of encoder and projector.
PretrainOutput pretrain(const ExperimentConfig& config,
                        const LabeledDataset& dataset,
                        const TelemetryFn& telemetry = {},
                        const PretrainEpochHook& epoch_hook = {});

Checkpoint make_pretrain_checkpoint(PretrainModel<float>& model,
                                    const ExperimentConfig& config,
                                    std::uint64_t epoch, bool include_projector,
                                    Adam<float>* optimizer = nullptr,
                                    const ParamList<float>* params = nullptr);

struct FinetuneOutput {
  std::unique_ptr<FinetuneModel<float>> model;  // state after the last epoch
  Checkpoint best_checkpoint;                   // highest validation accuracy
  std::vector<double> epoch_losses;
  std::vector<double> val_accuracies;
  double best_val_accuracy = 0.0;
  std::uint64_t best_epoch = 0;
};

// Supervised training of classifier-on-encoder with cross-entropy; both the
// encoder and the classifier update unless config.freeze_encoder is set.
// `pretrained` supplies encoder blocks; pass nullptr to start from random
// initialization (the untrained-encoder control).
FinetuneOutput finetune(const ExperimentConfig& config,
                        const LabeledDataset& dataset,
                        const Checkpoint* pretrained,
                        const TelemetryFn& telemetry = {});

Checkpoint make_finetune_checkpoint(FinetuneModel<float>& model,
                                    const ExperimentConfig& config,
                                    std::uint64_t epoch);

FinetuneModel<float> finetune_model_from_checkpoint(const Checkpoint& ckpt,
                                                    Index channels,
                                                    Index timepoints);

}  // namespace memhacl
