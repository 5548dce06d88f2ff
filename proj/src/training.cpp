#include "memhacl/training.hpp"

#include <chrono>
#include <cmath>

#include "memhacl/eval.hpp"

namespace memhacl {

using nlohmann::json;

namespace {

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace

json ExperimentConfig::to_json() const {
  return json{{"stage", stage},
              {"data_path", data_path},
              {"out_dir", out_dir},
              {"preset", preset},
              {"task", task},
              {"modalities", modalities},
              {"seed", seed},
              {"epochs", epochs},
              {"batch_size", batch_size},
              {"lr", lr},
              {"tau", tau},
              {"p_clips", p_clips},
              {"q_half", q_half},
              {"scale", scale},
              {"dropout", dropout},
              {"freeze_encoder", freeze_encoder},
              {"repeats", repeats},
              {"threads", threads},
              {"checkpoint_every", checkpoint_every},
              {"label_threshold", label_threshold},
              {"train_ratio", train_ratio},
              {"test_ratio", test_ratio},
              {"val_ratio", val_ratio}};
}

ExperimentConfig ExperimentConfig::from_json(const json& j,
                                             const ExperimentConfig& base) {
  ExperimentConfig c = base;
  c.stage = j.value("stage", c.stage);
  c.data_path = j.value("data_path", c.data_path);
  c.out_dir = j.value("out_dir", c.out_dir);
  c.preset = j.value("preset", c.preset);
  c.task = j.value("task", c.task);
  c.modalities = j.value("modalities", c.modalities);
  c.seed = j.value("seed", c.seed);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.lr = j.value("lr", c.lr);
  c.tau = j.value("tau", c.tau);
  c.p_clips = j.value("p_clips", c.p_clips);
  c.q_half = j.value("q_half", c.q_half);
  c.scale = j.value("scale", c.scale);
  c.dropout = j.value("dropout", c.dropout);
  c.freeze_encoder = j.value("freeze_encoder", c.freeze_encoder);
  c.repeats = j.value("repeats", c.repeats);
  c.threads = j.value("threads", c.threads);
  c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
  c.label_threshold = j.value("label_threshold", c.label_threshold);
  c.train_ratio = j.value("train_ratio", c.train_ratio);
  c.test_ratio = j.value("test_ratio", c.test_ratio);
  c.val_ratio = j.value("val_ratio", c.val_ratio);
  return c;
}

void ExperimentConfig::validate() const {
  if (stage != "pretrain" && stage != "finetune") {
    throw std::invalid_argument("stage must be pretrain or finetune");
  }
  if (epochs <= 0) throw std::invalid_argument("epochs must be positive");
  if (batch_size <= 0) throw std::invalid_argument("batch_size must be positive");
  if (lr <= 0) throw std::invalid_argument("learning rate must be positive");
  if (tau <= 0) throw std::invalid_argument("temperature must be positive");
  if (p_clips < 2) throw std::invalid_argument("P must be >= 2");
  if (q_half < 1) throw std::invalid_argument("Q must be >= 1");
  if (scale <= 0) throw std::invalid_argument("scale must be positive");
  if (dropout < 0 || dropout >= 1) throw std::invalid_argument("dropout in [0,1)");
  if (repeats < 1) throw std::invalid_argument("repeats must be >= 1");
  if (threads < 1) throw std::invalid_argument("threads must be >= 1");
  if (std::abs(train_ratio + test_ratio + val_ratio - 1.0) > 1e-9) {
    throw std::invalid_argument("split ratios must sum to 1");
  }
  label_task_from_string(task);  // throws on unknown task names
}

void apply_preset(ExperimentConfig& c, const std::string& name) {
  c.preset = name;
  if (name == "deap_pretrain") {
    c.stage = "pretrain";
    c.epochs = 4000;
    c.lr = 1e-4;
    c.tau = 0.1;
    c.p_clips = 8;
    c.q_half = 2;
    c.scale = 1.0;
  } else if (name == "deap_finetune") {
    c.stage = "finetune";
    c.epochs = 20;
    c.batch_size = 2048;
    c.lr = 1e-3;
    c.scale = 1.0;
  } else if (name == "mahnob_pretrain") {
    c.stage = "pretrain";
    c.epochs = 475;
    c.lr = 1e-4;
    c.tau = 0.1;
    c.p_clips = 4;
    c.q_half = 8;
    c.scale = 1.0;
  } else if (name == "mahnob_finetune") {
    c.stage = "finetune";
    c.epochs = 20;
    c.batch_size = 256;
    c.lr = 1e-3;
    c.scale = 1.0;
  } else if (name == "desk_pretrain") {
    c.stage = "pretrain";
    c.epochs = 50;
    c.lr = 1e-3;
    c.tau = 0.1;
    c.p_clips = 4;
    c.q_half = 2;
    c.scale = 0.125;
  } else if (name == "desk_finetune") {
    c.stage = "finetune";
    c.epochs = 20;
    c.batch_size = 32;
    c.lr = 1e-3;
    c.scale = 0.125;
  } else {
    throw std::invalid_argument("unknown preset '" + name + "'");
  }
}

std::vector<std::string> preset_names() {
  return {"deap_pretrain",   "deap_finetune", "mahnob_pretrain",
          "mahnob_finetune", "desk_pretrain", "desk_finetune"};
}

PretrainOutput pretrain(const ExperimentConfig& config,
                        const LabeledDataset& dataset,
                        const TelemetryFn& telemetry,
                        const PretrainEpochHook& epoch_hook) {
  config.validate();
  if (!dataset.has_split()) {
    throw std::invalid_argument("dataset has no split assignment");
  }

  const EncoderConfig ec =
      config.encoder_config(dataset.channels(), dataset.timepoints());
  PretrainOutput out;
  out.model = std::make_unique<PretrainModel<float>>(
      ec, config.projector_config(ec.scaled_embed_dim()));

  std::mt19937_64 init_rng(derive_seed(config.seed, "init"));
  out.model->init(init_rng);
  std::mt19937_64 meiosis_rng(derive_seed(config.seed, "meiosis"));
  std::mt19937_64 dropout_rng(derive_seed(config.seed, "dropout"));

  const ParamList<float> params = out.model->params();
  Adam<float> adam(config.lr);
  adam.bind(params);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    EpochIterator it(dataset,
                     SamplerConfig{config.p_clips, config.q_half,
                                   derive_seed(config.seed, "sampler",
                                               static_cast<std::uint64_t>(epoch))});
    out.iterations_per_epoch = it.batches_per_epoch();
    int iteration = 0;
    double epoch_loss = 0.0;
    while (auto batch = it.next_batch()) {
      const auto start = std::chrono::steady_clock::now();
      ++iteration;
      const SplitPosition c =
          random_split_position(dataset.timepoints(), meiosis_rng);
      const AugmentedBatch augmented = meiosis_batch(*batch, c, meiosis_rng);
      const float loss = pretrain_step(*out.model, augmented,
                                       static_cast<float>(config.tau),
                                       dropout_rng, &adam, &params);
      if (!std::isfinite(loss)) {
        throw std::runtime_error(
            "non-finite pre-training loss at epoch " + std::to_string(epoch) +
            ", iteration " + std::to_string(iteration));
      }
      out.iteration_losses.push_back(loss);
      epoch_loss += loss;
      if (telemetry) {
        telemetry(json{{"stage", "pretrain"},
                       {"epoch", epoch},
                       {"iteration", iteration},
                       {"loss", loss},
                       {"wall_ms", elapsed_ms(start)}});
      }
    }
    if (iteration > 0) out.epoch_losses.push_back(epoch_loss / iteration);
    if (epoch_hook) {
      PretrainEpochContext ctx{static_cast<std::uint64_t>(epoch), *out.model,
                               adam, params,
                               "meiosis:" + rng_state_to_string(meiosis_rng) +
                                   ";dropout:" +
                                   rng_state_to_string(dropout_rng)};
      epoch_hook(ctx);
    }
  }
  return out;
}

Checkpoint make_pretrain_checkpoint(PretrainModel<float>& model,
                                    const ExperimentConfig& config,
                                    std::uint64_t epoch, bool include_projector,
                                    Adam<float>* optimizer,
                                    const ParamList<float>* params) {
  Checkpoint ckpt;
  ckpt.stage = "pretrain";
  ckpt.config_json = config.to_json().dump();
  ckpt.epoch = epoch;
  ParamList<float> refs;
  model.encoder.collect(refs);
  model.encoder.collect_state(refs);
  if (include_projector) {
    model.projector.collect(refs);
    model.projector.collect_state(refs);
  }
  append_blocks(ckpt, refs);
  if (optimizer && params) append_adam_state(ckpt, *optimizer, *params);
  return ckpt;
}

namespace {

SeqBatch<float> gather_batch(const LabeledDataset& dataset,
                             const FinetuneView& view,
                             const std::vector<Index>& order, Index begin,
                             Index end, std::vector<int>& labels,
                             LabelTask task) {
  std::vector<MESample<float>> samples;
  samples.reserve(static_cast<std::size_t>(end - begin));
  labels.clear();
  for (Index i = begin; i < end; ++i) {
    const auto [clip, subject] = view.clip_subject(order[i]);
    samples.push_back(dataset.sample(clip, subject));
    labels.push_back(task_label(dataset.labels(clip, subject), task));
  }
  return seq_batch_from_samples(samples);
}

}  // namespace

FinetuneOutput finetune(const ExperimentConfig& config,
                        const LabeledDataset& dataset,
                        const Checkpoint* pretrained,
                        const TelemetryFn& telemetry) {
  config.validate();
  if (!dataset.has_split()) {
    throw std::invalid_argument("dataset has no split assignment");
  }
  if (!dataset.has_ratings()) {
    throw std::invalid_argument("fine-tuning needs a labeled dataset");
  }
  const LabelTask task = config.label_task();

  const EncoderConfig ec =
      config.encoder_config(dataset.channels(), dataset.timepoints());
  FinetuneOutput out;
  out.model = std::make_unique<FinetuneModel<float>>(
      ec, config.classifier_config(ec.scaled_embed_dim()));

  std::mt19937_64 init_rng(derive_seed(config.seed, "init-ft"));
  out.model->init(init_rng);
  if (pretrained) {
    ParamList<float> encoder_refs;
    out.model->encoder.collect(encoder_refs);
    out.model->encoder.collect_state(encoder_refs);
    load_blocks(*pretrained, encoder_refs);
  }

  const ParamList<float> trainable =
      out.model->trainable_params(config.freeze_encoder);
  Adam<float> adam(config.lr);
  adam.bind(trainable);

  std::mt19937_64 shuffle_rng(derive_seed(config.seed, "ft-shuffle"));
  std::mt19937_64 dropout_rng(derive_seed(config.seed, "ft-dropout"));

  const FinetuneView train_view = reshape_for_finetune(dataset, Split::Train);
  if (train_view.size() == 0) {
    throw std::invalid_argument("train split is empty");
  }
  std::vector<Index> order(static_cast<std::size_t>(train_view.size()));
  std::iota(order.begin(), order.end(), Index{0});

  std::vector<int> labels;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    int batches = 0;
    for (Index begin = 0; begin < train_view.size();
         begin += config.batch_size) {
      const Index end = std::min(train_view.size(), begin + config.batch_size);
      const SeqBatch<float> x =
          gather_batch(dataset, train_view, order, begin, end, labels, task);
      zero_grads(trainable);
      Matrix<float> logits = out.model->forward(x, Mode::Train, dropout_rng);
      auto ce = cross_entropy(logits, labels, true);
      if (!std::isfinite(ce.loss)) {
        throw std::runtime_error("non-finite fine-tuning loss at epoch " +
                                 std::to_string(epoch));
      }
      Matrix<float> dembed = out.model->classifier.backward(ce.grad);
      if (!config.freeze_encoder) out.model->encoder.backward(dembed);
      adam.step(trainable);
      epoch_loss += ce.loss;
      ++batches;
    }
    epoch_loss /= std::max(1, batches);
    out.epoch_losses.push_back(epoch_loss);

    const double val_acc =
        accuracy_on_split(*out.model, dataset, Split::Val, task, 256);
    out.val_accuracies.push_back(val_acc);
    if (telemetry) {
      telemetry(json{{"stage", "finetune"},
                     {"epoch", epoch},
                     {"iteration", batches},
                     {"loss", epoch_loss},
                     {"accuracy", val_acc},
                     {"wall_ms", elapsed_ms(start)}});
    }
    if (out.best_checkpoint.blocks.empty() || val_acc > out.best_val_accuracy) {
      out.best_val_accuracy = val_acc;
      out.best_epoch = static_cast<std::uint64_t>(epoch);
      out.best_checkpoint = make_finetune_checkpoint(
          *out.model, config, static_cast<std::uint64_t>(epoch));
    }
  }
  return out;
}

Checkpoint make_finetune_checkpoint(FinetuneModel<float>& model,
                                    const ExperimentConfig& config,
                                    std::uint64_t epoch) {
  Checkpoint ckpt;
  ckpt.stage = "finetune";
  ckpt.config_json = config.to_json().dump();
  ckpt.epoch = epoch;
  ParamList<float> refs = model.params();
  model.encoder.collect_state(refs);
  model.classifier.collect_state(refs);
  append_blocks(ckpt, refs);
  return ckpt;
}

FinetuneModel<float> finetune_model_from_checkpoint(const Checkpoint& ckpt,
                                                    Index channels,
                                                    Index timepoints) {
  if (ckpt.stage != "finetune") {
    throw std::runtime_error("checkpoint stage is '" + ckpt.stage +
                             "', expected finetune");
  }
  const ExperimentConfig config =
      ExperimentConfig::from_json(json::parse(ckpt.config_json));
  const EncoderConfig ec = config.encoder_config(channels, timepoints);
  FinetuneModel<float> model(ec, config.classifier_config(ec.scaled_embed_dim()));
  ParamList<float> refs = model.params();
  model.encoder.collect_state(refs);
  model.classifier.collect_state(refs);
  load_blocks(ckpt, refs);
  return model;
}

}  // namespace memhacl
