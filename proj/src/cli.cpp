#include "memhacl/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "memhacl/container.hpp"
#include "memhacl/eval.hpp"
#include "memhacl/model_checks.hpp"
#include "memhacl/synthdata.hpp"
#include "memhacl/telemetry.hpp"
#include "memhacl/training.hpp"

namespace memhacl {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Minimal TOML-style key = value parser for config files. Supports strings
// (quoted or bare), numbers and booleans; '#' starts a comment.
json parse_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  json out = json::object();
  std::string line;
  std::size_t lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": empty key or value");
    }
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      out[key] = value.substr(1, value.size() - 2);
    } else if (value == "true" || value == "false") {
      out[key] = value == "true";
    } else {
      try {
        std::size_t used = 0;
        if (value.find_first_of(".eE") == std::string::npos) {
          const long long n = std::stoll(value, &used);
          if (used == value.size()) {
            out[key] = n;
            continue;
          }
        } else {
          const double d = std::stod(value, &used);
          if (used == value.size()) {
            out[key] = d;
            continue;
          }
        }
      } catch (const std::exception&) {
        // fall through to bare string
      }
      out[key] = value;
    }
  }
  return out;
}

// Pre-parse scan so preset/config-file values are layered into the config
// object before CLI11 assigns explicitly given flags over them.
std::string scan_value(const std::vector<std::string>& args,
                       const std::string& flag) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == flag && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind(flag + "=", 0) == 0) {
      return args[i].substr(flag.size() + 1);
    }
  }
  return {};
}

std::vector<Modality> parse_modalities(const std::string& list) {
  std::vector<Modality> out;
  std::string token;
  std::istringstream in(list);
  while (std::getline(in, token, ',')) {
    if (!token.empty()) out.push_back(modality_from_string(token));
  }
  if (out.empty()) throw std::invalid_argument("empty modality list");
  return out;
}

LabeledDataset load_dataset(const ExperimentConfig& config, bool split) {
  if (config.data_path.empty()) {
    throw std::invalid_argument("missing --data");
  }
  LabeledDataset dataset =
      load_container(config.data_path, config.label_threshold);
  if (config.modalities != "all" && !config.modalities.empty()) {
    dataset = select_modalities(dataset, parse_modalities(config.modalities),
                                config.label_threshold);
  }
  if (split) {
    split_dataset(dataset, config.ratios(), derive_seed(config.seed, "split"));
  }
  return dataset;
}

fs::path resolve_out_dir(const std::string& requested,
                         const std::string& stage) {
  if (!requested.empty()) return requested;
  const char* home = std::getenv("ME_MHACL_HOME");
  const fs::path root = home && *home ? fs::path(home) : fs::path(".");
  fs::path dir = root / "runs" / (stage + "-" + current_timestamp_utc());
  for (int suffix = 1; fs::exists(dir); ++suffix) {
    dir = root / "runs" /
          (stage + "-" + current_timestamp_utc() + "-" + std::to_string(suffix));
  }
  return dir;
}

RunManifest begin_manifest(const ExperimentConfig& config) {
  RunManifest manifest;
  manifest.config = config.to_json();
  manifest.seed = config.seed;
  manifest.started_at = current_timestamp_utc();
  return manifest;
}

void add_config_options(CLI::App* cmd, ExperimentConfig& cfg) {
  cmd->add_option("--config", "layered config file (key = value lines)");
  cmd->add_option("--preset", "named recipe preset")
      ->check(CLI::IsMember(preset_names()));
  cmd->add_option("--data", cfg.data_path, "dataset container directory");
  cmd->add_option("--out", cfg.out_dir, "run directory (default under ME_MHACL_HOME)");
  cmd->add_option("--seed", cfg.seed, "master seed");
  cmd->add_option("--epochs", cfg.epochs);
  cmd->add_option("--lr", cfg.lr, "learning rate");
  cmd->add_option("--tau", cfg.tau, "contrastive temperature");
  cmd->add_option("--p", cfg.p_clips, "clips per pre-training batch (P)");
  cmd->add_option("--q", cfg.q_half, "half group size (Q)");
  cmd->add_option("--batch", cfg.batch_size, "fine-tuning batch size");
  cmd->add_option("--scale", cfg.scale, "model width multiplier");
  cmd->add_option("--dropout", cfg.dropout);
  cmd->add_option("--threads", cfg.threads);
  cmd->add_option("--task", cfg.task, "valence | arousal | four")
      ->check(CLI::IsMember({"valence", "arousal", "four"}));
  cmd->add_flag("--freeze-encoder", cfg.freeze_encoder,
                "train the classifier only");
  cmd->add_option("--repeats", cfg.repeats, "independent fine-tune repeats");
  cmd->add_option("--checkpoint-every", cfg.checkpoint_every,
                  "epochs between full checkpoints (0 = final only)");
  cmd->add_option("--modalities", cfg.modalities,
                  "comma list of modalities to keep, or 'all'");
  cmd->add_option("--label-threshold", cfg.label_threshold);
}

void layer_preset_and_file(ExperimentConfig& cfg,
                           const std::vector<std::string>& args) {
  const std::string preset = scan_value(args, "--preset");
  if (!preset.empty()) apply_preset(cfg, preset);
  const std::string file = scan_value(args, "--config");
  if (!file.empty()) cfg = ExperimentConfig::from_json(parse_config_file(file), cfg);
}

int cmd_synth(const SynthSpec& spec, const std::string& out_dir) {
  SynthSpec checked = spec;
  checked.validate();
  const fs::path dir = out_dir;
  RunManifest manifest;
  manifest.seed = spec.seed;
  manifest.config = json{{"clips", spec.clips},
                         {"subjects", spec.subjects},
                         {"channels", spec.channels},
                         {"timepoints", spec.timepoints},
                         {"sample_rate", spec.sample_rate},
                         {"signature_dim", spec.signature_dim},
                         {"subject_noise", spec.subject_noise},
                         {"snr", spec.snr},
                         {"label_rule", spec.label_rule},
                         {"seed", spec.seed}};
  manifest.started_at = current_timestamp_utc();

  LabeledDataset dataset = generate(spec);
  save_container(dataset, dir);
  const SynthSelfCheck check = synth_self_check(dataset);

  manifest.finished_at = current_timestamp_utc();
  manifest.artifacts = {"metadata.json", "samples.bin", "ratings.csv"};
  manifest.write(dir);

  std::cout << json{{"container", dir.string()},
                    {"dims", dataset.dims()},
                    {"centroid_probe_accuracy", check.centroid_probe_accuracy},
                    {"chance", check.chance},
                    {"within_clip_corr", check.within_clip_corr},
                    {"between_clip_corr", check.between_clip_corr},
                    {"class_prevalence", check.class_prevalence}}
                   .dump(2)
            << "\n";
  return 0;
}

int cmd_check(const ExperimentConfig& cfg) {
  LabeledDataset dataset = load_dataset(cfg, false);
  LabeledDataset split_copy = dataset;
  split_dataset(split_copy, cfg.ratios(), derive_seed(cfg.seed, "split"));
  const SplitCounts counts = split_counts(split_copy);

  json layout = json::array();
  for (const auto& e : dataset.layout().entries) {
    layout.push_back({{"modality", to_string(e.modality)},
                      {"channels", e.channels}});
  }
  std::cout << json{{"dims", dataset.dims()},
                    {"sample_rate", dataset.sample_rate()},
                    {"layout", layout},
                    {"has_ratings", dataset.has_ratings()},
                    {"split_seed", cfg.seed},
                    {"train_clips", counts.train_clips},
                    {"test_clips", counts.test_clips},
                    {"val_clips", counts.val_clips},
                    {"train_segments", counts.train_segments},
                    {"test_segments", counts.test_segments},
                    {"val_segments", counts.val_segments}}
                   .dump(2)
            << "\n";
  return 0;
}

int cmd_pretrain(ExperimentConfig cfg) {
  cfg.stage = "pretrain";
  cfg.validate();
  LabeledDataset dataset = load_dataset(cfg, true);

  const fs::path run_dir = resolve_out_dir(cfg.out_dir, "pretrain");
  fs::create_directories(run_dir);
  cfg.out_dir = run_dir.string();
  RunManifest manifest = begin_manifest(cfg);
  TelemetryWriter telemetry(run_dir / "telemetry.jsonl");

  std::vector<std::string> artifacts = {"telemetry.jsonl"};
  const auto epoch_hook = [&](PretrainEpochContext& ctx) {
    const bool cadence = cfg.checkpoint_every > 0 &&
                         ctx.epoch % static_cast<std::uint64_t>(
                                         cfg.checkpoint_every) ==
                             0;
    const bool last = ctx.epoch == static_cast<std::uint64_t>(cfg.epochs);
    if (!cadence && !last) return;
    Checkpoint ckpt = make_pretrain_checkpoint(ctx.model, cfg, ctx.epoch, true,
                                               &ctx.optimizer, &ctx.params);
    ckpt.rng_state = ctx.rng_state;
    const std::string name = last ? std::string("checkpoint_last.bin")
                                  : "checkpoint_epoch_" +
                                        std::to_string(ctx.epoch) + ".bin";
    ckpt.save(run_dir / name);
    artifacts.push_back(name);
  };

  PretrainOutput out = pretrain(
      cfg, dataset, [&](const json& j) { telemetry.record(j); }, epoch_hook);

  // The stage output: encoder only, projector discarded.
  Checkpoint encoder_ckpt = make_pretrain_checkpoint(
      *out.model, cfg, static_cast<std::uint64_t>(cfg.epochs), false);
  encoder_ckpt.save(run_dir / "encoder_final.bin");
  artifacts.push_back("encoder_final.bin");

  manifest.finished_at = current_timestamp_utc();
  manifest.artifacts = artifacts;
  manifest.write(run_dir);

  std::cout << json{{"run_dir", run_dir.string()},
                    {"iterations_per_epoch", out.iterations_per_epoch},
                    {"first_epoch_loss",
                     out.epoch_losses.empty() ? 0.0 : out.epoch_losses.front()},
                    {"final_epoch_loss",
                     out.epoch_losses.empty() ? 0.0 : out.epoch_losses.back()}}
                   .dump(2)
            << "\n";
  return 0;
}

int cmd_finetune(ExperimentConfig cfg, const std::string& checkpoint_path,
                 bool from_scratch) {
  cfg.stage = "finetune";
  cfg.validate();
  if (checkpoint_path.empty() && !from_scratch) {
    throw std::invalid_argument(
        "finetune needs --checkpoint (or --from-scratch for the "
        "untrained-encoder control)");
  }
  std::optional<Checkpoint> pretrained;
  if (!checkpoint_path.empty()) {
    pretrained = Checkpoint::load(checkpoint_path);
  }
  LabeledDataset dataset = load_dataset(cfg, true);

  const fs::path run_dir = resolve_out_dir(cfg.out_dir, "finetune");
  fs::create_directories(run_dir);
  cfg.out_dir = run_dir.string();
  RunManifest manifest = begin_manifest(cfg);
  std::vector<std::string> artifacts;

  json result;
  if (cfg.repeats <= 1) {
    TelemetryWriter telemetry(run_dir / "telemetry.jsonl");
    artifacts.push_back("telemetry.jsonl");
    FinetuneOutput out =
        finetune(cfg, dataset, pretrained ? &*pretrained : nullptr,
                 [&](const json& j) { telemetry.record(j); });
    out.best_checkpoint.save(run_dir / "checkpoint_best.bin");
    artifacts.push_back("checkpoint_best.bin");

    FinetuneModel<float> best = finetune_model_from_checkpoint(
        out.best_checkpoint, dataset.channels(), dataset.timepoints());
    const EvalReport report = evaluate(best, dataset, Split::Test,
                                       cfg.label_task(), 256,
                                       "checkpoint_best.bin");
    std::ofstream(run_dir / "report.json") << report.to_json().dump(2) << "\n";
    artifacts.push_back("report.json");
    result = json{{"run_dir", run_dir.string()},
                  {"best_val_accuracy", out.best_val_accuracy},
                  {"best_epoch", out.best_epoch},
                  {"test_accuracy", report.accuracy}};
  } else {
    const RepeatFinetuneSummary summary = repeat_finetune_eval(
        pretrained ? &*pretrained : nullptr, cfg, dataset, cfg.repeats);
    json runs = json::array();
    for (std::size_t i = 0; i < summary.reports.size(); ++i) {
      runs.push_back({{"seed", summary.seeds[i]},
                      {"best_val_accuracy", summary.best_val_accuracies[i]},
                      {"report", summary.reports[i].to_json()}});
    }
    result = json{{"run_dir", run_dir.string()},
                  {"repeats", cfg.repeats},
                  {"mean_test_accuracy", summary.mean_accuracy},
                  {"std_test_accuracy", summary.std_accuracy},
                  {"runs", runs}};
    std::ofstream(run_dir / "summary.json") << result.dump(2) << "\n";
    artifacts.push_back("summary.json");
  }

  manifest.finished_at = current_timestamp_utc();
  manifest.artifacts = artifacts;
  manifest.write(run_dir);
  std::cout << result.dump(2) << "\n";
  return 0;
}

int cmd_eval(ExperimentConfig cli_cfg, const std::string& checkpoint_path,
             const std::string& split_name, const std::string& out_dir) {
  const Checkpoint ckpt = Checkpoint::load(checkpoint_path);
  ExperimentConfig cfg =
      ExperimentConfig::from_json(json::parse(ckpt.config_json));
  if (!cli_cfg.data_path.empty()) cfg.data_path = cli_cfg.data_path;
  if (cli_cfg.task != cfg.task && !cli_cfg.task.empty()) {
    throw std::invalid_argument("checkpoint was fine-tuned for task '" +
                                cfg.task + "', not '" + cli_cfg.task + "'");
  }
  Split split = Split::Test;
  if (split_name == "train") split = Split::Train;
  else if (split_name == "val") split = Split::Val;
  else if (split_name != "test") {
    throw std::invalid_argument("unknown split '" + split_name + "'");
  }

  LabeledDataset dataset = load_dataset(cfg, true);
  FinetuneModel<float> model = finetune_model_from_checkpoint(
      ckpt, dataset.channels(), dataset.timepoints());
  const EvalReport report = evaluate(model, dataset, split, cfg.label_task(),
                                     256, checkpoint_path);
  std::cout << report.to_json().dump(2) << "\n";

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream(fs::path(out_dir) / "report.json")
        << report.to_json().dump(2) << "\n";
    RunManifest manifest = begin_manifest(cfg);
    manifest.finished_at = manifest.started_at;
    manifest.artifacts = {"report.json"};
    manifest.write(out_dir);
  }
  return 0;
}

int cmd_augment(ExperimentConfig cfg, Index split_position) {
  LabeledDataset dataset = load_dataset(cfg, false);
  // Corpus-level inspection: every clip is eligible.
  dataset.set_clip_split(
      std::vector<Split>(static_cast<std::size_t>(dataset.num_clips()),
                         Split::Train));

  const fs::path run_dir = resolve_out_dir(cfg.out_dir, "augment");
  fs::create_directories(run_dir);
  cfg.out_dir = run_dir.string();
  RunManifest manifest = begin_manifest(cfg);

  std::mt19937_64 rng(derive_seed(cfg.seed, "meiosis"));
  EpochIterator it(dataset, SamplerConfig{cfg.p_clips, cfg.q_half,
                                          derive_seed(cfg.seed, "sampler", 1)});

  std::ofstream bin(run_dir / "augmented.bin", std::ios::binary);
  json index = json::array();
  Index batches = 0, pairs = 0, conservation_failures = 0;
  std::uint64_t offset = 0;

  while (auto batch = it.next_batch()) {
    const SplitPosition c =
        split_position > 0
            ? SplitPosition{split_position}
            : random_split_position(dataset.timepoints(), rng);
    const AugmentedBatch augmented = meiosis_batch(*batch, c, rng);

    for (std::size_t g = 0; g < augmented.pairs.size(); ++g) {
      const auto& pair = augmented.pairs[g];
      // Conservation: per channel and timepoint, the values across A u B
      // are a permutation of the values across the source group.
      const auto& original = batch->groups[g];
      const Index channels = dataset.channels();
      const Index m = dataset.timepoints();
      std::vector<float> before, after;
      for (Index ch = 0; ch < channels && conservation_failures == 0; ++ch) {
        for (Index t = 0; t < m; ++t) {
          before.clear();
          after.clear();
          for (const auto& s : original) before.push_back(s.data(ch, t));
          for (const auto& s : pair.group_a) after.push_back(s.data(ch, t));
          for (const auto& s : pair.group_b) after.push_back(s.data(ch, t));
          std::sort(before.begin(), before.end());
          std::sort(after.begin(), after.end());
          if (before != after) {
            ++conservation_failures;
            break;
          }
        }
      }
      ++pairs;

      for (int side = 0; side < 2; ++side) {
        const auto& group = side == 0 ? pair.group_a : pair.group_b;
        for (std::size_t member = 0; member < group.size(); ++member) {
          const RowMatrix<float> row_major = group[member].data;
          bin.write(reinterpret_cast<const char*>(row_major.data()),
                    static_cast<std::streamsize>(sizeof(float) *
                                                 row_major.size()));
          index.push_back({{"batch", batches},
                           {"clip_id", pair.clip_id},
                           {"side", side == 0 ? "A" : "B"},
                           {"member", member},
                           {"split_position", c.c},
                           {"offset_bytes", offset}});
          offset += sizeof(float) * static_cast<std::uint64_t>(row_major.size());
        }
      }
    }
    ++batches;
  }

  const json report{{"batches", batches},
                    {"pairs", pairs},
                    {"conservation_failures", conservation_failures},
                    {"channels", dataset.channels()},
                    {"timepoints", dataset.timepoints()}};
  std::ofstream(run_dir / "augmented.json") << index.dump(2) << "\n";
  std::ofstream(run_dir / "report.json") << report.dump(2) << "\n";

  manifest.finished_at = current_timestamp_utc();
  manifest.artifacts = {"augmented.bin", "augmented.json", "report.json"};
  manifest.write(run_dir);
  std::cout << report.dump(2) << "\n";
  return conservation_failures == 0 ? 0 : 1;
}

int cmd_export(ExperimentConfig cli_cfg, const std::string& checkpoint_path,
               const std::string& split_name, const std::string& stage_name,
               const std::string& out_dir) {
  const Checkpoint ckpt = Checkpoint::load(checkpoint_path);
  ExperimentConfig cfg =
      ExperimentConfig::from_json(json::parse(ckpt.config_json));
  if (!cli_cfg.data_path.empty()) cfg.data_path = cli_cfg.data_path;

  Split split = Split::Test;
  if (split_name == "train") split = Split::Train;
  else if (split_name == "val") split = Split::Val;
  else if (split_name != "test") {
    throw std::invalid_argument("unknown split '" + split_name + "'");
  }
  const EmbeddingStage stage = embedding_stage_from_string(stage_name);

  LabeledDataset dataset = load_dataset(cfg, true);
  const EncoderConfig ec =
      cfg.encoder_config(dataset.channels(), dataset.timepoints());

  Encoder<float> encoder(ec);
  std::optional<Projector<float>> projector;
  {
    ParamList<float> refs;
    encoder.collect(refs);
    encoder.collect_state(refs);
    load_blocks(ckpt, refs);
  }
  if (stage != EmbeddingStage::Encoder) {
    if (ckpt.stage != "pretrain" || !ckpt.find("projector.fc1.weight")) {
      throw std::invalid_argument(
          "stage '" + stage_name +
          "' needs a pre-training checkpoint that still has the projector");
    }
    projector.emplace(cfg.projector_config(ec.scaled_embed_dim()));
    ParamList<float> refs;
    projector->collect(refs);
    projector->collect_state(refs);
    load_blocks(ckpt, refs);
  }

  const fs::path dir = resolve_out_dir(out_dir, "export");
  fs::create_directories(dir);
  const std::string csv_name =
      "embeddings_" + stage_name + "_" + split_name + ".csv";
  export_embeddings(encoder, projector ? &*projector : nullptr, dataset, split,
                    stage, dir / csv_name);

  RunManifest manifest = begin_manifest(cfg);
  manifest.finished_at = current_timestamp_utc();
  manifest.artifacts = {csv_name};
  manifest.write(dir);
  std::cout << json{{"csv", (dir / csv_name).string()}}.dump(2) << "\n";
  return 0;
}

int cmd_gradcheck(const ModelCheckConfig& config, double tolerance,
                  const std::string& out_dir) {
  const GradCheckReport contrastive = check_contrastive_gradients(config);
  const GradCheckReport ft = check_finetune_gradients(config);

  const auto dump = [&](const char* name, const GradCheckReport& report) {
    std::printf("%-18s max_rel_error=%.3e blocks=%zu %s\n", name,
                report.max_rel_error, report.blocks.size(),
                report.passed(tolerance) ? "ok" : "FAIL");
    for (const auto& b : report.blocks) {
      if (b.max_rel_error > tolerance) {
        std::printf("  %-44s rel=%.3e analytic=%.6e numeric=%.6e\n",
                    b.name.c_str(), b.max_rel_error, b.worst_analytic,
                    b.worst_numeric);
      }
    }
  };
  dump("contrastive path", contrastive);
  dump("finetune path", ft);

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    json blocks = json::array();
    for (const auto* report : {&contrastive, &ft}) {
      for (const auto& b : report->blocks) {
        blocks.push_back({{"name", b.name},
                          {"coords", b.coords_checked},
                          {"max_rel_error", b.max_rel_error}});
      }
    }
    std::ofstream(fs::path(out_dir) / "gradcheck.json")
        << json{{"tolerance", tolerance},
                {"contrastive_max_rel_error", contrastive.max_rel_error},
                {"finetune_max_rel_error", ft.max_rel_error},
                {"blocks", blocks}}
               .dump(2)
        << "\n";
  }
  return contrastive.passed(tolerance) && ft.passed(tolerance) ? 0 : 1;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"group-contrastive pre-training and emotion classification "
               "for multimodal electrophysiology"};
  app.require_subcommand(1);

  ExperimentConfig cfg;
  layer_preset_and_file(cfg, args);

  // synth
  SynthSpec spec;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "generate a synthetic container");
  synth->add_option("--out", synth_out, "container directory")->required();
  synth->add_option("--clips", spec.clips);
  synth->add_option("--subjects", spec.subjects);
  synth->add_option("--channels", spec.channels);
  synth->add_option("--timepoints", spec.timepoints);
  synth->add_option("--rate", spec.sample_rate);
  synth->add_option("--signature-dim", spec.signature_dim);
  synth->add_option("--subject-noise", spec.subject_noise);
  synth->add_option("--snr", spec.snr);
  synth->add_option("--seed", spec.seed);

  // check
  auto* check = app.add_subcommand("check", "validate a container and report "
                                            "windowing/split arithmetic");
  add_config_options(check, cfg);

  // pretrain
  auto* pre = app.add_subcommand("pretrain", "group-contrastive pre-training");
  add_config_options(pre, cfg);

  // finetune
  std::string ft_checkpoint;
  bool from_scratch = false;
  auto* ft = app.add_subcommand("finetune", "supervised fine-tuning");
  add_config_options(ft, cfg);
  ft->add_option("--checkpoint", ft_checkpoint, "pre-trained checkpoint");
  ft->add_flag("--from-scratch", from_scratch,
               "start from a randomly initialized encoder");

  // eval
  std::string eval_checkpoint, eval_split = "test", eval_out;
  auto* ev = app.add_subcommand("eval", "evaluate a fine-tuned checkpoint");
  add_config_options(ev, cfg);
  ev->add_option("--checkpoint", eval_checkpoint)->required();
  ev->add_option("--split", eval_split, "train | test | val");

  // augment
  Index aug_c = 0;
  auto* aug = app.add_subcommand(
      "augment", "run the crossover augmentation over a corpus and verify "
                 "conservation");
  add_config_options(aug, cfg);
  aug->add_option("--c", aug_c, "fixed split position (default: random)");

  // export
  std::string exp_checkpoint, exp_split = "test", exp_stage = "encoder";
  auto* exp = app.add_subcommand("export", "export embeddings to CSV");
  add_config_options(exp, cfg);
  exp->add_option("--checkpoint", exp_checkpoint)->required();
  exp->add_option("--split", exp_split, "train | test | val");
  exp->add_option("--stage", exp_stage, "encoder | projector_input | group")
      ->check(CLI::IsMember({"encoder", "projector_input", "group"}));

  // gradcheck
  ModelCheckConfig gc;
  double gc_tolerance = 1e-4;
  std::string gc_out;
  auto* gcheck = app.add_subcommand(
      "gradcheck", "finite-difference check of the reduced float64 model");
  gcheck->add_option("--coords", gc.coords_per_block,
                     "sampled coordinates per parameter block");
  gcheck->add_option("--tol", gc_tolerance);
  gcheck->add_option("--seed", gc.seed);
  gcheck->add_option("--out", gc_out);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (synth->parsed()) return cmd_synth(spec, synth_out);
    if (check->parsed()) return cmd_check(cfg);
    if (pre->parsed()) return cmd_pretrain(cfg);
    if (ft->parsed()) return cmd_finetune(cfg, ft_checkpoint, from_scratch);
    if (ev->parsed()) {
      ExperimentConfig overrides;
      overrides.data_path = cfg.data_path;
      overrides.task = ev->count("--task") > 0 ? cfg.task : std::string();
      return cmd_eval(overrides, eval_checkpoint, eval_split, cfg.out_dir);
    }
    if (aug->parsed()) return cmd_augment(cfg, aug_c);
    if (exp->parsed()) {
      ExperimentConfig overrides;
      overrides.data_path = cfg.data_path;
      return cmd_export(overrides, exp_checkpoint, exp_split, exp_stage,
                        cfg.out_dir);
    }
    if (gcheck->parsed()) return cmd_gradcheck(gc, gc_tolerance, gc_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "error: no subcommand\n";
  return 1;
}

}  // namespace memhacl
