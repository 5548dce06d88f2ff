#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "memhacl/training.hpp"

namespace memhacl {

using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

struct EvalReport {
  std::string task;
  std::string split;
  double accuracy = 0.0;
  CountMatrix confusion;  // rows = true class, cols = predicted class
  Index n_samples = 0;
  std::string checkpoint_id;

  nlohmann::json to_json() const;
};

// Deterministic eval-mode pass over one split.
EvalReport evaluate(FinetuneModel<float>& model, const LabeledDataset& dataset,
                    Split split, LabelTask task, Index batch_size = 256,
                    const std::string& checkpoint_id = "");

double accuracy_on_split(FinetuneModel<float>& model,
                         const LabeledDataset& dataset, Split split,
                         LabelTask task, Index batch_size = 256);

struct RepeatFinetuneSummary {
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  std::vector<EvalReport> reports;        // per run, on the test split
  std::vector<std::uint64_t> seeds;       // per run, for exact replay
  std::vector<double> best_val_accuracies;
};

// n independent seeded fine-tunes of `pretrained` (nullptr = untrained
// encoder control); each run keeps its best-validation checkpoint and is
// scored on the test split. Runs execute on config.threads workers; results
// are collected in run order.
RepeatFinetuneSummary repeat_finetune_eval(const Checkpoint* pretrained,
                                           const ExperimentConfig& config,
                                           const LabeledDataset& dataset,
                                           int n);

enum class EmbeddingStage { Encoder, ProjectorInput, Group };

EmbeddingStage embedding_stage_from_string(const std::string& name);

// CSV export of learned features for external plotting.
//  - Encoder:        one row per (clip, subject) sample; D encoder features.
//  - ProjectorInput: one row per sample; the H-dim member-wise lift that
//                    enters the attention unit (needs a projector checkpoint).
//  - Group:          one row per clip; all subjects of the clip form the
//                    group and the H-dim group representation is written.
// Columns: ids and labels first, then f0..fN-1 printed as round-trip-exact
// float32 decimals.
void export_embeddings(Encoder<float>& encoder, Projector<float>* projector,
                       const LabeledDataset& dataset, Split split,
                       EmbeddingStage stage,
                       const std::filesystem::path& csv_path);

}  // namespace memhacl
