#include "memhacl/eval.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>

namespace memhacl {

using nlohmann::json;

json EvalReport::to_json() const {
  json conf = json::array();
  for (Index r = 0; r < confusion.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < confusion.cols(); ++c) row.push_back(confusion(r, c));
    conf.push_back(row);
  }
  return json{{"task", task},           {"split", split},
              {"accuracy", accuracy},   {"confusion", conf},
              {"n_samples", n_samples}, {"checkpoint_id", checkpoint_id}};
}

EvalReport evaluate(FinetuneModel<float>& model, const LabeledDataset& dataset,
                    Split split, LabelTask task, Index batch_size,
                    const std::string& checkpoint_id) {
  if (model.classifier.num_classes() != task_num_classes(task)) {
    throw std::invalid_argument(
        "task needs " + std::to_string(task_num_classes(task)) +
        " classes but the classifier has " +
        std::to_string(model.classifier.num_classes()));
  }
  const FinetuneView view = reshape_for_finetune(dataset, split);
  if (view.size() == 0) {
    throw std::invalid_argument("split '" + to_string(split) + "' is empty");
  }

  const int k = task_num_classes(task);
  EvalReport report;
  report.task = to_string(task);
  report.split = to_string(split);
  report.checkpoint_id = checkpoint_id;
  report.n_samples = view.size();
  report.confusion = CountMatrix::Zero(k, k);

  std::mt19937_64 unused_rng(0);  // dropout is inert in eval mode
  std::vector<MESample<float>> samples;
  std::vector<int> truths;
  for (Index begin = 0; begin < view.size(); begin += batch_size) {
    const Index end = std::min(view.size(), begin + batch_size);
    samples.clear();
    truths.clear();
    for (Index i = begin; i < end; ++i) {
      const auto [clip, subject] = view.clip_subject(i);
      samples.push_back(dataset.sample(clip, subject));
      truths.push_back(task_label(dataset.labels(clip, subject), task));
    }
    const Matrix<float> logits = model.forward(
        seq_batch_from_samples(samples), Mode::Eval, unused_rng);
    for (Index i = 0; i < logits.cols(); ++i) {
      Index predicted = 0;
      logits.col(i).maxCoeff(&predicted);
      report.confusion(truths[static_cast<std::size_t>(i)],
                       static_cast<Index>(predicted)) += 1;
    }
  }
  report.accuracy = static_cast<double>(report.confusion.trace()) /
                    static_cast<double>(report.n_samples);
  return report;
}

double accuracy_on_split(FinetuneModel<float>& model,
                         const LabeledDataset& dataset, Split split,
                         LabelTask task, Index batch_size) {
  return evaluate(model, dataset, split, task, batch_size).accuracy;
}

RepeatFinetuneSummary repeat_finetune_eval(const Checkpoint* pretrained,
                                           const ExperimentConfig& config,
                                           const LabeledDataset& dataset,
                                           int n) {
  if (n < 1) throw std::invalid_argument("repeat count must be >= 1");
  RepeatFinetuneSummary summary;
  summary.reports.resize(static_cast<std::size_t>(n));
  summary.best_val_accuracies.resize(static_cast<std::size_t>(n));
  summary.seeds.resize(static_cast<std::size_t>(n));

  auto run_one = [&](int i) {
    ExperimentConfig run_config = config;
    run_config.stage = "finetune";
    run_config.seed =
        derive_seed(config.seed, "repeat", static_cast<std::uint64_t>(i));
    summary.seeds[static_cast<std::size_t>(i)] = run_config.seed;
    FinetuneOutput out = finetune(run_config, dataset, pretrained);
    FinetuneModel<float> best = finetune_model_from_checkpoint(
        out.best_checkpoint, dataset.channels(), dataset.timepoints());
    summary.reports[static_cast<std::size_t>(i)] =
        evaluate(best, dataset, Split::Test, run_config.label_task(), 256,
                 "repeat-" + std::to_string(i) + "-epoch-" +
                     std::to_string(out.best_epoch));
    summary.best_val_accuracies[static_cast<std::size_t>(i)] =
        out.best_val_accuracy;
  };

  const int workers = std::max(1, std::min(config.threads, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) run_one(i);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&]() {
        for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
          run_one(i);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  double mean = 0.0;
  for (const auto& r : summary.reports) mean += r.accuracy;
  mean /= n;
  double var = 0.0;
  for (const auto& r : summary.reports) {
    var += (r.accuracy - mean) * (r.accuracy - mean);
  }
  summary.mean_accuracy = mean;
  summary.std_accuracy = n > 1 ? std::sqrt(var / (n - 1)) : 0.0;
  return summary;
}

EmbeddingStage embedding_stage_from_string(const std::string& name) {
  if (name == "encoder") return EmbeddingStage::Encoder;
  if (name == "projector_input") return EmbeddingStage::ProjectorInput;
  if (name == "group") return EmbeddingStage::Group;
  throw std::invalid_argument("unknown embedding stage '" + name + "'");
}

void export_embeddings(Encoder<float>& encoder, Projector<float>* projector,
                       const LabeledDataset& dataset, Split split,
                       EmbeddingStage stage,
                       const std::filesystem::path& csv_path) {
  if (stage != EmbeddingStage::Encoder && !projector) {
    throw std::invalid_argument(
        "this embedding stage needs a checkpoint that still has the projector");
  }
  std::ofstream out(csv_path);
  if (!out) throw std::runtime_error("cannot write " + csv_path.string());

  const Index feat_dim = stage == EmbeddingStage::Encoder
                             ? encoder.embed_dim()
                             : projector->latent_dim();
  out << "clip_id,subject_id,split,valence,arousal,four_class";
  for (Index f = 0; f < feat_dim; ++f) out << ",f" << f;
  out << "\n";

  char buf[32];
  const auto write_row = [&](Index clip, Index subject,
                             const Vector<float>& features) {
    const Labels& l = dataset.labels(clip, subject);
    out << clip << "," << subject << "," << to_string(split) << ","
        << l.valence_binary << "," << l.arousal_binary << "," << l.four_class;
    for (Index f = 0; f < features.size(); ++f) {
      std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(features(f)));
      out << "," << buf;
    }
    out << "\n";
  };

  std::mt19937_64 unused_rng(0);
  if (stage == EmbeddingStage::Group) {
    // One group per clip: all subjects of the clip are the members.
    for (Index clip : dataset.clips_in_split(split)) {
      std::vector<MESample<float>> members;
      for (Index s = 0; s < dataset.num_subjects(); ++s) {
        members.push_back(dataset.sample(clip, s));
      }
      const Matrix<float> embeddings =
          encode_batch(encoder, members, Mode::Eval);
      const Vector<float> rep =
          projector->group_project(embeddings, Mode::Eval, unused_rng);
      write_row(clip, 0, rep);
    }
    return;
  }

  const FinetuneView view = reshape_for_finetune(dataset, split);
  constexpr Index kBatch = 256;
  std::vector<MESample<float>> samples;
  std::vector<std::pair<Index, Index>> ids;
  for (Index begin = 0; begin < view.size(); begin += kBatch) {
    const Index end = std::min(view.size(), begin + kBatch);
    samples.clear();
    ids.clear();
    for (Index i = begin; i < end; ++i) {
      const auto [clip, subject] = view.clip_subject(i);
      samples.push_back(dataset.sample(clip, subject));
      ids.emplace_back(clip, subject);
    }
    Matrix<float> features =
        encode_batch(encoder, samples, Mode::Eval);
    if (stage == EmbeddingStage::ProjectorInput) {
      features = projector->lift(features, Mode::Eval, unused_rng);
    }
    for (Index i = 0; i < features.cols(); ++i) {
      write_row(ids[static_cast<std::size_t>(i)].first,
                ids[static_cast<std::size_t>(i)].second, features.col(i));
    }
  }
}

}  // namespace memhacl
