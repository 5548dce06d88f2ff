#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "memhacl/adam.hpp"
#include "memhacl/nn/params.hpp"

namespace memhacl {

// Versioned binary checkpoint: header (magic, version, stage, config
// snapshot, rng state, counters) followed by named parameter blocks stored
// as float32 little-endian, column-major. See docs/formats.md.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  std::string stage;        // "pretrain" | "finetune"
  std::string config_json;  // config snapshot, verbatim
  std::string rng_state;    // serialized mt19937_64 stream
  std::uint64_t epoch = 0;
  std::uint64_t adam_step = 0;
  std::vector<std::pair<std::string, Matrix<float>>> blocks;

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);

  const Matrix<float>* find(const std::string& name) const;
};

// Copies values out of a parameter/state list into named blocks (as f32).
template <class Scalar>
void append_blocks(Checkpoint& ckpt, const ParamList<Scalar>& refs,
                   const std::string& name_prefix = "") {
  for (const auto& r : refs) {
    ckpt.blocks.emplace_back(name_prefix + r.name,
                             r.value->template cast<float>());
  }
}

// Restores a parameter/state list from named blocks; throws on missing
// names or shape mismatches.
template <class Scalar>
void load_blocks(const Checkpoint& ckpt, const ParamList<Scalar>& refs,
                 const std::string& name_prefix = "") {
  for (const auto& r : refs) {
    const auto* block = ckpt.find(name_prefix + r.name);
    if (!block) {
      throw std::runtime_error("checkpoint is missing block '" + name_prefix +
                               r.name + "'");
    }
    if (block->rows() != r.value->rows() || block->cols() != r.value->cols()) {
      throw std::runtime_error("checkpoint block '" + name_prefix + r.name +
                               "' has mismatched shape");
    }
    *r.value = block->template cast<Scalar>();
  }
}

template <class Scalar>
void append_adam_state(Checkpoint& ckpt, Adam<Scalar>& adam,
                       const ParamList<Scalar>& params) {
  ckpt.adam_step = adam.step_count();
  for (std::size_t i = 0; i < params.size(); ++i) {
    ckpt.blocks.emplace_back("adam.m:" + params[i].name,
                             adam.first_moments()[i].template cast<float>());
    ckpt.blocks.emplace_back("adam.v:" + params[i].name,
                             adam.second_moments()[i].template cast<float>());
  }
}

template <class Scalar>
void load_adam_state(const Checkpoint& ckpt, Adam<Scalar>& adam,
                     const ParamList<Scalar>& params) {
  adam.bind(params);
  adam.set_step_count(ckpt.adam_step);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto* m = ckpt.find("adam.m:" + params[i].name);
    const auto* v = ckpt.find("adam.v:" + params[i].name);
    if (!m || !v) return;  // checkpoint saved without optimizer state
    adam.first_moments()[i] = m->template cast<Scalar>();
    adam.second_moments()[i] = v->template cast<Scalar>();
  }
}

}  // namespace memhacl
