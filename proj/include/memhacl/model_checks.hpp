#pragma once

#include "memhacl/gradcheck.hpp"
#include "memhacl/training.hpp"

namespace memhacl {

// Reduced float64 configuration for end-to-end finite-difference checks.
struct ModelCheckConfig {
  Index channels = 4;        // C
  Index timepoints = 32;     // M
  double scale = 0.125;      // width multiplier
  Index p_clips = 2;         // P
  Index q_half = 2;          // Q
  double tau = 0.1;
  double dropout = 0.5;
  Index coords_per_block = 200;
  double fd_step = 1e-5;
  std::uint64_t seed = 1;
};

// Contrastive path: encoder -> projector -> contrastive loss, train mode
// (batch statistics, dropout with a fixed per-evaluation mask).
GradCheckReport check_contrastive_gradients(const ModelCheckConfig& config);

// Fine-tune path: encoder -> classifier -> cross entropy, train mode.
GradCheckReport check_finetune_gradients(const ModelCheckConfig& config);

}  // namespace memhacl
