#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "memhacl/types.hpp"

namespace memhacl {

enum class Modality { EEG, GSR, Resp, Temp, Other };

std::string to_string(Modality m);
Modality modality_from_string(const std::string& name);

struct ModalityEntry {
  Modality modality = Modality::Other;
  Index channels = 0;

  friend bool operator==(const ModalityEntry&, const ModalityEntry&) = default;
};

// Ordered partition of the channel axis into named modalities.
struct ModalityLayout {
  std::vector<ModalityEntry> entries;

  Index total_channels() const;

  // Throws std::invalid_argument on duplicate modalities or non-positive
  // channel counts; `expected_channels` < 0 skips the sum check.
  void validate(Index expected_channels = -1) const;

  // First channel row covered by entry `i` in a stacked sample matrix.
  Index channel_offset(std::size_t i) const;

  // Restriction of the layout to the listed modalities, preserving order.
  // Throws if a requested modality is absent.
  ModalityLayout select(const std::vector<Modality>& keep) const;

  friend bool operator==(const ModalityLayout&, const ModalityLayout&) = default;
};

// Convenience layouts used by the synthetic generator and docs.
ModalityLayout single_modality_layout(Modality m, Index channels);

}  // namespace memhacl
