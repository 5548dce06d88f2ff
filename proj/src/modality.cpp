#include "memhacl/modality.hpp"

#include <algorithm>

namespace memhacl {

std::string to_string(Modality m) {
  switch (m) {
    case Modality::EEG: return "EEG";
    case Modality::GSR: return "GSR";
    case Modality::Resp: return "Resp";
    case Modality::Temp: return "Temp";
    case Modality::Other: return "Other";
  }
  return "Other";
}

Modality modality_from_string(const std::string& name) {
  if (name == "EEG") return Modality::EEG;
  if (name == "GSR") return Modality::GSR;
  if (name == "Resp") return Modality::Resp;
  if (name == "Temp") return Modality::Temp;
  if (name == "Other") return Modality::Other;
  throw std::invalid_argument("unknown modality name: '" + name + "'");
}

Index ModalityLayout::total_channels() const {
  Index total = 0;
  for (const auto& e : entries) total += e.channels;
  return total;
}

void ModalityLayout::validate(Index expected_channels) const {
  if (entries.empty()) throw std::invalid_argument("modality layout is empty");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].channels <= 0) {
      throw std::invalid_argument("modality " + to_string(entries[i].modality) +
                                  " has non-positive channel count");
    }
    for (std::size_t j = i + 1; j < entries.size(); ++j) {
      if (entries[i].modality == entries[j].modality) {
        throw std::invalid_argument("duplicate modality in layout: " +
                                    to_string(entries[i].modality));
      }
    }
  }
  if (expected_channels >= 0 && total_channels() != expected_channels) {
    throw std::invalid_argument(
        "modality layout covers " + std::to_string(total_channels()) +
        " channels, dataset declares " + std::to_string(expected_channels));
  }
}

Index ModalityLayout::channel_offset(std::size_t i) const {
  Index off = 0;
  for (std::size_t j = 0; j < i && j < entries.size(); ++j) off += entries[j].channels;
  return off;
}

ModalityLayout ModalityLayout::select(const std::vector<Modality>& keep) const {
  ModalityLayout out;
  for (const auto& e : entries) {
    if (std::find(keep.begin(), keep.end(), e.modality) != keep.end()) {
      out.entries.push_back(e);
    }
  }
  for (Modality m : keep) {
    bool found = false;
    for (const auto& e : entries) found = found || e.modality == m;
    if (!found) {
      throw std::invalid_argument("modality " + to_string(m) +
                                  " not present in layout");
    }
  }
  return out;
}

ModalityLayout single_modality_layout(Modality m, Index channels) {
  return ModalityLayout{{ModalityEntry{m, channels}}};
}

}  // namespace memhacl
