#pragma once

#include <filesystem>

#include "memhacl/dataset.hpp"

namespace memhacl {

// On-disk container: a directory with metadata.json, samples.bin (row-major
// [V][S][1][C][M] float32 little-endian) and an optional ratings.csv.
// See docs/formats.md for the bit-exact layout.

LabeledDataset load_container(const std::filesystem::path& dir,
                              double label_threshold = 5.0);

void save_container(const LabeledDataset& dataset,
                    const std::filesystem::path& dir);

}  // namespace memhacl
