#include "memhacl/container.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace memhacl {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<RatingRecord> parse_ratings_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open ratings file: " + path.string());
  std::vector<RatingRecord> out;
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("ratings file is empty: " + path.string());
  }
  if (line != "subject_id,clip_id,valence,arousal") {
    throw std::runtime_error("unexpected ratings header in " + path.string() +
                             ": '" + line + "'");
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    RatingRecord r;
    char trailing = 0;
    if (std::sscanf(line.c_str(), "%d,%d,%lf,%lf%c", &r.subject_id, &r.clip_id,
                    &r.valence, &r.arousal, &trailing) != 4) {
      throw std::runtime_error("malformed ratings row at " + path.string() +
                               ":" + std::to_string(lineno));
    }
    out.push_back(r);
  }
  return out;
}

void write_ratings_csv(const std::vector<RatingRecord>& ratings,
                       const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "subject_id,clip_id,valence,arousal\n";
  char buf[128];
  for (const auto& r : ratings) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%.9g,%.9g\n", r.subject_id,
                  r.clip_id, r.valence, r.arousal);
    out << buf;
  }
}

json layout_to_json(const ModalityLayout& layout) {
  json arr = json::array();
  for (const auto& e : layout.entries) {
    arr.push_back({{"modality", to_string(e.modality)},
                   {"channels", e.channels}});
  }
  return arr;
}

ModalityLayout layout_from_json(const json& arr) {
  ModalityLayout layout;
  for (const auto& e : arr) {
    layout.entries.push_back(
        {modality_from_string(e.at("modality").get<std::string>()),
         e.at("channels").get<Index>()});
  }
  return layout;
}

}  // namespace

LabeledDataset load_container(const fs::path& dir, double label_threshold) {
  const fs::path meta_path = dir / "metadata.json";
  std::ifstream meta_in(meta_path);
  if (!meta_in) {
    throw std::runtime_error("missing container metadata: " + meta_path.string());
  }
  json meta;
  try {
    meta_in >> meta;
  } catch (const json::exception& e) {
    throw std::runtime_error("corrupt metadata in " + meta_path.string() + ": " +
                             e.what());
  }

  try {
    if (meta.at("format").get<std::string>() != "me-container") {
      throw std::runtime_error("not an me-container");
    }
    if (meta.at("version").get<int>() != 1) {
      throw std::runtime_error("unsupported container version " +
                               std::to_string(meta.at("version").get<int>()));
    }
    if (meta.at("dtype").get<std::string>() != "f32le") {
      throw std::runtime_error("unsupported dtype '" +
                               meta.at("dtype").get<std::string>() + "'");
    }
    const auto dims = meta.at("dims").get<std::vector<Index>>();
    if (dims.size() != 5 || dims[2] != 1) {
      throw std::runtime_error("dims must be [clips, subjects, 1, channels, timepoints]");
    }
    LabeledDataset dataset(dims[0], dims[1], dims[3], dims[4],
                           meta.at("sample_rate").get<double>(),
                           layout_from_json(meta.at("layout")));

    const fs::path bin_path = dir / "samples.bin";
    std::ifstream bin(bin_path, std::ios::binary | std::ios::ate);
    if (!bin) throw std::runtime_error("missing payload: " + bin_path.string());
    const auto actual_bytes = static_cast<std::uint64_t>(bin.tellg());
    const std::uint64_t expected_bytes =
        static_cast<std::uint64_t>(dataset.storage().size()) * sizeof(float);
    if (actual_bytes != expected_bytes) {
      throw std::runtime_error(
          bin_path.string() + " holds " + std::to_string(actual_bytes) +
          " bytes, metadata dims imply " + std::to_string(expected_bytes));
    }
    bin.seekg(0);
    bin.read(reinterpret_cast<char*>(dataset.storage().data()),
             static_cast<std::streamsize>(expected_bytes));
    if (!bin) throw std::runtime_error("short read from " + bin_path.string());

    std::vector<RatingRecord> ratings;
    if (meta.contains("ratings")) {
      const auto& r = meta.at("ratings");
      if (r.is_string()) {
        ratings = parse_ratings_csv(dir / r.get<std::string>());
      } else {
        for (const auto& row : r) {
          ratings.push_back({row.at("subject_id").get<int>(),
                             row.at("clip_id").get<int>(),
                             row.at("valence").get<double>(),
                             row.at("arousal").get<double>()});
        }
      }
    }
    if (!ratings.empty()) {
      // Canonical order: clip-major, matching the payload.
      std::vector<RatingRecord> ordered(
          static_cast<std::size_t>(dataset.num_clips() * dataset.num_subjects()));
      std::vector<bool> seen(ordered.size(), false);
      for (const auto& r : ratings) {
        if (r.clip_id < 0 || r.clip_id >= dataset.num_clips() ||
            r.subject_id < 0 || r.subject_id >= dataset.num_subjects()) {
          throw std::runtime_error("rating refers to out-of-range clip " +
                                   std::to_string(r.clip_id) + " / subject " +
                                   std::to_string(r.subject_id));
        }
        const auto idx = static_cast<std::size_t>(
            r.clip_id * dataset.num_subjects() + r.subject_id);
        if (seen[idx]) {
          throw std::runtime_error("duplicate rating for clip " +
                                   std::to_string(r.clip_id) + ", subject " +
                                   std::to_string(r.subject_id));
        }
        seen[idx] = true;
        ordered[idx] = r;
      }
      for (std::size_t i = 0; i < seen.size(); ++i) {
        if (!seen[i]) {
          throw std::runtime_error(
              "ratings table incomplete: missing clip " +
              std::to_string(i / dataset.num_subjects()) + ", subject " +
              std::to_string(i % dataset.num_subjects()));
        }
      }
      dataset.set_ratings(std::move(ordered), label_threshold);
    }

    dataset.validate();
    return dataset;
  } catch (const json::exception& e) {
    throw std::runtime_error("corrupt metadata in " + meta_path.string() + ": " +
                             e.what());
  }
}

void save_container(const LabeledDataset& dataset, const fs::path& dir) {
  fs::create_directories(dir);

  json meta;
  meta["format"] = "me-container";
  meta["version"] = 1;
  meta["dims"] = dataset.dims();
  meta["dtype"] = "f32le";
  meta["sample_rate"] = dataset.sample_rate();
  meta["layout"] = layout_to_json(dataset.layout());
  if (dataset.has_ratings()) meta["ratings"] = "ratings.csv";

  std::ofstream meta_out(dir / "metadata.json");
  if (!meta_out) {
    throw std::runtime_error("cannot write " + (dir / "metadata.json").string());
  }
  meta_out << meta.dump(2) << "\n";

  std::ofstream bin(dir / "samples.bin", std::ios::binary);
  if (!bin) {
    throw std::runtime_error("cannot write " + (dir / "samples.bin").string());
  }
  bin.write(reinterpret_cast<const char*>(dataset.storage().data()),
            static_cast<std::streamsize>(dataset.storage().size() * sizeof(float)));

  if (dataset.has_ratings()) {
    write_ratings_csv(dataset.ratings(), dir / "ratings.csv");
  }
}

}  // namespace memhacl
