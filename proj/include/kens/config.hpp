#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kens/ensemble.hpp"
#include "kens/trainer.hpp"

namespace kens {

struct KgSource {
  std::string id;
  std::filesystem::path triples;
};

struct AlignmentSource {
  std::string a, b;
  std::filesystem::path path;
};

// One JSON document drives every command; tuned defaults are baked in per
// model kind and overridden by whatever the file provides.
struct RunConfig {
  std::vector<KgSource> kgs;
  std::vector<AlignmentSource> alignments;
  std::array<double, 3> split_ratios{0.6, 0.3, 0.1};
  uint64_t split_seed = 7;
  TrainConfig train;
  EnsembleMode mode = EnsembleMode::Boost;
  int k = 10;
  std::filesystem::path output_dir = "out";
  std::optional<std::string> target;
  std::optional<std::filesystem::path> queries;
  std::optional<std::filesystem::path> checkpoint;

  std::filesystem::path checkpoint_path() const {
    return checkpoint ? *checkpoint : output_dir / "checkpoint.emb";
  }
};

// Parses and validates; referenced data files must exist.
RunConfig load_run_config(const std::filesystem::path& path);

// Fully-resolved copy (all defaults filled in) for reproducibility.
std::string resolved_config_json(const RunConfig& cfg);

}  // namespace kens
