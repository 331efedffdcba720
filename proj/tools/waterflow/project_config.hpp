// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "waterflow/dataset.hpp"
#include "waterflow/denoiser.hpp"
#include "waterflow/detection.hpp"
#include "waterflow/embed.hpp"
#include "waterflow/flow_training.hpp"

namespace wf::cli {

struct DiffusionSettings {
  std::size_t T = 50;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  DenoiserTrainConfig train;
};

/// Everything a subcommand may read from --config. Flags win over the file.
struct ProjectConfig {
  std::uint64_t seed = 0;
  std::filesystem::path checkpoints = "checkpoints";
  std::filesystem::path outputs = "out";
  ToyDatasetConfig dataset{0, 32};
  DiffusionSettings diffusion;
  EmbedConfig embed;
  DetectionConfig detection;
  FlowTrainConfig flow_training;
  std::size_t jobs = 1;
};

nlohmann::json to_json(const ProjectConfig& c);
/// Rejects unknown keys and type mismatches with ConfigError.
ProjectConfig project_config_from_json(const nlohmann::json& j);
ProjectConfig load_project_config(const std::filesystem::path& path);

}  // namespace wf::cli
