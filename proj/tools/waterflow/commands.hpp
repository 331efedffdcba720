// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "project_config.hpp"

namespace wf::cli {

/// Flags shared by every subcommand.
struct GlobalOptions {
  std::string config;
  std::optional<std::size_t> jobs;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

struct DatasetOptions {
  std::string out;
  std::optional<std::size_t> count;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> families;
  bool pnm = false;
};

struct TrainDenoiserOptions {
  std::string out;
  std::string data;
  std::optional<std::size_t> steps;
  std::optional<std::size_t> batch;
  std::optional<double> lr;
};

struct TrainFlowOptions {
  std::string denoiser;
  std::string out;
  std::string data;
  std::optional<double> lambda_n;
  std::optional<double> radius;
  std::optional<std::uint64_t> key_seed;
  std::optional<std::size_t> epochs;
};

struct EmbedOptions {
  std::string denoiser;
  std::string flow;
  std::string in;
  std::string out;
  std::string record;
  std::optional<double> radius;
  std::optional<double> ssim_threshold;
  std::optional<std::uint64_t> key_seed;
  std::optional<std::string> scope;
  std::optional<bool> store_wstar;
  std::size_t channels = 4;
};

struct AttackOptions {
  std::string in;
  std::string out;
  std::string kind;
  std::string denoiser;
  std::optional<std::uint64_t> seed;
  std::optional<int> jpeg_quality;
  std::optional<std::size_t> regen_level;
  std::optional<double> noise_std;
  std::size_t channels = 4;
};

struct DetectOptions {
  std::string in;
  std::string record;
  std::string denoiser;
  std::string flow;
  std::optional<std::string> mode;
  std::optional<double> threshold;
  bool twice_dof = false;
  std::size_t channels = 4;
};

struct BenchOptions {
  std::string spec;
  std::string axis;
  std::vector<double> points;
};

struct ConvertOptions {
  std::string in;
  std::string out;
  std::size_t channels = 4;
};

/// Loads --config (if any) and applies the global flag overrides.
ProjectConfig resolve_config(const GlobalOptions& g);

int cmd_dataset(const GlobalOptions& g, const DatasetOptions& o);
int cmd_train_denoiser(const GlobalOptions& g, const TrainDenoiserOptions& o);
int cmd_train_flow(const GlobalOptions& g, const TrainFlowOptions& o);
int cmd_embed(const GlobalOptions& g, const EmbedOptions& o);
int cmd_attack(const GlobalOptions& g, const AttackOptions& o);
/// Exit 0 when the watermark is detected, 1 when it is not.
int cmd_detect(const GlobalOptions& g, const DetectOptions& o);
int cmd_bench_run(const GlobalOptions& g, const BenchOptions& o);
int cmd_bench_sweep(const GlobalOptions& g, const BenchOptions& o);
int cmd_convert(const GlobalOptions& g, const ConvertOptions& o);

}  // namespace wf::cli
