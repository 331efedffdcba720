// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "waterflow/attacks.hpp"
#include "waterflow/dataset.hpp"
#include "waterflow/detection.hpp"
#include "waterflow/embed.hpp"
#include "waterflow/flow_training.hpp"

namespace wf {

/// Fraction of reports with detection_probability > threshold.
double wdr(const std::vector<DetectionReport>& reports, double threshold);
double wdr(const std::vector<double>& detection_probabilities, double threshold);

/// Mann–Whitney AUC: P(pos > neg) + ½·P(pos = neg).
double auc(const std::vector<double>& pos, const std::vector<double>& neg);

/// TPR of the rule `score > t` at the smallest t in {scores} ∪ {-inf}
/// whose false-positive rate is at most `fpr`.
double tpr_at_fpr(const std::vector<double>& pos, const std::vector<double>& neg, double fpr = 0.01);

/// Runs fn(0..n-1) on up to `jobs` threads. Each index is handled by exactly
/// one call; results must be written to per-index slots.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

/// Benchmark description. Serialised as JSON; unknown keys are rejected.
/// See docs/bench-spec.md for the schema.
struct BenchmarkSpec {
  std::uint64_t seed = 0;
  ToyDatasetConfig dataset{1234, 32};
  ToyDatasetConfig train_dataset{0, 32};
  std::filesystem::path denoiser;
  /// Trained flow checkpoint. When empty a flow is trained from `training`.
  std::optional<std::filesystem::path> flow;
  EmbedConfig embed;
  std::vector<std::string> attacks{"brightness", "contrast", "jpeg", "gnoise", "gblur", "regen", "all_no_rotation"};
  AttackParams attack_params;
  DetectionConfig detection;
  std::vector<DetectionMode> modes{DetectionMode::kStored, DetectionMode::kRecompute};
  bool identity_baseline = true;
  FlowTrainConfig training;
  std::vector<double> sweep_lambda_n{1e-2, 1e-6};
  std::vector<double> sweep_radius{5, 20};
  std::vector<double> sweep_ssim_threshold{0.92, 0.99};
  std::filesystem::path output_dir = "bench_out";
  std::size_t jobs = 1;
};

nlohmann::json to_json(const BenchmarkSpec& spec);
/// Throws ConfigError naming the offending key on unknown keys or bad values.
BenchmarkSpec benchmark_spec_from_json(const nlohmann::json& j);
BenchmarkSpec load_benchmark_spec(const std::filesystem::path& path);

struct ResultRow {
  std::string variant;  // "waterflow" or "identity"
  std::string mode;     // "stored" or "recompute"
  std::string attack;   // "none" for the pre-attack row
  std::size_t n = 0;
  double wdr = 0.0;
  double auc = 0.0;
  double tpr_at_1fpr = 0.0;
  /// Attacked watermarked image against the original.
  double psnr_mean = 0.0;
  double ssim_mean = 0.0;
};

struct ImageTiming {
  std::string variant;
  std::size_t image = 0;
  EmbedTiming timing;
};

struct ResultTable {
  std::vector<ResultRow> rows;
  std::vector<ImageTiming> timing;

  const ResultRow* find(const std::string& variant, const std::string& mode, const std::string& attack) const;
  /// Mean AUC over every row except "none" for the variant and mode.
  double mean_post_attack_auc(const std::string& variant, const std::string& mode) const;
  std::string csv() const;
  std::string timing_csv() const;
  nlohmann::json to_json() const;
};

/// Per-image detection probabilities for one variant and mode, by attack.
/// Exposed so tests can check the aggregation.
struct ScoreSet {
  std::vector<double> pos;
  std::vector<double> neg;
  std::vector<double> psnr;
  std::vector<double> ssim;
};

/// Loads the denoiser, loads or trains the flow, embeds the dataset with the
/// trained flow and the identity flow, applies every attack to watermarked
/// and original images alike, detects and aggregates. Writes results.csv,
/// results.json and timing.csv into the output directory.
ResultTable run_benchmark(const BenchmarkSpec& spec, bool write_outputs = true);

enum class SweepAxis { kLambdaN, kRadius, kSsimThreshold };
SweepAxis parse_sweep_axis(const std::string& name);
std::string sweep_axis_name(SweepAxis axis);

struct SweepPoint {
  double value = 0.0;
  ResultTable table;
  double mean_post_attack_auc = 0.0;
  double psnr_mean = 0.0;
  double clean_wdr = 0.0;
};

/// One benchmark per axis point (trained flow, stored detection, no
/// identity baseline). λ_n and radius points retrain the flow. Each point
/// writes to `<output_dir>/<axis>_<index>/`; a trend summary goes to
/// sweep.csv and sweep.json.
std::vector<SweepPoint> run_sweep(const BenchmarkSpec& spec, SweepAxis axis, const std::vector<double>& points,
                                  bool write_outputs = true);

}  // namespace wf
