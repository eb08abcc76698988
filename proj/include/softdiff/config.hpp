#pragma once

#include "softdiff/datasets.hpp"
#include "softdiff/objective.hpp"
#include "softdiff/sampler.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace softdiff {

struct DatasetConfig {
  /// "gmm" or "blobs".
  std::string kind = "gmm";
  /// Named mixture ("gaussian_2d", "mixture_2d") or "custom" to use `gmm`.
  std::string preset = "mixture_2d";
  GaussianMixture gmm;
  BlobSpec blobs;
  Eigen::Index num_train = 4096;
  Eigen::Index num_holdout = 4096;
};

struct CorruptionConfig {
  /// "blur" or "fade".
  std::string family = "blur";
  int half_size = 8;
  double std_min = 0.01;
  double std_max = 6.0;
  /// Fade only: per-coordinate rates; empty means all ones.
  std::vector<double> fade_rates;
  double fade_level_max = 1.0;
  double sigma_min = kSigmaMin;
  double sigma_max = 0.1;
  double ramp_end = 0.2;
};

struct ScheduleConfig {
  /// "linear", "file", "auto" or "mse-matched".
  std::string source = "linear";
  std::string path;
  int candidates = 256;
  int target_nodes = 32;
  Eigen::Index points_per_candidate = 2048;
  int num_projections = 64;
  int mse_points = 32;
};

struct SamplerSection {
  /// "momentum" or "naive".
  std::string kind = "momentum";
  /// "model" or "oracle" (mixture datasets only).
  std::string denoiser = "model";
  std::string noise_estimate = "normalized";
  int num_steps = 64;
  Eigen::Index num_samples = 4096;
};

struct EvalConfig {
  int num_projections = 64;
  std::vector<double> score_times = {0.3, 0.6, 0.9};
  Eigen::Index score_points = 1000;
  std::vector<int> sweep_steps = {8, 16, 32, 64, 128};
};

struct VerifyConfig {
  Eigen::Index mc_samples = 100000;
  std::vector<double> times = {0.3, 0.6, 0.9};
  int gradient_params = 50;
  Eigen::Index ve_states = 1000;
  Eigen::Index sampler_samples = 10000;
};

struct ExperimentConfig {
  DatasetConfig dataset;
  CorruptionConfig corruption;
  ScheduleConfig schedule;
  ModelSpec model;
  TrainConfig train;
  SamplerSection sampler;
  EvalConfig eval;
  VerifyConfig verify;
  std::uint64_t seed = 0;
  std::string output_dir = "out";

  /// Throws ConfigError naming the first invalid field.
  void validate() const;
  DatasetSpec dataset_spec() const;
  OperatorFamily family() const;
  NoiseSchedule noise() const;
  SamplerConfig sampler_config() const;
};

/// Missing keys take defaults; unknown keys and bad values raise ConfigError.
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Canonical form: every field, keys sorted.
std::string config_to_json(const ExperimentConfig& cfg);

/// FNV-1a over the canonical JSON with output_dir removed.
std::uint64_t config_hash(const ExperimentConfig& cfg);
std::string hash_hex(std::uint64_t h);

}  // namespace softdiff
