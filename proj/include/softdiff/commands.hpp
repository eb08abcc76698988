#pragma once

#include "softdiff/config.hpp"
#include "softdiff/verify.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace softdiff {

namespace fs = std::filesystem;

/// Clean training set and held-out set, each from its own child stream of the root seed.
Matrix training_data(const ExperimentConfig& cfg);
Matrix holdout_data(const ExperimentConfig& cfg);

/// Schedule named by cfg.schedule.source. `distances` receives the
/// candidate distance matrix when the schedule is built from the graph.
Schedule build_schedule(const ExperimentConfig& cfg, Matrix* distances = nullptr);
CorruptionProcess resolve_process(const ExperimentConfig& cfg);

/// schedule.json, plus distances.csv for graph schedules.
Schedule cmd_schedule(const ExperimentConfig& cfg, const fs::path& out);

/// model.sdm and loss_trace.csv.
TrainResult cmd_train(const ExperimentConfig& cfg, const fs::path& out);

/// samples.sdt and the samples.json sidecar. A checkpoint is required
/// unless the sampler uses the oracle denoiser.
Matrix cmd_sample(const ExperimentConfig& cfg, const fs::path& out, const std::optional<fs::path>& checkpoint);

struct ScoreError {
  double t;
  double mse;
  /// |S_model - S_true| / |S_true| over all test points (relative L2(q_t) error).
  double relative_error;
  /// Mean over points of |s_model - s_true| / |s_true|.
  double pointwise_relative_error;
};

struct EvalReport {
  std::string config_hash;
  int nfe = 0;
  double sliced_w2 = 0.0;
  double moment_w2 = 0.0;
  std::vector<ScoreError> score_errors;
  double wall_clock_seconds = 0.0;
};

/// eval.json. Refuses samples whose sidecar hash differs from the config.
/// Score errors need a mixture dataset and a checkpoint. Wall-clock time is
/// returned but not written, so the file is reproducible.
EvalReport cmd_eval(const ExperimentConfig& cfg, const fs::path& out, const fs::path& samples,
                    const std::optional<fs::path>& checkpoint);

struct VerifyReport {
  std::vector<SuiteResult> suites;
  bool passed() const;
};

/// verify.json with the constancy, gradient, VE-reduction and oracle-sampler suites.
VerifyReport cmd_verify(const ExperimentConfig& cfg, const fs::path& out);

struct SweepRow {
  int nfe;
  double sliced_w2;
  double moment_w2;
};

/// nfe_sweep.csv over the given step counts (cfg.eval.sweep_steps when empty).
std::vector<SweepRow> cmd_sweep_nfe(const ExperimentConfig& cfg, const fs::path& out,
                                    const std::optional<fs::path>& checkpoint, std::vector<int> steps);

}  // namespace softdiff
