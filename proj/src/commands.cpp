#include "softdiff/commands.hpp"

#include "softdiff/benchmarks.hpp"
#include "softdiff/scheduler.hpp"

#include "json.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace softdiff {

using nlohmann::json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("file not found: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string hash_line(const ExperimentConfig& cfg) { return "# config_hash=" + hash_hex(config_hash(cfg)) + "\n"; }

std::uint64_t stream_seed(const ExperimentConfig& cfg, const char* label) {
  return RandomSource(cfg.seed).fork(label).seed();
}

GaussianMixture mixture_of(const ExperimentConfig& cfg) {
  const DatasetSpec spec = cfg.dataset_spec();
  if (!spec.gmm) throw ConfigError("this operation needs a gmm dataset");
  return *spec.gmm;
}

Denoiser make_denoiser(const ExperimentConfig& cfg, const CorruptionProcess& proc,
                       const std::optional<fs::path>& checkpoint, std::shared_ptr<ScoreModel>& holder,
                       std::optional<std::uint64_t>& checkpoint_hash) {
  if (cfg.sampler.denoiser == "oracle") return oracle_denoiser(mixture_of(cfg), proc);
  if (!checkpoint) throw Error("a checkpoint is required for the model denoiser (use --checkpoint)");
  if (!fs::exists(*checkpoint)) throw Error("checkpoint not found: " + checkpoint->string());
  std::uint64_t h = 0;
  holder = std::make_shared<ScoreModel>(load_checkpoint(*checkpoint, cfg.model, &h));
  checkpoint_hash = h;
  return model_denoiser(*holder);
}

Matrix run_sampler(const ExperimentConfig& cfg, const Denoiser& denoiser, const CorruptionProcess& proc,
                   const SamplerConfig& sc) {
  const TerminalDistribution p1 = TerminalDistribution::from_data(training_data(cfg), proc);
  if (cfg.sampler.kind == "naive") return naive_sample(denoiser, proc, sc, p1, cfg.sampler.num_samples);
  return momentum_sample(denoiser, proc, sc, p1, cfg.sampler.num_samples);
}

/// Gaussian W2 between the sample moments and the data law: exact mixture
/// moments when available, held-out moments otherwise.
double moment_distance(const ExperimentConfig& cfg, const Matrix& x, const Matrix& holdout) {
  const auto [m, c] = sample_moments<double>(x);
  const DatasetSpec spec = cfg.dataset_spec();
  if (spec.gmm) return gaussian_w2<double>(m, c, spec.gmm->mean(), spec.gmm->covariance());
  const auto [hm, hc] = sample_moments<double>(holdout);
  return gaussian_w2<double>(m, c, hm, hc);
}

}  // namespace

Matrix training_data(const ExperimentConfig& cfg) {
  RandomSource rng = RandomSource(cfg.seed).fork("data.train");
  return cfg.dataset_spec().generate(cfg.dataset.num_train, rng);
}

Matrix holdout_data(const ExperimentConfig& cfg) {
  RandomSource rng = RandomSource(cfg.seed).fork("data.holdout");
  return cfg.dataset_spec().generate(cfg.dataset.num_holdout, rng);
}

Schedule build_schedule(const ExperimentConfig& cfg, Matrix* distances) {
  const OperatorFamily family = cfg.family();
  const NoiseSchedule noise = cfg.noise();
  Schedule s;
  const std::string& source = cfg.schedule.source;
  if (source == "file") {
    if (!fs::exists(cfg.schedule.path)) throw Error("schedule file not found: " + cfg.schedule.path);
    s = with_noise(load_schedule(cfg.schedule.path), noise);
  } else if (source == "linear") {
    s = CorruptionProcess::linear(family, noise).schedule();
  } else if (source == "auto") {
    RandomSource rng = RandomSource(cfg.seed).fork("schedule");
    const Vector thetas = linear_thetas(family, cfg.schedule.candidates);
    const CandidateGrid grid = build_candidate_grid(training_data(cfg), family, thetas, noise.sigma_max,
                                                    cfg.schedule.points_per_candidate, rng);
    const Matrix d = distance_matrix(grid, cfg.schedule.num_projections, rng);
    const Calibration cal = calibrate_epsilon(d, cfg.schedule.target_nodes);
    s = schedule_from_path(thetas, cal.path, noise);
    s.metric = "sliced_w2";
    s.epsilon = cal.epsilon;
    if (distances) *distances = d;
  } else {
    const Matrix data = training_data(cfg);
    s = mse_matched_schedule(geometric_reference(noise.sigma_min, noise.sigma_max), data, family, noise,
                             cfg.schedule.mse_points)
            .schedule;
  }
  s.dataset = cfg.dataset.kind == "gmm" ? cfg.dataset.preset : "blobs";
  s.config_hash = hash_hex(config_hash(cfg));
  return s;
}

CorruptionProcess resolve_process(const ExperimentConfig& cfg) {
  return CorruptionProcess(cfg.family(), build_schedule(cfg), cfg.noise());
}

Schedule cmd_schedule(const ExperimentConfig& cfg, const fs::path& out) {
  Matrix d;
  const Schedule s = build_schedule(cfg, &d);
  fs::create_directories(out);
  save_schedule(out / "schedule.json", s);
  if (d.size() > 0) write_text(out / "distances.csv", hash_line(cfg) + distances_to_csv(d));
  return s;
}

TrainResult cmd_train(const ExperimentConfig& cfg, const fs::path& out) {
  const CorruptionProcess proc = resolve_process(cfg);
  const Matrix data = training_data(cfg);
  RandomSource rng = RandomSource(cfg.seed).fork("train");
  ScoreModel model = ScoreModel::create(cfg.model, rng);
  TrainResult result = train(std::move(model), data, proc, cfg.train, rng);
  fs::create_directories(out);
  save_checkpoint(out / "model.sdm", result.model, config_hash(cfg));
  write_text(out / "loss_trace.csv", hash_line(cfg) + trace_to_csv(result.trace));
  return result;
}

Matrix cmd_sample(const ExperimentConfig& cfg, const fs::path& out, const std::optional<fs::path>& checkpoint) {
  const CorruptionProcess proc = resolve_process(cfg);
  std::shared_ptr<ScoreModel> holder;
  std::optional<std::uint64_t> ckpt_hash;
  const Denoiser denoiser = make_denoiser(cfg, proc, checkpoint, holder, ckpt_hash);
  const Matrix x = run_sampler(cfg, denoiser, proc, cfg.sampler_config());
  if (!x.allFinite()) throw NumericalError("sampler produced non-finite values");

  fs::create_directories(out);
  save_tensor(out / "samples.sdt", Tensor::from_columns(x, cfg.dataset_spec().item_shape()));
  json meta;
  meta["config_hash"] = hash_hex(config_hash(cfg));
  meta["nfe"] = cfg.sampler.num_steps;
  meta["num_steps"] = cfg.sampler.num_steps;
  meta["seed"] = cfg.seed;
  meta["sampler"] = cfg.sampler.kind;
  meta["denoiser"] = cfg.sampler.denoiser;
  meta["noise_estimate"] = cfg.sampler.noise_estimate;
  meta["count"] = x.cols();
  meta["checkpoint_hash"] = ckpt_hash ? json(hash_hex(*ckpt_hash)) : json(nullptr);
  write_text(out / "samples.json", meta.dump(2) + "\n");
  return x;
}

EvalReport cmd_eval(const ExperimentConfig& cfg, const fs::path& out, const fs::path& samples,
                    const std::optional<fs::path>& checkpoint) {
  const auto start = std::chrono::steady_clock::now();
  fs::path sidecar = samples;
  sidecar.replace_extension(".json");
  if (!fs::exists(samples)) throw Error("samples not found: " + samples.string());
  if (!fs::exists(sidecar)) throw Error("samples sidecar not found: " + sidecar.string());
  const json meta = json::parse(read_text(sidecar));
  const std::string expected = hash_hex(config_hash(cfg));
  const std::string found = meta.value("config_hash", std::string());
  if (found != expected)
    throw Error("samples were produced by config " + found + " but the current config hashes to " + expected);

  const Matrix x = load_tensor(samples).to_columns();
  check_dim("eval samples", cfg.dataset_spec().dim(), x.rows());
  const Matrix holdout = holdout_data(cfg);

  EvalReport report;
  report.config_hash = expected;
  report.nfe = meta.value("nfe", 0);
  RandomSource rng = RandomSource(cfg.seed).fork("eval");
  report.sliced_w2 = empirical_distance(x, holdout, cfg.eval.num_projections, rng);
  report.moment_w2 = moment_distance(cfg, x, holdout);

  if (checkpoint && cfg.dataset.kind == "gmm") {
    if (!fs::exists(*checkpoint)) throw Error("checkpoint not found: " + checkpoint->string());
    const ScoreModel model = load_checkpoint(*checkpoint, cfg.model);
    const CorruptionProcess proc = resolve_process(cfg);
    const GaussianMixture gmm = mixture_of(cfg);
    RandomSource srng = RandomSource(cfg.seed).fork("eval.score");
    for (double t : cfg.eval.score_times) {
      const GaussianMixture gt = pushforward(gmm, to_dense(proc.operator_at(t)), proc.sigma_at(t));
      const Matrix pts = gt.sample(cfg.eval.score_points, srng);
      const Matrix truth = MixtureEvaluator<double>(gt).score_columns(pts);
      const Matrix diff = score_from_model(model, pts, t, proc) - truth;
      const double mse = diff.colwise().squaredNorm().mean();
      const double rel = diff.norm() / truth.norm();
      const double pointwise = (diff.colwise().norm().array() / truth.colwise().norm().array()).mean();
      report.score_errors.push_back({t, mse, rel, pointwise});
    }
  }
  for (const auto& e : report.score_errors)
    if (!std::isfinite(e.mse) || !std::isfinite(e.relative_error)) throw NumericalError("eval: non-finite score error");
  if (!std::isfinite(report.sliced_w2) || !std::isfinite(report.moment_w2))
    throw NumericalError("eval: non-finite distance");

  json j;
  j["config_hash"] = report.config_hash;
  j["nfe"] = report.nfe;
  j["sliced_w2"] = report.sliced_w2;
  j["moment_w2"] = report.moment_w2;
  j["score_errors"] = json::array();
  for (const auto& e : report.score_errors)
    j["score_errors"].push_back({{"t", e.t}, {"mse", e.mse}, {"relative_error", e.relative_error},
                                   {"pointwise_relative_error", e.pointwise_relative_error}});
  write_text(out / "eval.json", j.dump(2) + "\n");
  report.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

bool VerifyReport::passed() const {
  for (const auto& s : suites)
    if (!s.passed) return false;
  return !suites.empty();
}

VerifyReport cmd_verify(const ExperimentConfig& cfg, const fs::path& out) {
  VerifyReport report;
  const auto& v = cfg.verify;
  const CorruptionProcess proc = resolve_process(cfg);

  if (cfg.dataset.kind == "gmm")
    report.suites.push_back(
        verify_constancy(mixture_of(cfg), proc, v.times, v.mc_samples, stream_seed(cfg, "verify.constancy")));
  else
    report.suites.push_back(verify_constancy(benchmarks::mixture_2d(), benchmarks::collapsing_blur_process(), v.times,
                                            v.mc_samples, stream_seed(cfg, "verify.constancy")));

  std::vector<ModelSpec> specs(3, cfg.model);
  specs[1].hidden_width = 8;
  specs[1].hidden_layers = 1;
  specs[1].time_frequencies = 4;
  specs[2].hidden_width = 16;
  specs[2].hidden_layers = 2;
  specs[2].time_frequencies = 8;
  report.suites.push_back(
      verify_gradients(specs, proc, cfg.train.loss, v.gradient_params, stream_seed(cfg, "verify.gradient")));

  report.suites.push_back(verify_ve_reduction(cfg.dataset_spec().dim(), v.ve_states, stream_seed(cfg, "verify.ve")));

  report.suites.push_back(verify_oracle_sampler(benchmarks::gaussian_2d(), benchmarks::collapsing_blur_process(),
                                                v.sampler_samples, cfg.sampler.num_steps,
                                                stream_seed(cfg, "verify.sampler")));

  json j;
  j["config_hash"] = hash_hex(config_hash(cfg));
  j["passed"] = report.passed();
  j["suites"] = json::array();
  for (const auto& s : report.suites) {
    json m = json::object();
    for (const auto& [k, val] : s.metrics) m[k] = val;
    j["suites"].push_back({{"name", s.name}, {"passed", s.passed}, {"metrics", m}, {"detail", s.detail}});
  }
  write_text(out / "verify.json", j.dump(2) + "\n");
  return report;
}

std::vector<SweepRow> cmd_sweep_nfe(const ExperimentConfig& cfg, const fs::path& out,
                                    const std::optional<fs::path>& checkpoint, std::vector<int> steps) {
  if (steps.empty()) steps = cfg.eval.sweep_steps;
  for (int s : steps)
    if (s < 1) throw ConfigError("--steps: step counts must be positive");
  const CorruptionProcess proc = resolve_process(cfg);
  std::shared_ptr<ScoreModel> holder;
  std::optional<std::uint64_t> ckpt_hash;
  const Denoiser denoiser = make_denoiser(cfg, proc, checkpoint, holder, ckpt_hash);
  const Matrix holdout = holdout_data(cfg);
  RandomSource prng = RandomSource(cfg.seed).fork("sweep.projections");
  const Matrix projections = draw_projections(holdout.rows(), cfg.eval.num_projections, prng);

  std::vector<SweepRow> rows;
  std::string csv = hash_line(cfg) + "nfe,sliced_w2,moment_w2\n";
  for (int n : steps) {
    SamplerConfig sc = cfg.sampler_config();
    sc.num_steps = n;
    const Matrix x = run_sampler(cfg, denoiser, proc, sc);
    const SweepRow row{n, sliced_w2(x, holdout, projections), moment_distance(cfg, x, holdout)};
    rows.push_back(row);
    char buf[128];
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g\n", row.nfe, row.sliced_w2, row.moment_w2);
    csv += buf;
  }
  write_text(out / "nfe_sweep.csv", csv);
  return rows;
}

}  // namespace softdiff
