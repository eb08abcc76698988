#include "softdiff/commands.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <sstream>

using namespace softdiff;

namespace {

std::vector<int> parse_steps(const std::string& list) {
  std::vector<int> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      const int v = std::stoi(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw ConfigError("--steps: '" + item + "' is not an integer");
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Soft score matching toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::string checkpoint;
  std::string samples;
  std::string steps;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Root seed (overrides the config)");
    sub->add_option("--out", out_dir, "Output directory (overrides the config)");
  };

  auto* schedule = app.add_subcommand("schedule", "Build the corruption schedule");
  auto* train = app.add_subcommand("train", "Train the score model");
  auto* sample = app.add_subcommand("sample", "Draw samples");
  auto* eval = app.add_subcommand("eval", "Evaluate a sample file");
  auto* verify = app.add_subcommand("verify", "Run the verification suites");
  auto* sweep = app.add_subcommand("sweep-nfe", "Sample quality against step count");
  for (auto* sub : {schedule, train, sample, eval, verify, sweep}) add_common(sub);
  for (auto* sub : {sample, eval, sweep}) sub->add_option("--checkpoint", checkpoint, "Model checkpoint");
  eval->add_option("--samples", samples, "Sample file (default: <out>/samples.sdt)");
  sweep->add_option("--steps", steps, "Comma-separated step counts");

  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentConfig cfg = load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    const fs::path out = cfg.output_dir;
    const std::optional<fs::path> ckpt = checkpoint.empty() ? std::nullopt : std::optional<fs::path>(checkpoint);
    std::cout << "config_hash " << hash_hex(config_hash(cfg)) << "\n";

    if (schedule->parsed()) {
      const Schedule s = cmd_schedule(cfg, out);
      std::cout << "schedule: " << s.entries.size() << " entries -> " << (out / "schedule.json").string() << "\n";
    } else if (train->parsed()) {
      const TrainResult r = cmd_train(cfg, out);
      std::cout << "train: " << r.trace.size() << " steps";
      if (!r.trace.empty()) std::cout << ", final loss " << r.trace.back().loss;
      std::cout << " -> " << (out / "model.sdm").string() << "\n";
    } else if (sample->parsed()) {
      const Matrix x = cmd_sample(cfg, out, ckpt);
      std::cout << "sample: " << x.cols() << " samples -> " << (out / "samples.sdt").string() << "\n";
    } else if (eval->parsed()) {
      const fs::path path = samples.empty() ? out / "samples.sdt" : fs::path(samples);
      const EvalReport r = cmd_eval(cfg, out, path, ckpt);
      std::cout << "eval: sliced_w2 " << r.sliced_w2 << " moment_w2 " << r.moment_w2 << " nfe " << r.nfe << "\n";
      for (const auto& e : r.score_errors)
        std::cout << "  t=" << e.t << " score mse " << e.mse << " relative " << e.relative_error << "\n";
      std::cout << "wall_clock_seconds " << r.wall_clock_seconds << "\n";
    } else if (verify->parsed()) {
      const VerifyReport r = cmd_verify(cfg, out);
      for (const auto& s : r.suites)
        std::cout << (s.passed ? "PASS " : "FAIL ") << s.name << ": " << s.detail << "\n";
      return r.passed() ? 0 : 1;
    } else if (sweep->parsed()) {
      for (const auto& row : cmd_sweep_nfe(cfg, out, ckpt, parse_steps(steps)))
        std::cout << "nfe " << row.nfe << " sliced_w2 " << row.sliced_w2 << " moment_w2 " << row.moment_w2 << "\n";
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
