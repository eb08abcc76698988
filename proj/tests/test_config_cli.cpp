#include "doctest.h"

#include "softdiff/commands.hpp"

#include <fstream>
#include <sstream>

using namespace softdiff;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("softdiff_test_" + name);
  fs::remove_all(p);
  return p;
}

// Small end-to-end configuration.
ExperimentConfig small_config() {
  return config_from_json(R"({
    "dataset": {"kind": "gmm", "preset": "mixture_2d", "num_train": 400, "num_holdout": 400},
    "corruption": {"family": "blur", "half_size": 8, "std_min": 0.01, "std_max": 6.0},
    "schedule": {"source": "auto", "candidates": 16, "target_nodes": 5, "points_per_candidate": 200,
                 "num_projections": 8},
    "model": {"hidden_width": 16, "hidden_layers": 2, "time_frequencies": 4, "freq_max": 10.0},
    "train": {"steps": 20, "batch_size": 32, "warmup_steps": 5},
    "sampler": {"num_steps": 8, "num_samples": 200},
    "eval": {"num_projections": 8, "score_points": 50, "sweep_steps": [2, 4]},
    "verify": {"mc_samples": 10000, "gradient_params": 5, "ve_states": 50, "sampler_samples": 2000},
    "seed": 3
  })");
}

}  // namespace

TEST_CASE("empty config takes defaults") {
  const ExperimentConfig c = config_from_json("{}");
  CHECK(c.dataset.kind == "gmm");
  CHECK(c.sampler.num_steps == 64);
  CHECK(c.model.data_dim == 2);
  CHECK(c.schedule.source == "linear");
  CHECK(config_from_json(config_to_json(c)).seed == c.seed);
  CHECK(config_to_json(config_from_json(config_to_json(c))) == config_to_json(c));
}

TEST_CASE("config errors name the field") {
  auto message = [](const std::string& text) {
    try {
      config_from_json(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message(R"({"sampler": {"steps": 3}})").find("sampler.steps") != std::string::npos);
  CHECK(message(R"({"sampler": {"num_steps": 0}})").find("sampler.num_steps") != std::string::npos);
  CHECK(message(R"({"sampler": {"num_steps": "many"}})").find("sampler.num_steps") != std::string::npos);
  CHECK(message(R"({"corruption": {"family": "swirl"}})").find("corruption.family") != std::string::npos);
  CHECK(message(R"({"dataset": {"kind": "blobs"}, "sampler": {"denoiser": "oracle"}})").find("sampler.denoiser") !=
        std::string::npos);
  CHECK(message("[1, 2]") != "");
  CHECK(message("{not json") != "");
}

TEST_CASE("hash ignores the output directory only") {
  ExperimentConfig a = config_from_json("{}"), b = a;
  b.output_dir = "elsewhere";
  CHECK(config_hash(a) == config_hash(b));
  b.seed = 1;
  CHECK(config_hash(a) != config_hash(b));
  CHECK(hash_hex(0xabc).size() == 16);
}

TEST_CASE("schedule command on an eight-candidate grid") {
  ExperimentConfig c = small_config();
  c.schedule.candidates = 8;
  c.schedule.target_nodes = 4;
  const fs::path out = scratch("schedule");
  const Schedule s = cmd_schedule(c, out);
  const Schedule back = load_schedule(out / "schedule.json");
  CHECK(back == s);
  CHECK(back.config_hash == hash_hex(config_hash(c)));
  for (std::size_t k = 1; k < s.entries.size(); ++k) CHECK(s.entries[k].blur_std >= s.entries[k - 1].blur_std);
  CHECK(read_file(out / "distances.csv").rfind("# config_hash=" + hash_hex(config_hash(c)) + "\n", 0) == 0);
  fs::remove_all(out);
}

TEST_CASE("verify command on the default config passes every suite") {
  ExperimentConfig c = config_from_json("{}");
  const fs::path out = scratch("verify");
  const VerifyReport r = cmd_verify(c, out);
  CHECK(r.suites.size() == 4);
  for (const auto& s : r.suites) CHECK_MESSAGE(s.passed, s.name << ": " << s.detail);
  CHECK(fs::exists(out / "verify.json"));
  fs::remove_all(out);
}

TEST_CASE("sample and eval enforce checkpoints and hashes") {
  ExperimentConfig c = small_config();
  const fs::path out = scratch("guards");
  CHECK_THROWS_AS(cmd_sample(c, out, std::nullopt), Error);
  CHECK_THROWS_AS(cmd_sample(c, out, out / "missing.sdm"), Error);
  cmd_train(c, out);
  cmd_sample(c, out, out / "model.sdm");
  ExperimentConfig other = c;
  other.seed = 99;
  CHECK_THROWS_AS(cmd_eval(other, out, out / "samples.sdt", out / "model.sdm"), Error);
  const EvalReport r = cmd_eval(c, out, out / "samples.sdt", out / "model.sdm");
  CHECK(r.nfe == 8);
  CHECK(r.score_errors.size() == 3);
  fs::remove_all(out);
}

TEST_CASE("oracle sweep quality improves with more steps") {
  ExperimentConfig c = config_from_json(R"({
    "dataset": {"kind": "gmm", "preset": "gaussian_2d", "num_train": 4096, "num_holdout": 10000},
    "sampler": {"denoiser": "oracle", "num_samples": 10000},
    "seed": 1
  })");
  const fs::path out = scratch("sweep");
  const auto rows = cmd_sweep_nfe(c, out, std::nullopt, {});
  REQUIRE(rows.size() == 5);
  for (std::size_t k = 1; k < 4; ++k) CHECK(rows[k].moment_w2 <= rows[k - 1].moment_w2 + 2e-3);
  const std::string csv = read_file(out / "nfe_sweep.csv");
  CHECK(csv.find("nfe,sliced_w2,moment_w2\n") != std::string::npos);
  fs::remove_all(out);
}

TEST_CASE("every command is byte-identical across repeated runs") {
  const ExperimentConfig c = small_config();
  const std::vector<std::string> files = {"schedule.json", "distances.csv", "model.sdm",   "loss_trace.csv",
                                          "samples.sdt",   "samples.json",  "eval.json",   "verify.json",
                                          "nfe_sweep.csv"};
  std::vector<std::string> first;
  for (int run = 0; run < 2; ++run) {
    const fs::path out = scratch("repro" + std::to_string(run));
    cmd_schedule(c, out);
    cmd_train(c, out);
    cmd_sample(c, out, out / "model.sdm");
    cmd_eval(c, out, out / "samples.sdt", out / "model.sdm");
    cmd_verify(c, out);
    cmd_sweep_nfe(c, out, out / "model.sdm", {});
    for (std::size_t k = 0; k < files.size(); ++k) {
      const std::string bytes = read_file(out / files[k]);
      CHECK_MESSAGE(!bytes.empty(), files[k]);
      if (run == 0) first.push_back(bytes);
      else CHECK_MESSAGE(bytes == first[k], files[k]);
    }
    fs::remove_all(out);
  }
}
