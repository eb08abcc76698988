#include "softdiff/config.hpp"

#include "softdiff/benchmarks.hpp"
#include "softdiff/oracle.hpp"

#include "json.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace softdiff {

using nlohmann::json;

namespace {

class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ConfigError(label("") + ": expected an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->get<T>();
    } catch (const json::exception&) {
      throw ConfigError(label(key) + ": wrong type");
    }
  }

  void get(const char* key, Eigen::Index& out) {
    long long v = out;
    get(key, v);
    out = static_cast<Eigen::Index>(v);
  }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string label(const std::string& key) const {
    if (name_.empty()) return key;
    return key.empty() ? name_ : name_ + "." + key;
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError("unknown config field " + label(k));
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& field, const std::string& message) {
  if (!ok) throw ConfigError("config field " + field + ": " + message);
}

void one_of(const std::string& value, std::initializer_list<const char*> allowed, const std::string& field) {
  for (const char* a : allowed)
    if (value == a) return;
  std::string list;
  for (const char* a : allowed) list += (list.empty() ? "" : ", ") + std::string(a);
  throw ConfigError("config field " + field + ": '" + value + "' is not one of " + list);
}

Weighting parse_weighting(const std::string& s) {
  one_of(s, {"sigma4", "uniform"}, "train.weighting");
  return s == "sigma4" ? Weighting::Sigma4 : Weighting::Uniform;
}

std::string weighting_name(Weighting w) { return w == Weighting::Sigma4 ? "sigma4" : "uniform"; }

GaussianMixture preset_mixture(const std::string& name) {
  if (name == "gaussian_2d") return benchmarks::gaussian_2d();
  return benchmarks::mixture_2d();
}

}  // namespace

DatasetSpec ExperimentConfig::dataset_spec() const {
  DatasetSpec spec;
  if (dataset.kind == "gmm")
    spec.gmm = dataset.preset == "custom" ? dataset.gmm : preset_mixture(dataset.preset);
  else
    spec.blobs = dataset.blobs;
  spec.num_train = dataset.num_train;
  spec.num_holdout = dataset.num_holdout;
  return spec;
}

OperatorFamily ExperimentConfig::family() const {
  const DatasetSpec spec = dataset_spec();
  const Eigen::Index dim = spec.dim();
  if (corruption.family == "blur") {
    const int h = spec.blobs ? spec.blobs->height : 1;
    const int w = spec.blobs ? spec.blobs->width : static_cast<int>(dim);
    return OperatorFamily::blur(h, w, corruption.half_size, corruption.std_min, corruption.std_max);
  }
  Vector rates = Vector::Ones(dim);
  if (!corruption.fade_rates.empty())
    rates = Eigen::Map<const Vector>(corruption.fade_rates.data(), dim);
  return OperatorFamily::fade(rates, corruption.fade_level_max);
}

NoiseSchedule ExperimentConfig::noise() const {
  return NoiseSchedule{corruption.sigma_min, corruption.sigma_max, corruption.ramp_end};
}

SamplerConfig ExperimentConfig::sampler_config() const {
  SamplerConfig s;
  s.num_steps = sampler.num_steps;
  s.mode = sampler.noise_estimate == "literal" ? NoiseEstimate::Literal : NoiseEstimate::Normalized;
  s.seed = seed;
  return s;
}

void ExperimentConfig::validate() const {
  one_of(dataset.kind, {"gmm", "blobs"}, "dataset.kind");
  require(dataset.num_train >= 1, "dataset.num_train", "must be at least 1");
  require(dataset.num_holdout >= 1, "dataset.num_holdout", "must be at least 1");
  if (dataset.kind == "gmm") {
    one_of(dataset.preset, {"gaussian_2d", "mixture_2d", "custom"}, "dataset.preset");
    if (dataset.preset == "custom") {
      try {
        dataset.gmm.validate();
      } catch (const Error& e) {
        throw ConfigError(std::string("config field dataset.gmm: ") + e.what());
      }
      require(dataset.gmm.size() >= 1 && dataset.gmm.size() <= 8, "dataset.gmm", "needs 1 to 8 components");
      require(dataset.gmm.dim() <= kOracleMaxDim, "dataset.gmm", "dimension above the oracle limit");
    }
  } else {
    const BlobSpec& b = dataset.blobs;
    require(b.height >= 1 && b.width >= 1, "dataset.blobs", "height and width must be positive");
    require(b.max_blobs >= 1, "dataset.blobs.max_blobs", "must be at least 1");
    require(b.width_min > 0 && b.width_max >= b.width_min, "dataset.blobs.width_min",
            "need 0 < width_min <= width_max");
  }

  one_of(corruption.family, {"blur", "fade"}, "corruption.family");
  require(corruption.half_size >= 1, "corruption.half_size", "must be at least 1");
  require(corruption.std_min > 0 && corruption.std_max >= corruption.std_min, "corruption.std_min",
          "need 0 < std_min <= std_max");
  require(corruption.fade_level_max > 0, "corruption.fade_level_max", "must be positive");
  if (!corruption.fade_rates.empty()) {
    require(static_cast<Eigen::Index>(corruption.fade_rates.size()) == dataset_spec().dim(), "corruption.fade_rates",
            "length must equal the data dimension");
    for (double r : corruption.fade_rates) require(r >= 0, "corruption.fade_rates", "rates must be non-negative");
  }
  require(corruption.sigma_min > 0 && corruption.sigma_max >= corruption.sigma_min, "corruption.sigma_min",
          "need 0 < sigma_min <= sigma_max");
  require(corruption.ramp_end > 0 && corruption.ramp_end < 1, "corruption.ramp_end", "must lie in (0, 1)");

  one_of(schedule.source, {"linear", "file", "auto", "mse-matched"}, "schedule.source");
  if (schedule.source == "file") require(!schedule.path.empty(), "schedule.path", "required when source is file");
  require(schedule.candidates >= 2, "schedule.candidates", "must be at least 2");
  require(schedule.target_nodes >= 2 && schedule.target_nodes <= schedule.candidates, "schedule.target_nodes",
          "must lie in [2, candidates]");
  require(schedule.points_per_candidate >= 2, "schedule.points_per_candidate", "must be at least 2");
  require(schedule.num_projections >= 1, "schedule.num_projections", "must be at least 1");
  require(schedule.mse_points >= 2, "schedule.mse_points", "must be at least 2");

  require(model.hidden_width >= 1, "model.hidden_width", "must be at least 1");
  require(model.hidden_layers >= 1, "model.hidden_layers", "must be at least 1");
  require(model.time_frequencies >= 1, "model.time_frequencies", "must be at least 1");
  require(model.freq_min > 0 && model.freq_max >= model.freq_min, "model.freq_min",
          "need 0 < freq_min <= freq_max");

  require(train.steps >= 0, "train.steps", "must be non-negative");
  require(train.batch_size >= 1, "train.batch_size", "must be at least 1");
  require(train.adam.learning_rate > 0, "train.learning_rate", "must be positive");
  require(train.adam.beta1 >= 0 && train.adam.beta1 < 1, "train.beta1", "must lie in [0, 1)");
  require(train.adam.beta2 >= 0 && train.adam.beta2 < 1, "train.beta2", "must lie in [0, 1)");
  require(train.adam.epsilon > 0, "train.epsilon", "must be positive");
  require(train.adam.clip_norm > 0, "train.clip_norm", "must be positive");
  require(train.adam.warmup_steps >= 0, "train.warmup_steps", "must be non-negative");
  require(train.adam.decay_until >= 0, "train.decay_until", "must be non-negative");
  require(train.loss.t_min > 0 && train.loss.t_min <= 1, "train.t_min", "must lie in (0, 1]");

  one_of(sampler.kind, {"momentum", "naive"}, "sampler.kind");
  one_of(sampler.denoiser, {"model", "oracle"}, "sampler.denoiser");
  if (sampler.denoiser == "oracle") require(dataset.kind == "gmm", "sampler.denoiser", "oracle needs a gmm dataset");
  one_of(sampler.noise_estimate, {"normalized", "literal"}, "sampler.noise_estimate");
  require(sampler.num_steps >= 1, "sampler.num_steps", "must be at least 1");
  require(sampler.num_samples >= 1, "sampler.num_samples", "must be at least 1");

  require(eval.num_projections >= 1, "eval.num_projections", "must be at least 1");
  for (double t : eval.score_times) require(t > 0 && t <= 1, "eval.score_times", "times must lie in (0, 1]");
  require(eval.score_points >= 1, "eval.score_points", "must be at least 1");
  require(!eval.sweep_steps.empty(), "eval.sweep_steps", "must not be empty");
  for (int s : eval.sweep_steps) require(s >= 1, "eval.sweep_steps", "step counts must be positive");

  require(verify.mc_samples >= 10000, "verify.mc_samples", "must be at least 10000");
  require(!verify.times.empty(), "verify.times", "must not be empty");
  for (double t : verify.times) require(t > 0 && t <= 1, "verify.times", "times must lie in (0, 1]");
  require(verify.gradient_params >= 1, "verify.gradient_params", "must be at least 1");
  require(verify.ve_states >= 1, "verify.ve_states", "must be at least 1");
  require(verify.sampler_samples >= 2, "verify.sampler_samples", "must be at least 2");

  require(!output_dir.empty(), "output_dir", "must not be empty");
}

ExperimentConfig config_from_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: malformed JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  Section top(root, "");

  if (const json* j = top.child("dataset")) {
    Section s(*j, "dataset");
    s.get("kind", cfg.dataset.kind);
    s.get("preset", cfg.dataset.preset);
    s.get("num_train", cfg.dataset.num_train);
    s.get("num_holdout", cfg.dataset.num_holdout);
    if (const json* g = s.child("gmm")) {
      try {
        cfg.dataset.gmm = gmm_from_json(g->dump());
      } catch (const Error& e) {
        throw ConfigError(std::string("config field dataset.gmm: ") + e.what());
      }
    }
    if (const json* b = s.child("blobs")) {
      Section bs(*b, "dataset.blobs");
      bs.get("height", cfg.dataset.blobs.height);
      bs.get("width", cfg.dataset.blobs.width);
      bs.get("max_blobs", cfg.dataset.blobs.max_blobs);
      bs.get("width_min", cfg.dataset.blobs.width_min);
      bs.get("width_max", cfg.dataset.blobs.width_max);
      bs.finish();
    }
    s.finish();
  }
  if (const json* j = top.child("corruption")) {
    Section s(*j, "corruption");
    auto& c = cfg.corruption;
    s.get("family", c.family);
    s.get("half_size", c.half_size);
    s.get("std_min", c.std_min);
    s.get("std_max", c.std_max);
    s.get("fade_rates", c.fade_rates);
    s.get("fade_level_max", c.fade_level_max);
    s.get("sigma_min", c.sigma_min);
    s.get("sigma_max", c.sigma_max);
    s.get("ramp_end", c.ramp_end);
    s.finish();
  }
  if (const json* j = top.child("schedule")) {
    Section s(*j, "schedule");
    auto& c = cfg.schedule;
    s.get("source", c.source);
    s.get("path", c.path);
    s.get("candidates", c.candidates);
    s.get("target_nodes", c.target_nodes);
    s.get("points_per_candidate", c.points_per_candidate);
    s.get("num_projections", c.num_projections);
    s.get("mse_points", c.mse_points);
    s.finish();
  }
  if (const json* j = top.child("model")) {
    Section s(*j, "model");
    s.get("hidden_width", cfg.model.hidden_width);
    s.get("hidden_layers", cfg.model.hidden_layers);
    s.get("time_frequencies", cfg.model.time_frequencies);
    s.get("freq_min", cfg.model.freq_min);
    s.get("freq_max", cfg.model.freq_max);
    s.finish();
  }
  if (const json* j = top.child("train")) {
    Section s(*j, "train");
    auto& t = cfg.train;
    long steps = t.steps;
    s.get("steps", steps);
    t.steps = steps;
    s.get("batch_size", t.batch_size);
    s.get("learning_rate", t.adam.learning_rate);
    s.get("beta1", t.adam.beta1);
    s.get("beta2", t.adam.beta2);
    s.get("epsilon", t.adam.epsilon);
    s.get("clip_norm", t.adam.clip_norm);
    s.get("warmup_steps", t.adam.warmup_steps);
    s.get("decay_until", t.adam.decay_until);
    std::string w = weighting_name(t.loss.weighting);
    s.get("weighting", w);
    t.loss.weighting = parse_weighting(w);
    s.get("t_min", t.loss.t_min);
    s.finish();
  }
  if (const json* j = top.child("sampler")) {
    Section s(*j, "sampler");
    auto& c = cfg.sampler;
    s.get("kind", c.kind);
    s.get("denoiser", c.denoiser);
    s.get("noise_estimate", c.noise_estimate);
    s.get("num_steps", c.num_steps);
    s.get("num_samples", c.num_samples);
    s.finish();
  }
  if (const json* j = top.child("eval")) {
    Section s(*j, "eval");
    auto& c = cfg.eval;
    s.get("num_projections", c.num_projections);
    s.get("score_times", c.score_times);
    s.get("score_points", c.score_points);
    s.get("sweep_steps", c.sweep_steps);
    s.finish();
  }
  if (const json* j = top.child("verify")) {
    Section s(*j, "verify");
    auto& c = cfg.verify;
    s.get("mc_samples", c.mc_samples);
    s.get("times", c.times);
    s.get("gradient_params", c.gradient_params);
    s.get("ve_states", c.ve_states);
    s.get("sampler_samples", c.sampler_samples);
    s.finish();
  }
  top.get("seed", cfg.seed);
  top.get("output_dir", cfg.output_dir);
  top.finish();

  cfg.validate();
  cfg.model.data_dim = cfg.dataset_spec().dim();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config file not found: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

namespace {

json to_json_tree(const ExperimentConfig& cfg) {
  json j;
  json d;
  d["kind"] = cfg.dataset.kind;
  d["preset"] = cfg.dataset.preset;
  d["num_train"] = cfg.dataset.num_train;
  d["num_holdout"] = cfg.dataset.num_holdout;
  if (cfg.dataset.kind == "gmm" && cfg.dataset.preset == "custom") d["gmm"] = json::parse(gmm_to_json(cfg.dataset.gmm));
  if (cfg.dataset.kind == "blobs") {
    const auto& b = cfg.dataset.blobs;
    d["blobs"] = {{"height", b.height},
                  {"width", b.width},
                  {"max_blobs", b.max_blobs},
                  {"width_min", b.width_min},
                  {"width_max", b.width_max}};
  }
  j["dataset"] = d;

  const auto& c = cfg.corruption;
  j["corruption"] = {{"family", c.family},       {"half_size", c.half_size},
                     {"std_min", c.std_min},     {"std_max", c.std_max},
                     {"fade_rates", c.fade_rates}, {"fade_level_max", c.fade_level_max},
                     {"sigma_min", c.sigma_min}, {"sigma_max", c.sigma_max},
                     {"ramp_end", c.ramp_end}};
  const auto& s = cfg.schedule;
  j["schedule"] = {{"source", s.source},
                   {"path", s.path},
                   {"candidates", s.candidates},
                   {"target_nodes", s.target_nodes},
                   {"points_per_candidate", s.points_per_candidate},
                   {"num_projections", s.num_projections},
                   {"mse_points", s.mse_points}};
  const auto& m = cfg.model;
  j["model"] = {{"hidden_width", m.hidden_width},
                {"hidden_layers", m.hidden_layers},
                {"time_frequencies", m.time_frequencies},
                {"freq_min", m.freq_min},
                {"freq_max", m.freq_max}};
  const auto& t = cfg.train;
  j["train"] = {{"steps", t.steps},
                {"batch_size", t.batch_size},
                {"learning_rate", t.adam.learning_rate},
                {"beta1", t.adam.beta1},
                {"beta2", t.adam.beta2},
                {"epsilon", t.adam.epsilon},
                {"clip_norm", t.adam.clip_norm},
                {"warmup_steps", t.adam.warmup_steps},
                {"decay_until", t.adam.decay_until},
                {"weighting", weighting_name(t.loss.weighting)},
                {"t_min", t.loss.t_min}};
  const auto& sm = cfg.sampler;
  j["sampler"] = {{"kind", sm.kind},
                  {"denoiser", sm.denoiser},
                  {"noise_estimate", sm.noise_estimate},
                  {"num_steps", sm.num_steps},
                  {"num_samples", sm.num_samples}};
  const auto& e = cfg.eval;
  j["eval"] = {{"num_projections", e.num_projections},
               {"score_times", e.score_times},
               {"score_points", e.score_points},
               {"sweep_steps", e.sweep_steps}};
  const auto& v = cfg.verify;
  j["verify"] = {{"mc_samples", v.mc_samples},
                 {"times", v.times},
                 {"gradient_params", v.gradient_params},
                 {"ve_states", v.ve_states},
                 {"sampler_samples", v.sampler_samples}};
  j["seed"] = cfg.seed;
  j["output_dir"] = cfg.output_dir;
  return j;
}

}  // namespace

std::string config_to_json(const ExperimentConfig& cfg) { return to_json_tree(cfg).dump(2) + "\n"; }

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  json j = to_json_tree(cfg);
  j.erase("output_dir");
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace softdiff
