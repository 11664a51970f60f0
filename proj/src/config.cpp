#include "gazeact/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <json.hpp>

#include "gazeact/errors.hpp"

namespace gazeact {

using nlohmann::json;

void PipelineConfig::validate() const {
  auto require = [](bool ok, const char* msg) {
    if (!ok) throw ParameterError(msg);
  };
  require(tau_small.has_value() == tau_large.has_value(), "tau_small and tau_large must be given together");
  if (tau_small) require(0.0 < *tau_small && *tau_small < *tau_large, "need 0 < tau_small < tau_large");
  require(motion_tau_small.has_value() == motion_tau_large.has_value(),
          "motion_tau_small and motion_tau_large must be given together");
  if (motion_tau_small) {
    require(0.0 < *motion_tau_small && *motion_tau_small < *motion_tau_large,
            "need 0 < motion_tau_small < motion_tau_large");
  }
  require(0.0 <= tau_percentile_small && tau_percentile_small < tau_percentile_large && tau_percentile_large <= 100.0,
          "need 0 <= tau_percentile_small < tau_percentile_large <= 100");
  require(wavelet_scale >= 2 && wavelet_scale % 2 == 0, "wavelet_scale must be even and >= 2");
  require(median_filter_width % 2 == 1, "median_filter_width must be odd");
  require(sample_rate > 0.0, "sample_rate must be positive");
  require(stride_seconds > 0.0 && window_seconds > stride_seconds, "need window_seconds > stride_seconds > 0");
  require(k_visual_words >= 1, "k_visual_words must be >= 1");
  require(kmeans_max_iter >= 1, "kmeans_max_iter must be >= 1");
  require(embedding_dim >= 1, "embedding_dim must be >= 1");
  require(patch_size >= 1, "patch_size must be >= 1");
  require(corner_quality > 0.0 && corner_quality <= 1.0, "corner_quality must be in (0, 1]");
  require(corner_min_distance >= 0.0, "corner_min_distance must be >= 0");
  require(lk_window >= 3 && lk_window % 2 == 1, "lk_window must be odd and >= 3");
  require(lk_levels >= 1, "lk_levels must be >= 1");
  require(lk_max_iterations >= 1, "lk_max_iterations must be >= 1");
  require(lk_epsilon > 0.0, "lk_epsilon must be positive");
  require(fb_threshold > 0.0, "fb_threshold must be positive");
  require(n_trees >= 1, "n_trees must be >= 1");
  require(min_leaf >= 1, "min_leaf must be >= 1");
  require(class_mode == 5 || class_mode == 6, "class_mode must be 5 or 6");
}

namespace {

using Setter = std::function<void(PipelineConfig&, const json&)>;

double as_double(const json& v, const std::string& key) {
  if (!v.is_number()) throw ParseError("config key '" + key + "' must be a number");
  return v.get<double>();
}

std::size_t as_count(const json& v, const std::string& key) {
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ParseError("config key '" + key + "' must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

std::optional<double> as_optional(const json& v, const std::string& key) {
  if (v.is_null()) return std::nullopt;
  return as_double(v, key);
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto real = [&t](const char* key, double PipelineConfig::*field) {
      t[key] = [field, key](PipelineConfig& c, const json& v) { c.*field = as_double(v, key); };
    };
    auto count = [&t](const char* key, std::size_t PipelineConfig::*field) {
      t[key] = [field, key](PipelineConfig& c, const json& v) { c.*field = as_count(v, key); };
    };
    auto optional = [&t](const char* key, std::optional<double> PipelineConfig::*field) {
      t[key] = [field, key](PipelineConfig& c, const json& v) { c.*field = as_optional(v, key); };
    };
    optional("tau_small", &PipelineConfig::tau_small);
    optional("tau_large", &PipelineConfig::tau_large);
    optional("motion_tau_small", &PipelineConfig::motion_tau_small);
    optional("motion_tau_large", &PipelineConfig::motion_tau_large);
    real("tau_percentile_small", &PipelineConfig::tau_percentile_small);
    real("tau_percentile_large", &PipelineConfig::tau_percentile_large);
    count("wavelet_scale", &PipelineConfig::wavelet_scale);
    count("median_filter_width", &PipelineConfig::median_filter_width);
    real("sample_rate", &PipelineConfig::sample_rate);
    real("window_seconds", &PipelineConfig::window_seconds);
    real("stride_seconds", &PipelineConfig::stride_seconds);
    count("k_visual_words", &PipelineConfig::k_visual_words);
    count("kmeans_max_iter", &PipelineConfig::kmeans_max_iter);
    count("embedding_dim", &PipelineConfig::embedding_dim);
    count("patch_size", &PipelineConfig::patch_size);
    count("max_corners", &PipelineConfig::max_corners);
    real("corner_quality", &PipelineConfig::corner_quality);
    real("corner_min_distance", &PipelineConfig::corner_min_distance);
    count("lk_window", &PipelineConfig::lk_window);
    count("lk_levels", &PipelineConfig::lk_levels);
    count("lk_max_iterations", &PipelineConfig::lk_max_iterations);
    real("lk_epsilon", &PipelineConfig::lk_epsilon);
    real("fb_threshold", &PipelineConfig::fb_threshold);
    count("n_trees", &PipelineConfig::n_trees);
    count("mtry", &PipelineConfig::mtry);
    count("min_leaf", &PipelineConfig::min_leaf);
    count("max_depth", &PipelineConfig::max_depth);
    t["motion_use_wavelet"] = [](PipelineConfig& c, const json& v) {
      if (!v.is_boolean()) throw ParseError("config key 'motion_use_wavelet' must be a boolean");
      c.motion_use_wavelet = v.get<bool>();
    };
    t["rng_seed"] = [](PipelineConfig& c, const json& v) {
      if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
        throw ParseError("config key 'rng_seed' must be a non-negative integer");
      }
      c.rng_seed = v.get<std::uint64_t>();
    };
    t["class_mode"] = [](PipelineConfig& c, const json& v) {
      if (!v.is_number_integer()) throw ParseError("config key 'class_mode' must be 5 or 6");
      c.class_mode = v.get<int>();
    };
    return t;
  }();
  return table;
}

}  // namespace

PipelineConfig parse_config_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("config must be a JSON object");
  PipelineConfig config;
  for (const auto& [key, value] : doc.items()) {
    const auto it = setters().find(key);
    if (it == setters().end()) throw ParseError("unknown config key '" + key + "'");
    it->second(config, value);
  }
  try {
    config.validate();
  } catch (const ParameterError& e) {
    throw ParseError(std::string("invalid config: ") + e.what());
  }
  return config;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_json(ss.str());
}

std::string config_to_json(const PipelineConfig& c) {
  auto opt = [](const std::optional<double>& v) -> json { return v ? json(*v) : json(nullptr); };
  json j = {
      {"tau_small", opt(c.tau_small)},
      {"tau_large", opt(c.tau_large)},
      {"motion_tau_small", opt(c.motion_tau_small)},
      {"motion_tau_large", opt(c.motion_tau_large)},
      {"tau_percentile_small", c.tau_percentile_small},
      {"tau_percentile_large", c.tau_percentile_large},
      {"wavelet_scale", c.wavelet_scale},
      {"median_filter_width", c.median_filter_width},
      {"motion_use_wavelet", c.motion_use_wavelet},
      {"sample_rate", c.sample_rate},
      {"window_seconds", c.window_seconds},
      {"stride_seconds", c.stride_seconds},
      {"k_visual_words", c.k_visual_words},
      {"kmeans_max_iter", c.kmeans_max_iter},
      {"embedding_dim", c.embedding_dim},
      {"patch_size", c.patch_size},
      {"max_corners", c.max_corners},
      {"corner_quality", c.corner_quality},
      {"corner_min_distance", c.corner_min_distance},
      {"lk_window", c.lk_window},
      {"lk_levels", c.lk_levels},
      {"lk_max_iterations", c.lk_max_iterations},
      {"lk_epsilon", c.lk_epsilon},
      {"fb_threshold", c.fb_threshold},
      {"n_trees", c.n_trees},
      {"mtry", c.mtry},
      {"min_leaf", c.min_leaf},
      {"max_depth", c.max_depth},
      {"rng_seed", c.rng_seed},
      {"class_mode", c.class_mode},
  };
  return j.dump(2);
}

}  // namespace gazeact
