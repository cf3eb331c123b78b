#include "mfilgn/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>
#include <string_view>

#include <fmt/format.h>

#include "mfilgn/csv.hpp"
#include "mfilgn/errors.hpp"
#include "mfilgn/hashing.hpp"

namespace mfilgn {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_integer(const std::string& key, std::string_view text) {
  T v{};
  text = trim(text);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError(key, fmt::format("'{}' is not a valid integer", text));
  }
  return v;
}

double parse_real(const std::string& key, std::string_view text) {
  double v = 0.0;
  text = trim(text);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw ParseError(key, fmt::format("'{}' is not a finite number", text));
  }
  return v;
}

bool parse_bool(const std::string& key, std::string_view text) {
  text = trim(text);
  if (text == "true" || text == "on" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "off" || text == "0" || text == "no") return false;
  throw ParseError(key, fmt::format("'{}' is not a boolean", text));
}

std::string bool_text(bool v) { return v ? "true" : "false"; }

ConfigField int_field(std::string key, std::string help, bool features,
                      std::function<int&(RunConfig&)> ref) {
  ConfigField f;
  f.key = std::move(key);
  f.help = std::move(help);
  f.affects_features = features;
  f.get = [ref](const RunConfig& c) { return std::to_string(ref(const_cast<RunConfig&>(c))); };
  f.set = [ref, k = f.key](RunConfig& c, const std::string& v) { ref(c) = parse_integer<int>(k, v); };
  return f;
}

ConfigField real_field(std::string key, std::string help, bool features,
                       std::function<double&(RunConfig&)> ref) {
  ConfigField f;
  f.key = std::move(key);
  f.help = std::move(help);
  f.affects_features = features;
  f.get = [ref](const RunConfig& c) { return format_number(ref(const_cast<RunConfig&>(c))); };
  f.set = [ref, k = f.key](RunConfig& c, const std::string& v) { ref(c) = parse_real(k, v); };
  return f;
}

ConfigField flag_field(std::string key, std::string help, bool features,
                       std::function<bool&(RunConfig&)> ref) {
  ConfigField f;
  f.key = std::move(key);
  f.help = std::move(help);
  f.is_flag = true;
  f.affects_features = features;
  f.get = [ref](const RunConfig& c) { return bool_text(ref(const_cast<RunConfig&>(c))); };
  f.set = [ref, k = f.key](RunConfig& c, const std::string& v) { ref(c) = parse_bool(k, v); };
  return f;
}

std::vector<ConfigField> build_fields() {
  std::vector<ConfigField> fields;
  fields.push_back(int_field("levels", "Haar decomposition depth (1-3)", true,
                             [](RunConfig& c) -> int& { return c.pipeline.wavelet.levels; }));
  fields.push_back(int_field("m0", "viewports on the equator ring", true,
                             [](RunConfig& c) -> int& { return c.pipeline.viewports.equator_count_m0; }));
  fields.push_back(real_field("fov", "viewport field of view, degrees", true,
                              [](RunConfig& c) -> double& { return c.pipeline.viewports.fov_degrees; }));
  fields.push_back(int_field("viewport-size", "viewport edge length, pixels", true,
                             [](RunConfig& c) -> int& { return c.pipeline.viewports.viewport_size; }));
  fields.push_back(int_field("mscn-radius", "MSCN Gaussian window radius", true,
                             [](RunConfig& c) -> int& { return c.pipeline.nss.mscn.window_radius; }));
  fields.push_back(real_field("mscn-sigma", "MSCN Gaussian window sigma", true,
                              [](RunConfig& c) -> double& { return c.pipeline.nss.mscn.gaussian_sigma; }));
  fields.push_back(real_field("mscn-c", "MSCN stability constant", true,
                              [](RunConfig& c) -> double& { return c.pipeline.nss.mscn.stability_c; }));
  fields.push_back(flag_field("zca", "apply ZCA whitening before MSCN", true,
                              [](RunConfig& c) -> bool& { return c.pipeline.nss.zca.enabled; }));
  fields.push_back(int_field("zca-patch", "ZCA patch size (odd)", true,
                             [](RunConfig& c) -> int& { return c.pipeline.nss.zca.patch_size; }));
  fields.push_back(real_field("zca-epsilon", "ZCA eigenvalue regularisation", true,
                              [](RunConfig& c) -> double& { return c.pipeline.nss.zca.regularization_epsilon; }));
  fields.push_back(real_field("svr-c", "SVR cost C", false,
                              [](RunConfig& c) -> double& { return c.svr.c; }));
  fields.push_back(real_field("svr-gamma", "RBF gamma (0 = 1/feature_dim)", false,
                              [](RunConfig& c) -> double& { return c.svr.gamma; }));
  fields.push_back(real_field("svr-epsilon", "SVR epsilon tube", false,
                              [](RunConfig& c) -> double& { return c.svr.epsilon; }));
  fields.push_back(real_field("svr-tolerance", "SMO KKT stopping tolerance", false,
                              [](RunConfig& c) -> double& { return c.svr.tolerance; }));
  {
    ConfigField f;
    f.key = "svr-max-iter";
    f.help = "SMO iteration cap";
    f.get = [](const RunConfig& c) { return std::to_string(c.svr.max_iterations); };
    f.set = [](RunConfig& c, const std::string& v) {
      c.svr.max_iterations = parse_integer<std::int64_t>("svr-max-iter", v);
    };
    fields.push_back(std::move(f));
  }
  fields.push_back(flag_field("grid-search", "tune (C, gamma) by 5-fold CV on training data", false,
                              [](RunConfig& c) -> bool& { return c.grid_search; }));
  fields.push_back(int_field("trials", "number of random train/test trials", false,
                             [](RunConfig& c) -> int& { return c.trials; }));
  fields.push_back(real_field("split", "training fraction per trial", false,
                              [](RunConfig& c) -> double& { return c.train_fraction; }));
  {
    ConfigField f;
    f.key = "seed";
    f.help = "base random seed";
    f.get = [](const RunConfig& c) { return std::to_string(c.seed); };
    f.set = [](RunConfig& c, const std::string& v) { c.seed = parse_integer<std::uint64_t>("seed", v); };
    fields.push_back(std::move(f));
  }
  {
    ConfigField f;
    f.key = "split-mode";
    f.help = "trial split granularity: image | content";
    f.get = [](const RunConfig& c) {
      return std::string(c.split_mode == SplitMode::kImage ? "image" : "content");
    };
    f.set = [](RunConfig& c, const std::string& v) {
      const auto t = trim(v);
      if (t == "image") {
        c.split_mode = SplitMode::kImage;
      } else if (t == "content") {
        c.split_mode = SplitMode::kContent;
      } else {
        throw ParseError("split-mode", fmt::format("'{}' is not 'image' or 'content'", t));
      }
    };
    fields.push_back(std::move(f));
  }
  {
    ConfigField f;
    f.key = "jobs";
    f.help = "worker threads (0 = all cores)";
    f.get = [](const RunConfig& c) { return std::to_string(c.jobs); };
    f.set = [](RunConfig& c, const std::string& v) { c.jobs = parse_integer<unsigned>("jobs", v); };
    fields.push_back(std::move(f));
  }
  return fields;
}

}  // namespace

void PipelineConfig::validate() const {
  wavelet.validate();
  viewports.validate();
  nss.zca.validate();
  nss.mscn.validate();
}

void RunConfig::validate() const {
  pipeline.validate();
  if (!(svr.c > 0.0)) throw ValidationError("svr-c must be positive");
  if (svr.gamma < 0.0) throw ValidationError("svr-gamma must be >= 0");
  if (svr.epsilon < 0.0) throw ValidationError("svr-epsilon must be >= 0");
  if (!(svr.tolerance > 0.0)) throw ValidationError("svr-tolerance must be positive");
  if (svr.max_iterations < 1) throw ValidationError("svr-max-iter must be >= 1");
  if (trials < 1) throw ValidationError("trials must be >= 1");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ValidationError("split must lie in (0, 1)");
  }
}

TrialOptions RunConfig::trial_options() const {
  TrialOptions t;
  t.trials = trials;
  t.train_fraction = train_fraction;
  t.seed = seed;
  t.split_mode = split_mode;
  t.svr = svr;
  t.grid_search = grid_search;
  t.jobs = jobs;
  return t;
}

const std::vector<ConfigField>& config_fields() {
  static const std::vector<ConfigField> fields = build_fields();
  return fields;
}

std::string canonical_text(const RunConfig& cfg) {
  std::string out;
  for (const auto& f : config_fields()) out += f.key + " = " + f.get(cfg) + "\n";
  return out;
}

std::string pipeline_canonical_text(const PipelineConfig& cfg) {
  RunConfig run;
  run.pipeline = cfg;
  std::string out;
  for (const auto& f : config_fields()) {
    if (f.affects_features) out += f.key + " = " + f.get(run) + "\n";
  }
  return out;
}

std::string pipeline_fingerprint(const PipelineConfig& cfg) {
  return sha256_hex(pipeline_canonical_text(cfg));
}

RunConfig parse_config_text(const std::string& text, RunConfig base) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError("", fmt::format("config line {}: expected 'key = value'", line_no));
    }
    const std::string key(trim(view.substr(0, eq)));
    const std::string value(trim(view.substr(eq + 1)));
    const auto& fields = config_fields();
    const auto it = std::find_if(fields.begin(), fields.end(),
                                 [&](const ConfigField& f) { return f.key == key; });
    if (it == fields.end()) {
      throw ParseError(key, fmt::format("config line {}: unknown key", line_no));
    }
    it->set(base, value);
  }
  return base;
}

}  // namespace mfilgn
