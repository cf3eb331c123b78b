#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mfilgn/evaluation.hpp"
#include "mfilgn/nss.hpp"
#include "mfilgn/regression.hpp"
#include "mfilgn/viewport.hpp"
#include "mfilgn/wavelet.hpp"

namespace mfilgn {

/// Everything that influences a feature vector.
struct PipelineConfig {
  HaarTransformSpec wavelet;
  ViewportSamplingConfig viewports;
  NssConfig nss;

  /// 4 entropies per wavelet level + 36 local + 36 global naturalness.
  std::size_t feature_width() const {
    return 4 * static_cast<std::size_t>(wavelet.levels) + 2 * NaturalnessFeatures::kSize;
  }
  void validate() const;
};

/// All tunables of a run with their defaults resolved.
struct RunConfig {
  PipelineConfig pipeline;
  SvrParams svr;
  bool grid_search = false;
  int trials = 1000;
  double train_fraction = 0.8;
  std::uint64_t seed = 1;
  SplitMode split_mode = SplitMode::kImage;
  unsigned jobs = 1;

  void validate() const;
  TrialOptions trial_options() const;
};

/// One tunable: its key in canonical text (also the CLI long flag), whether
/// it changes extracted features, and string accessors.
struct ConfigField {
  std::string key;
  std::string help;
  bool is_flag = false;
  bool affects_features = false;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

const std::vector<ConfigField>& config_fields();

/// `key = value` lines in registry order, numbers at 17 significant digits.
std::string canonical_text(const RunConfig& cfg);

/// Canonical text restricted to the feature-affecting keys.
std::string pipeline_canonical_text(const PipelineConfig& cfg);

/// SHA-256 of pipeline_canonical_text; keys the feature cache.
std::string pipeline_fingerprint(const PipelineConfig& cfg);

/// Parses canonical text (comments with '#', blank lines allowed) on top of
/// `base`. Unknown keys and malformed values raise ParseError.
RunConfig parse_config_text(const std::string& text, RunConfig base = {});

}  // namespace mfilgn
