#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "mfilgn/config.hpp"
#include "mfilgn/csv.hpp"
#include "mfilgn/dataset.hpp"
#include "mfilgn/errors.hpp"
#include "mfilgn/evaluation.hpp"
#include "mfilgn/image_io.hpp"
#include "mfilgn/regression.hpp"
#include "mfilgn/viewport.hpp"
#include "mfilgn/wavelet.hpp"

namespace fs = std::filesystem;

namespace mfilgn::cli {
namespace {

/// Shortest round-trip form of a numeric default for help text.
std::string display_default(const std::string& text) {
  double v = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || end != text.data() + text.size()) return text;
  return fmt::format("{}", v);
}

/// Config tunables registered on one subcommand. Values given on the command
/// line are applied on top of the optional --config file.
class TunableOptions {
 public:
  void attach(CLI::App& cmd, bool pipeline_only) {
    cmd.add_option("--config", config_file_, "canonical config file; flags override it")
        ->check(CLI::ExistingFile);
    const RunConfig defaults;
    for (const auto& field : config_fields()) {
      if (pipeline_only && !field.affects_features && field.key != "jobs") continue;
      const std::string def = field.get(defaults);
      CLI::Option* opt = nullptr;
      if (field.is_flag) {
        auto& slot = flags_[field.key];
        opt = cmd.add_flag(fmt::format("--{0},!--no-{0}", field.key), slot, field.help);
      } else {
        opt = cmd.add_option("--" + field.key, values_[field.key], field.help);
      }
      opt->default_str(display_default(def));
      options_[field.key] = opt;
    }
  }

  RunConfig resolve() const {
    RunConfig cfg;
    if (!config_file_.empty()) cfg = parse_config_text(read_text_file(config_file_), cfg);
    for (const auto& field : config_fields()) {
      const auto it = options_.find(field.key);
      if (it == options_.end() || it->second->count() == 0) continue;
      if (field.is_flag) {
        field.set(cfg, flags_.at(field.key) ? "true" : "false");
      } else {
        field.set(cfg, values_.at(field.key));
      }
    }
    cfg.validate();
    return cfg;
  }

 private:
  std::string config_file_;
  std::map<std::string, std::string> values_;
  std::map<std::string, bool> flags_;
  std::map<std::string, CLI::Option*> options_;
};

std::pair<double, double> parse_mos_scale(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) {
    throw ParseError("mos-scale", fmt::format("'{}' is not 'min,max'", text));
  }
  try {
    std::size_t used_lo = 0;
    std::size_t used_hi = 0;
    const std::string lo_text = text.substr(0, comma);
    const std::string hi_text = text.substr(comma + 1);
    const double lo = std::stod(lo_text, &used_lo);
    const double hi = std::stod(hi_text, &used_hi);
    if (used_lo != lo_text.size() || used_hi != hi_text.size()) throw std::invalid_argument("");
    if (!(lo < hi)) throw ValidationError(fmt::format("mos-scale {} is empty", text));
    return {lo, hi};
  } catch (const std::invalid_argument&) {
    throw ParseError("mos-scale", fmt::format("'{}' is not 'min,max'", text));
  } catch (const std::out_of_range&) {
    throw ParseError("mos-scale", fmt::format("'{}' is out of range", text));
  }
}

void write_sidecar(const fs::path& path, const std::string& command, const RunConfig& cfg,
                   const std::vector<std::pair<std::string, std::string>>& extra = {}) {
  std::string text = fmt::format("# mfilgn {} effective configuration\n", command);
  for (const auto& [k, v] : extra) text += fmt::format("# {} = {}\n", k, v);
  text += canonical_text(cfg);
  write_file_atomic(path, text);
}

fs::path with_suffix(const fs::path& p, const std::string& suffix) {
  fs::path out = p;
  out += suffix;
  return out;
}

Raster rescale_for_display(const Raster& band) {
  const auto [lo, hi] = std::minmax_element(band.values().begin(), band.values().end());
  Raster out(band.width(), band.height());
  const double range = *hi - *lo;
  for (std::size_t y = 0; y < band.height(); ++y) {
    for (std::size_t x = 0; x < band.width(); ++x) {
      out.at(x, y) = range > 0.0 ? (band.at(x, y) - *lo) / range * 255.0 : 0.0;
    }
  }
  return out;
}

void dump_subbands(const DatasetManifest& manifest, const PipelineConfig& cfg, const fs::path& dir,
                   std::ostream& err) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError(fmt::format("cannot create {}: {}", dir.string(), ec.message()));
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    const auto& entry = manifest.entries[i];
    Raster img;
    try {
      img = load_erp(entry.path);
    } catch (const Error& e) {
      err << "warning: subband dump skipped " << entry.id << ": " << e.what() << '\n';
      continue;
    }
    const auto levels = dhwt_decompose(img, cfg.wavelet);
    const std::string stem = fmt::format("{:04d}_{}", i, entry.path.stem().string());
    for (const auto& set : levels) {
      const std::pair<const char*, const Raster*> bands[] = {
          {"LL", &set.ll}, {"HL", &set.hl}, {"LH", &set.lh}, {"HH", &set.hh}};
      for (const auto& [name, band] : bands) {
        write_pgm(dir / fmt::format("{}_L{}_{}.pgm", stem, set.level, name), rescale_for_display(*band));
      }
    }
  }
}

/// Feature rows aligned to the manifest, by id. Every manifest entry must be
/// present exactly once.
Matrix align_features(const FeatureTable& table, const DatasetManifest& manifest) {
  if (table.ids.size() != manifest.size()) {
    throw ValidationError(fmt::format("feature CSV has {} rows but manifest has {} entries",
                                      table.ids.size(), manifest.size()));
  }
  std::map<std::string, std::size_t> row_of;
  for (std::size_t r = 0; r < table.ids.size(); ++r) {
    if (!row_of.emplace(table.ids[r], r).second) {
      throw ValidationError(fmt::format("feature CSV repeats id '{}'", table.ids[r]));
    }
  }
  Matrix out(manifest.size(), table.features.cols);
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    const auto it = row_of.find(manifest.entries[i].id);
    if (it == row_of.end()) {
      throw ValidationError(fmt::format("feature CSV has no row for '{}'", manifest.entries[i].id));
    }
    const auto src = table.features.row(it->second);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

struct ExtractArgs {
  TunableOptions tunables;
  std::string manifest;
  std::string out;
  std::string cache_dir;
  std::string dump_dir;
  std::string mos_scale = "0,100";
  bool strict = false;
};

int cmd_extract(const ExtractArgs& a, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = a.tunables.resolve();
  const auto scale = parse_mos_scale(a.mos_scale);
  const DatasetManifest manifest = load_manifest(a.manifest, scale);
  write_sidecar(with_suffix(a.out, ".config"), "extract", cfg, {{"mos-scale", a.mos_scale}});

  ExtractOptions opts;
  if (!a.cache_dir.empty()) opts.cache_dir = fs::path(a.cache_dir);
  opts.strict = a.strict;
  opts.jobs = cfg.jobs;
  const DatasetFeatures feats = extract_dataset_features(manifest, cfg.pipeline, opts);
  for (const auto& f : feats.failures) {
    err << "warning: " << manifest.entries[f.entry].id << ": " << f.message << '\n';
  }
  write_feature_csv(fs::path(a.out), feats.ids, feats.features);
  if (!a.dump_dir.empty()) dump_subbands(manifest, cfg.pipeline, a.dump_dir, err);
  out << fmt::format("extracted {} of {} images ({} features each, {} cache hits, {} failed)\n",
                     feats.ids.size(), manifest.size(), cfg.pipeline.feature_width(), feats.cache_hits,
                     feats.failures.size());
  return kExitOk;
}

struct TrainArgs {
  TunableOptions tunables;
  std::string features;
  std::string manifest;
  std::string model_out;
  std::string mos_scale = "0,100";
};

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream&) {
  const RunConfig cfg = a.tunables.resolve();
  const DatasetManifest manifest = load_manifest(a.manifest, parse_mos_scale(a.mos_scale));
  const Matrix x = align_features(read_feature_csv(a.features), manifest);
  const auto y = manifest.mos();

  SvrParams params = cfg.svr;
  if (cfg.grid_search) {
    GridSearchOptions gs;
    gs.seed = cfg.seed;
    const auto best = grid_search_svr(x, y, cfg.svr, gs);
    params = best.best;
    out << fmt::format("grid search selected C={} gamma={} (cv mse {})\n", format_number(params.c),
                       format_number(params.resolved_gamma(x.cols)), format_number(best.best_cv_mse));
  }
  const TrainResult fit = train_svr(x, y, params);
  if (!fit.converged) {
    out << fmt::format("warning: SMO stopped at the iteration cap (gap {})\n", format_number(fit.kkt_gap));
  }

  const auto pred = predict(fit.model, x);
  std::size_t inside = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (std::abs(pred[i] - y[i]) <= fit.model.epsilon_tube + params.tolerance) ++inside;
  }
  out << fmt::format("epsilon-tube satisfaction: {:.2f}% ({}/{} within {})\n",
                     100.0 * static_cast<double>(inside) / static_cast<double>(y.size()), inside, y.size(),
                     format_number(fit.model.epsilon_tube));
  out << fmt::format("support vectors: {}, iterations: {}\n", fit.model.support_vectors.rows,
                     fit.iterations);

  write_file_atomic(a.model_out, save_model(fit.model));
  RunConfig effective = cfg;
  effective.svr = params;
  write_sidecar(with_suffix(a.model_out, ".config"), "train", effective, {{"mos-scale", a.mos_scale}});
  return kExitOk;
}

struct PredictArgs {
  TunableOptions tunables;
  std::string model;
  std::string input;
  std::string sidecar;
};

int cmd_predict(const PredictArgs& a, std::ostream& out, std::ostream&) {
  const RunConfig cfg = a.tunables.resolve();
  const RegressionModel model = [&] {
    std::ifstream in(a.model, std::ios::binary);
    if (!in) throw IoError("cannot open model: " + a.model);
    return load_model(in);
  }();
  const fs::path input(a.input);
  write_sidecar(a.sidecar.empty() ? with_suffix(input, ".predict.config") : fs::path(a.sidecar),
                "predict", cfg);

  std::string ext = input.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".csv") {
    const FeatureTable table = read_feature_csv(input);
    if (table.features.cols != model.feature_dim()) {
      throw ValidationError(fmt::format("feature CSV has {} columns but the model expects {}",
                                        table.features.cols, model.feature_dim()));
    }
    const auto scores = predict(model, table.features);
    out << "id,score\n";
    for (std::size_t i = 0; i < scores.size(); ++i) {
      out << csv_escape(table.ids[i]) << ',' << format_number(scores[i]) << '\n';
    }
    return kExitOk;
  }

  const Raster erp = load_erp(input);
  const auto features = extract_image_features(erp, cfg.pipeline, cfg.jobs);
  if (features.size() != model.feature_dim()) {
    throw ValidationError(fmt::format("configuration yields {} features but the model expects {}",
                                      features.size(), model.feature_dim()));
  }
  out << format_number(predict(model, features)) << '\n';
  return kExitOk;
}

struct EvaluateArgs {
  TunableOptions tunables;
  std::string manifest;
  std::string features;
  std::string out;
  std::string summary;
  std::string cache_dir;
  std::string mos_scale = "0,100";
  bool strict = false;
};

void write_summary(std::ostream& os, const TrialSummary& s) {
  os << "metric,median,mean,std\n";
  const std::pair<const char*, const MetricSummary*> rows[] = {
      {"srocc", &s.srocc}, {"plcc", &s.plcc}, {"rmse", &s.rmse}};
  for (const auto& [name, m] : rows) {
    os << name << ',' << format_number(m->median) << ',' << format_number(m->mean) << ','
       << format_number(m->stddev) << '\n';
  }
}

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = a.tunables.resolve();
  const DatasetManifest manifest = load_manifest(a.manifest, parse_mos_scale(a.mos_scale));
  write_sidecar(with_suffix(a.out, ".config"), "evaluate", cfg, {{"mos-scale", a.mos_scale}});

  Matrix x;
  std::vector<double> y;
  std::vector<std::string> groups;
  if (!a.features.empty()) {
    x = align_features(read_feature_csv(a.features), manifest);
    y = manifest.mos();
    groups = manifest.groups();
  } else {
    ExtractOptions opts;
    if (!a.cache_dir.empty()) opts.cache_dir = fs::path(a.cache_dir);
    opts.strict = a.strict;
    opts.jobs = cfg.jobs;
    DatasetFeatures feats = extract_dataset_features(manifest, cfg.pipeline, opts);
    for (const auto& f : feats.failures) {
      err << "warning: " << manifest.entries[f.entry].id << ": " << f.message << '\n';
    }
    const auto all_mos = manifest.mos();
    const auto all_groups = manifest.groups();
    for (auto i : feats.entries) {
      y.push_back(all_mos[i]);
      groups.push_back(all_groups[i]);
    }
    x = std::move(feats.features);
  }

  const TrialSummary summary = run_trials(x, y, cfg.trial_options(), groups);

  std::ostringstream csv;
  csv << "trial,seed,train_size,test_size,srocc,plcc,rmse,error\n";
  for (const auto& t : summary.trials) {
    csv << t.index << ',' << t.seed << ',' << t.train_size << ',' << t.test_size << ',';
    if (t.ok) {
      csv << format_number(t.srocc) << ',' << format_number(t.plcc) << ',' << format_number(t.rmse) << ",\n";
    } else {
      csv << ",,," << csv_escape(t.error) << '\n';
    }
  }
  write_file_atomic(a.out, csv.str());

  std::ostringstream block;
  write_summary(block, summary);
  write_file_atomic(a.summary.empty() ? with_suffix(a.out, ".summary.csv") : fs::path(a.summary),
                    block.str());
  out << block.str();
  if (summary.failures > 0) {
    err << fmt::format("warning: {} of {} trials failed; see the error column\n", summary.failures,
                       summary.trials.size());
  }
  if (summary.failures == summary.trials.size()) {
    throw NumericalError("every trial failed: " + summary.trials.front().error);
  }
  return kExitOk;
}

struct ViewportsArgs {
  TunableOptions tunables;
  std::string image;
  std::string out_dir;
};

int cmd_viewports(const ViewportsArgs& a, std::ostream& out, std::ostream&) {
  const RunConfig cfg = a.tunables.resolve();
  const Raster erp = load_erp(a.image);
  const fs::path dir(a.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError(fmt::format("cannot create output directory {}: {}", dir.string(),
                              ec ? ec.message() : "not a directory"));
  }
  const ViewportSet set = extract_viewports(erp, cfg.pipeline.viewports, cfg.jobs);
  std::string listing = "# file lon lat fov size\n";
  for (std::size_t i = 0; i < set.count(); ++i) {
    const std::string name = fmt::format("viewport_{:03d}.png", i);
    write_png(dir / name, set.rasters[i]);
    const auto& s = set.specs[i];
    listing += fmt::format("{} {} {} {} {}\n", name, format_number(s.center_longitude),
                           format_number(s.center_latitude), format_number(s.fov_degrees), s.size);
  }
  write_file_atomic(dir / "viewports.txt", listing);
  write_sidecar(dir / "viewports.config", "viewports", cfg);
  out << fmt::format("wrote {} viewports to {}\n", set.count(), dir.string());
  return kExitOk;
}

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::kIo:
      return kExitIo;
    case ErrorKind::kNumerical:
      return kExitNumerical;
    case ErrorKind::kValidation:
      break;
  }
  return kExitValidation;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"No-reference quality assessment for equirectangular 360-degree images", "mfilgn"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "mfilgn 0.1.0");

  ExtractArgs ex;
  auto* extract = app.add_subcommand("extract", "compute feature vectors for a manifest");
  extract->add_option("--manifest", ex.manifest, "CSV with header path,mos[,distortion][,reference]")
      ->required();
  extract->add_option("--out", ex.out, "feature CSV to write")->required();
  extract->add_option("--cache-dir", ex.cache_dir, "directory for per-image feature cache");
  extract->add_option("--dump-subbands", ex.dump_dir, "also write every wavelet subband as PGM here");
  extract->add_option("--mos-scale", ex.mos_scale, "valid MOS range as min,max")->capture_default_str();
  extract->add_flag("--strict", ex.strict, "fail when any image fails");
  ex.tunables.attach(*extract, true);

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "fit the quality regressor");
  train->add_option("--features", tr.features, "feature CSV from extract")->required();
  train->add_option("--manifest", tr.manifest, "manifest supplying MOS")->required();
  train->add_option("--model-out", tr.model_out, "model file to write")->required();
  train->add_option("--mos-scale", tr.mos_scale, "valid MOS range as min,max")->capture_default_str();
  tr.tunables.attach(*train, false);

  PredictArgs pr;
  auto* predict_cmd = app.add_subcommand("predict", "score an image or a feature CSV");
  predict_cmd->add_option("--model", pr.model, "model file from train")->required();
  predict_cmd->add_option("input", pr.input, "ERP image, or feature CSV (.csv)")->required();
  predict_cmd->add_option("--sidecar", pr.sidecar, "effective-config file (default <input>.predict.config)");
  pr.tunables.attach(*predict_cmd, true);

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "repeated random train/test trials");
  evaluate->add_option("--manifest", ev.manifest, "dataset manifest")->required();
  evaluate->add_option("--features", ev.features, "precomputed feature CSV (skips extraction)");
  evaluate->add_option("--out", ev.out, "per-trial CSV to write")->required();
  evaluate->add_option("--summary", ev.summary, "summary CSV (default <out>.summary.csv)");
  evaluate->add_option("--cache-dir", ev.cache_dir, "directory for per-image feature cache");
  evaluate->add_option("--mos-scale", ev.mos_scale, "valid MOS range as min,max")->capture_default_str();
  evaluate->add_flag("--strict", ev.strict, "fail when any image fails");
  ev.tunables.attach(*evaluate, false);

  ViewportsArgs vp;
  auto* viewports = app.add_subcommand("viewports", "write the sampled viewports of one image");
  viewports->add_option("image", vp.image, "ERP image")->required();
  viewports->add_option("--out-dir", vp.out_dir, "output directory")->required();
  vp.tunables.attach(*viewports, true);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (extract->parsed()) return cmd_extract(ex, out, err);
    if (train->parsed()) return cmd_train(tr, out, err);
    if (predict_cmd->parsed()) return cmd_predict(pr, out, err);
    if (evaluate->parsed()) return cmd_evaluate(ev, out, err);
    if (viewports->parsed()) return cmd_viewports(vp, out, err);
  } catch (const ParseError& e) {
    err << "error: " << (e.field().empty() ? "" : e.field() + ": ") << e.what() << '\n';
    return kExitValidation;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitValidation;
}

}  // namespace mfilgn::cli
