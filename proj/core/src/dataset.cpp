#include "mfilgn/dataset.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "mfilgn/csv.hpp"
#include "mfilgn/errors.hpp"
#include "mfilgn/hashing.hpp"
#include "mfilgn/image_io.hpp"
#include "mfilgn/nss.hpp"
#include "mfilgn/parallel.hpp"
#include "mfilgn/viewport.hpp"
#include "mfilgn/wavelet.hpp"

namespace mfilgn {
namespace {

double parse_cell(const std::string& text, const std::string& field, std::size_t line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || !std::isfinite(v)) {
    throw ParseError(field, fmt::format("line {}: '{}' is not a finite number", line, text));
  }
  return v;
}

std::string optional_field(const CsvRow& row, std::optional<std::size_t> col) {
  if (!col || *col >= row.fields.size()) return {};
  return row.fields[*col];
}

std::optional<std::vector<double>> read_cache(const std::filesystem::path& file, std::size_t width) {
  std::ifstream in(file, std::ios::binary);
  if (!in) return std::nullopt;
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    const auto rows = parse_csv(buf.str());
    if (rows.size() != 1 || rows[0].fields.size() != width) return std::nullopt;
    std::vector<double> out;
    out.reserve(width);
    for (const auto& f : rows[0].fields) out.push_back(parse_cell(f, "cache", 1));
    return out;
  } catch (const Error&) {
    return std::nullopt;
  }
}

std::string render_row(std::span<const double> values) {
  std::string line;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (k) line += ',';
    line += format_number(values[k]);
  }
  line += '\n';
  return line;
}

}  // namespace

std::vector<double> DatasetManifest::mos() const {
  std::vector<double> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.mos);
  return out;
}

std::vector<std::string> DatasetManifest::groups() const {
  std::vector<std::string> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.reference.value_or(e.id));
  return out;
}

DatasetManifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir,
                               std::pair<double, double> mos_scale) {
  if (!(mos_scale.first < mos_scale.second)) {
    throw ValidationError(fmt::format("MOS scale ({}, {}) is empty", mos_scale.first, mos_scale.second));
  }
  const auto rows = parse_csv(text);
  if (rows.empty()) throw ParseError("header", "manifest is empty");

  std::optional<std::size_t> path_col;
  std::optional<std::size_t> mos_col;
  std::optional<std::size_t> distortion_col;
  std::optional<std::size_t> reference_col;
  const auto& header = rows.front().fields;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string& name = header[c];
    std::optional<std::size_t>* slot = nullptr;
    if (name == "path") slot = &path_col;
    else if (name == "mos") slot = &mos_col;
    else if (name == "distortion") slot = &distortion_col;
    else if (name == "reference") slot = &reference_col;
    else throw ParseError("header", fmt::format("unknown manifest column '{}'", name));
    if (*slot) throw ParseError("header", fmt::format("duplicate manifest column '{}'", name));
    *slot = c;
  }
  if (!path_col || !mos_col) throw ParseError("header", "manifest header needs 'path' and 'mos'");

  DatasetManifest manifest;
  manifest.mos_scale = mos_scale;
  std::map<std::string, std::size_t> seen;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.fields.size() != header.size()) {
      throw ParseError("row", fmt::format("line {}: expected {} fields, got {}", row.line,
                                          header.size(), row.fields.size()));
    }
    ManifestEntry e;
    e.id = row.fields[*path_col];
    if (e.id.empty()) throw ParseError("path", fmt::format("line {}: empty path", row.line));
    const std::filesystem::path p(e.id);
    e.path = p.is_absolute() ? p : (base_dir / p).lexically_normal();
    e.mos = parse_cell(row.fields[*mos_col], "mos", row.line);
    if (e.mos < mos_scale.first || e.mos > mos_scale.second) {
      throw ValidationError(fmt::format("line {}: mos {} outside scale [{}, {}]", row.line, e.mos,
                                        mos_scale.first, mos_scale.second));
    }
    if (auto d = optional_field(row, distortion_col); !d.empty()) e.distortion = d;
    if (auto g = optional_field(row, reference_col); !g.empty()) e.reference = g;
    const auto key = e.path.string();
    if (const auto [it, fresh] = seen.emplace(key, row.line); !fresh) {
      throw ValidationError(fmt::format("line {}: duplicate path '{}' (first on line {})", row.line,
                                        e.id, it->second));
    }
    manifest.entries.push_back(std::move(e));
  }
  return manifest;
}

DatasetManifest load_manifest(const std::filesystem::path& path, std::pair<double, double> mos_scale) {
  DatasetManifest m = parse_manifest(read_text_file(path), path.parent_path(), mos_scale);
  m.name = path.stem().string();
  return m;
}

std::vector<double> extract_image_features(const Raster& erp, const PipelineConfig& cfg,
                                           unsigned jobs) {
  cfg.validate();
  const MfiFeatures mfi = extract_mfi(erp, cfg.wavelet);
  const LocalNaturalness local = extract_local_naturalness(erp, cfg.viewports, cfg.nss, jobs);
  const NaturalnessFeatures global = extract_nss(erp, cfg.nss);
  std::vector<double> out = mfi.entropies;
  const auto lgn = combine_local_global(local.features.values, global.values);
  out.insert(out.end(), lgn.begin(), lgn.end());
  return out;
}

std::string feature_cache_key(std::span<const std::uint8_t> image_bytes,
                              const std::string& fingerprint) {
  Sha256 h;
  h.update(image_bytes);
  h.update(std::string_view("\n"));
  h.update(fingerprint);
  return h.hex_digest();
}

DatasetFeatures extract_dataset_features(const DatasetManifest& manifest, const PipelineConfig& cfg,
                                         const ExtractOptions& options) {
  cfg.validate();
  const std::size_t width = cfg.feature_width();
  const std::string fingerprint = pipeline_fingerprint(cfg);
  if (options.cache_dir) {
    std::error_code ec;
    std::filesystem::create_directories(*options.cache_dir, ec);
    if (ec) throw IoError(fmt::format("cannot create cache directory {}: {}",
                                      options.cache_dir->string(), ec.message()));
  }

  const std::size_t n = manifest.size();
  std::vector<std::vector<double>> rows(n);
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::string> messages(n);
  std::atomic<std::size_t> hits{0};
  std::atomic<std::size_t> computed{0};

  parallel_for(n, options.jobs, [&](std::size_t i) {
    const auto& entry = manifest.entries[i];
    try {
      const auto bytes = read_file_bytes(entry.path);
      std::optional<std::filesystem::path> cache_file;
      if (options.cache_dir) {
        cache_file = *options.cache_dir / (feature_cache_key(bytes, fingerprint) + ".csv");
        if (auto cached = read_cache(*cache_file, width)) {
          rows[i] = std::move(*cached);
          ++hits;
          return;
        }
      }
      Raster erp;
      try {
        erp = decode_image(bytes);
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::kIo) throw IoError(entry.path.string() + ": " + e.what());
        throw ValidationError(entry.path.string() + ": " + e.what());
      }
      rows[i] = extract_image_features(erp, cfg, 1);
      ++computed;
      if (cache_file) write_file_atomic(*cache_file, render_row(rows[i]));
    } catch (const std::exception& e) {
      errors[i] = std::current_exception();
      messages[i] = e.what();
    }
  });

  DatasetFeatures out;
  out.features.cols = width;
  for (std::size_t i = 0; i < n; ++i) {
    if (errors[i]) {
      out.failures.push_back({i, messages[i]});
      continue;
    }
    out.ids.push_back(manifest.entries[i].id);
    out.entries.push_back(i);
    out.features.append_row(rows[i]);
  }
  out.cache_hits = hits.load();
  out.computed = computed.load();
  if (options.strict && !out.failures.empty()) std::rethrow_exception(errors[out.failures.front().entry]);
  return out;
}

void write_feature_csv(std::ostream& out, const std::vector<std::string>& ids, const Matrix& features) {
  if (ids.size() != features.rows) {
    throw ValidationError(fmt::format("{} ids but {} feature rows", ids.size(), features.rows));
  }
  out << "id";
  for (std::size_t k = 0; k < features.cols; ++k) out << ",f" << k;
  out << '\n';
  for (std::size_t i = 0; i < features.rows; ++i) {
    out << csv_escape(ids[i]) << ',' << render_row(features.row(i));
  }
}

void write_feature_csv(const std::filesystem::path& path, const std::vector<std::string>& ids,
                       const Matrix& features) {
  std::ostringstream buf;
  write_feature_csv(buf, ids, features);
  write_file_atomic(path, buf.str());
}

FeatureTable parse_feature_csv(const std::string& text) {
  const auto rows = parse_csv(text);
  if (rows.empty()) throw ParseError("header", "feature CSV is empty");
  const auto& header = rows.front().fields;
  if (header.empty() || header[0] != "id") throw ParseError("header", "first column must be 'id'");
  const std::size_t width = header.size() - 1;
  if (width == 0) throw ParseError("header", "feature CSV has no feature columns");
  FeatureTable table;
  table.features.cols = width;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.fields.size() != header.size()) {
      throw ParseError("row", fmt::format("line {}: expected {} fields, got {}", row.line,
                                          header.size(), row.fields.size()));
    }
    std::vector<double> values;
    values.reserve(width);
    for (std::size_t k = 0; k < width; ++k) {
      values.push_back(parse_cell(row.fields[k + 1], header[k + 1], row.line));
    }
    table.ids.push_back(row.fields[0]);
    table.features.append_row(values);
  }
  return table;
}

FeatureTable read_feature_csv(const std::filesystem::path& path) {
  return parse_feature_csv(read_text_file(path));
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  thread_local std::mt19937_64 rng{std::random_device{}()};
  auto tmp = path;
  tmp += fmt::format(".tmp{:016x}", rng());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      std::filesystem::remove(tmp);
      throw IoError("write failed: " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw IoError(fmt::format("cannot rename to {}: {}", path.string(), ec.message()));
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path.string());
  return buf.str();
}

}  // namespace mfilgn
