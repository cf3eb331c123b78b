#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mfilgn/config.hpp"
#include "mfilgn/matrix.hpp"
#include "mfilgn/raster.hpp"

namespace mfilgn {

struct ManifestEntry {
  std::string id;                 // path as written in the manifest
  std::filesystem::path path;     // resolved against the manifest directory
  double mos = 0.0;
  std::optional<std::string> distortion;
  std::optional<std::string> reference;
};

struct DatasetManifest {
  std::string name;
  std::pair<double, double> mos_scale{0.0, 100.0};
  std::vector<ManifestEntry> entries;

  std::size_t size() const { return entries.size(); }
  std::vector<double> mos() const;
  /// Reference id per entry, falling back to the entry id when absent.
  std::vector<std::string> groups() const;
};

/// CSV with header `path,mos[,distortion][,reference]` (column order free).
DatasetManifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir,
                               std::pair<double, double> mos_scale = {0.0, 100.0});
DatasetManifest load_manifest(const std::filesystem::path& path,
                              std::pair<double, double> mos_scale = {0.0, 100.0});

/// MFI entropies, then local naturalness, then global naturalness.
std::vector<double> extract_image_features(const Raster& erp, const PipelineConfig& cfg,
                                           unsigned jobs = 1);

struct ExtractionFailure {
  std::size_t entry = 0;
  std::string message;
};

struct DatasetFeatures {
  std::vector<std::string> ids;
  std::vector<std::size_t> entries;  // manifest index of every row
  Matrix features;
  std::vector<ExtractionFailure> failures;
  std::size_t cache_hits = 0;
  std::size_t computed = 0;
};

struct ExtractOptions {
  std::optional<std::filesystem::path> cache_dir;
  bool strict = false;
  unsigned jobs = 1;
};

/// Rows follow manifest order. Failed images are skipped and listed, unless
/// `strict`, in which case the first failure is rethrown after all finish.
DatasetFeatures extract_dataset_features(const DatasetManifest& manifest, const PipelineConfig& cfg,
                                         const ExtractOptions& options = {});

/// Cache key: SHA-256 over the image bytes and the pipeline fingerprint.
std::string feature_cache_key(std::span<const std::uint8_t> image_bytes,
                              const std::string& fingerprint);

struct FeatureTable {
  std::vector<std::string> ids;
  Matrix features;
};

void write_feature_csv(std::ostream& out, const std::vector<std::string>& ids, const Matrix& features);
void write_feature_csv(const std::filesystem::path& path, const std::vector<std::string>& ids,
                       const Matrix& features);
FeatureTable parse_feature_csv(const std::string& text);
FeatureTable read_feature_csv(const std::filesystem::path& path);

/// Writes via a sibling temporary file and rename, so readers never see a
/// partial file.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace mfilgn
