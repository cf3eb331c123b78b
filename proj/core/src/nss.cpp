#include "mfilgn/nss.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "mfilgn/errors.hpp"

namespace mfilgn {

void ZcaConfig::validate() const {
  if (patch_size < 1 || patch_size % 2 == 0) {
    throw ValidationError(fmt::format("ZCA patch size must be odd and positive, got {}", patch_size));
  }
  if (!(regularization_epsilon > 0.0)) {
    throw ValidationError("ZCA regularization epsilon must be positive");
  }
}

void MscnConfig::validate() const {
  if (window_radius < 1) throw ValidationError("MSCN window radius must be >= 1");
  if (!(gaussian_sigma > 0.0)) throw ValidationError("MSCN gaussian sigma must be positive");
  if (!(stability_c > 0.0)) throw ValidationError("MSCN stability constant must be positive");
}

namespace {

/// Correlates `img` with a square odd-sized kernel using reflected borders.
Raster filter_reflect(const Raster& img, std::span<const double> kernel, int size) {
  const int radius = size / 2;
  const auto w = static_cast<std::ptrdiff_t>(img.width());
  const auto h = static_cast<std::ptrdiff_t>(img.height());
  Raster out(img.width(), img.height());
  std::vector<std::ptrdiff_t> cols(static_cast<std::size_t>(size));
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      for (int k = 0; k < size; ++k) cols[static_cast<std::size_t>(k)] = reflect_index(x + k - radius, w);
      double acc = 0.0;
      for (int ky = 0; ky < size; ++ky) {
        const auto row = img.row(static_cast<std::size_t>(reflect_index(y + ky - radius, h)));
        const double* kr = kernel.data() + static_cast<std::ptrdiff_t>(ky) * size;
        for (int kx = 0; kx < size; ++kx) acc += kr[kx] * row[static_cast<std::size_t>(cols[static_cast<std::size_t>(kx)])];
      }
      out.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) = acc;
    }
  }
  return out;
}

}  // namespace

ZcaKernel estimate_zca_kernel(const Raster& img, const ZcaConfig& cfg) {
  cfg.validate();
  const auto p = static_cast<std::size_t>(cfg.patch_size);
  if (img.width() < p || img.height() < p) {
    throw ValidationError(fmt::format("{}x{} image smaller than ZCA patch {}", img.width(),
                                      img.height(), p));
  }
  const std::size_t dim = p * p;
  double mean = 0.0;
  for (double v : img.values()) mean += v;
  mean /= static_cast<double>(img.size());

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  Eigen::VectorXd patch(static_cast<Eigen::Index>(dim));
  std::size_t patches = 0;
  for (std::size_t py = 0; py + p <= img.height(); py += p) {
    for (std::size_t px = 0; px + p <= img.width(); px += p) {
      for (std::size_t r = 0; r < p; ++r) {
        for (std::size_t c = 0; c < p; ++c) {
          patch[static_cast<Eigen::Index>(r * p + c)] = img.at(px + c, py + r) - mean;
        }
      }
      cov.selfadjointView<Eigen::Lower>().rankUpdate(patch);
      ++patches;
    }
  }
  cov = cov.selfadjointView<Eigen::Lower>();
  cov /= static_cast<double>(patches);

  // Point reflection of the patch reverses the flattened index; averaging the
  // covariance with its reflection makes the whitening matrix commute with it,
  // so the centre row is a zero-phase kernel.
  const Eigen::MatrixXd reflected = cov.reverse();
  cov = 0.5 * (cov + reflected);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const Eigen::VectorXd lambda = eig.eigenvalues().cwiseMax(0.0);
  const double eps = cfg.regularization_epsilon;
  // Gain restores the average pixel variance so downstream constants tuned for
  // [0, 255] data remain meaningful; a flat image yields the identity kernel.
  const double gain = std::sqrt(std::max(lambda.mean(), eps));
  const Eigen::VectorXd inv_sqrt = (lambda.array() + eps).rsqrt().matrix();
  const Eigen::MatrixXd whitening =
      gain * eig.eigenvectors() * inv_sqrt.asDiagonal() * eig.eigenvectors().transpose();

  const auto centre = static_cast<Eigen::Index>(dim / 2);
  ZcaKernel kernel{cfg.patch_size, std::vector<double>(dim)};
  for (std::size_t i = 0; i < dim; ++i) {
    kernel.weights[i] = 0.5 * (whitening(centre, static_cast<Eigen::Index>(i)) +
                               whitening(centre, static_cast<Eigen::Index>(dim - 1 - i)));
  }
  return kernel;
}

Raster zca_whiten(const Raster& img, const ZcaConfig& cfg) {
  if (!cfg.enabled) return img;
  const ZcaKernel kernel = estimate_zca_kernel(img, cfg);
  return filter_reflect(img, kernel.weights, kernel.size);
}

std::vector<double> gaussian_window(const MscnConfig& cfg) {
  cfg.validate();
  const int r = cfg.window_radius;
  const int size = 2 * r + 1;
  std::vector<double> w(static_cast<std::size_t>(size * size));
  const double denom = 2.0 * cfg.gaussian_sigma * cfg.gaussian_sigma;
  double total = 0.0;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      const double v = std::exp(-(dx * dx + dy * dy) / denom);
      w[static_cast<std::size_t>((dy + r) * size + (dx + r))] = v;
      total += v;
    }
  }
  for (double& v : w) v /= total;
  return w;
}

Raster mscn(const Raster& img, const MscnConfig& cfg) {
  const auto window = gaussian_window(cfg);
  const int r = cfg.window_radius;
  const int size = 2 * r + 1;
  if (img.width() < static_cast<std::size_t>(size) || img.height() < static_cast<std::size_t>(size)) {
    throw ValidationError(fmt::format("{}x{} image smaller than MSCN window {}", img.width(),
                                      img.height(), size));
  }
  const auto w = static_cast<std::ptrdiff_t>(img.width());
  const auto h = static_cast<std::ptrdiff_t>(img.height());
  Raster out(img.width(), img.height());
  std::vector<std::ptrdiff_t> cols(static_cast<std::size_t>(size));
  std::vector<const double*> rows(static_cast<std::size_t>(size));
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    for (int k = 0; k < size; ++k) {
      rows[static_cast<std::size_t>(k)] = img.row(static_cast<std::size_t>(reflect_index(y + k - r, h))).data();
    }
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      for (int k = 0; k < size; ++k) cols[static_cast<std::size_t>(k)] = reflect_index(x + k - r, w);
      // Local mean accumulated as an offset from the centre pixel, so a flat
      // neighbourhood yields exactly zero.
      const double v = img.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y));
      double offset = 0.0;
      for (int ky = 0; ky < size; ++ky) {
        const double* row = rows[static_cast<std::size_t>(ky)];
        const double* wr = window.data() + static_cast<std::ptrdiff_t>(ky) * size;
        for (int kx = 0; kx < size; ++kx) offset += wr[kx] * (row[cols[static_cast<std::size_t>(kx)]] - v);
      }
      double var = 0.0;
      for (int ky = 0; ky < size; ++ky) {
        const double* row = rows[static_cast<std::size_t>(ky)];
        const double* wr = window.data() + static_cast<std::ptrdiff_t>(ky) * size;
        for (int kx = 0; kx < size; ++kx) {
          const double d = (row[cols[static_cast<std::size_t>(kx)]] - v) - offset;
          var += wr[kx] * d * d;
        }
      }
      out.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) =
          -offset / (std::sqrt(var) + cfg.stability_c);
    }
  }
  return out;
}

std::vector<double> neighbour_products(const Raster& field, NeighbourOrientation orientation) {
  std::ptrdiff_t dx = 0;
  std::ptrdiff_t dy = 0;
  switch (orientation) {
    case NeighbourOrientation::kHorizontal: dx = 1; break;
    case NeighbourOrientation::kVertical: dy = 1; break;
    case NeighbourOrientation::kMainDiagonal: dx = 1; dy = 1; break;
    case NeighbourOrientation::kSecondaryDiagonal: dx = 1; dy = -1; break;
  }
  const auto w = static_cast<std::ptrdiff_t>(field.width());
  const auto h = static_cast<std::ptrdiff_t>(field.height());
  std::vector<double> out;
  out.reserve(field.size());
  for (std::ptrdiff_t y = std::max<std::ptrdiff_t>(0, -dy); y < h - std::max<std::ptrdiff_t>(0, dy); ++y) {
    for (std::ptrdiff_t x = 0; x < w - dx; ++x) {
      out.push_back(field.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) *
                    field.at(static_cast<std::size_t>(x + dx), static_cast<std::size_t>(y + dy)));
    }
  }
  return out;
}

std::array<double, NaturalnessFeatures::kPerScale> mscn_scale_features(const Raster& field) {
  std::array<double, NaturalnessFeatures::kPerScale> out{};
  const GgdParams ggd = fit_ggd(field.values());
  out[0] = ggd.shape_tau;
  out[1] = ggd.variance_sigma2;
  std::size_t next = 2;
  for (auto orientation : {NeighbourOrientation::kHorizontal, NeighbourOrientation::kVertical,
                           NeighbourOrientation::kMainDiagonal,
                           NeighbourOrientation::kSecondaryDiagonal}) {
    const auto products = neighbour_products(field, orientation);
    AggdParams aggd;
    try {
      aggd = fit_aggd(products);
    } catch (const ValidationError& e) {
      throw NumericalError(std::string("degenerate neighbour products: ") + e.what());
    }
    out[next++] = aggd.mean_eta;
    out[next++] = aggd.shape_tau;
    out[next++] = aggd.left_sigma2;
    out[next++] = aggd.right_sigma2;
  }
  return out;
}

NaturalnessFeatures extract_nss(const Raster& img, const NssConfig& cfg) {
  cfg.zca.validate();
  cfg.mscn.validate();
  NaturalnessFeatures features;
  const Raster half = downsample_half(img);
  const Raster* scales[2] = {&img, &half};
  for (std::size_t s = 0; s < 2; ++s) {
    const Raster field = mscn(zca_whiten(*scales[s], cfg.zca), cfg.mscn);
    const auto part = mscn_scale_features(field);
    std::copy(part.begin(), part.end(), features.values.begin() +
                                            static_cast<std::ptrdiff_t>(s * NaturalnessFeatures::kPerScale));
  }
  return features;
}

}  // namespace mfilgn
