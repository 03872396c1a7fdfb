#pragma once

// Forward sensing simulator: low-resolution hyperspectral cube
// x_l = D_s H_s u_l + n_l and panchromatic image p = G u + n_p from a
// reference cube.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "panfuse/errors.hpp"
#include "panfuse/operators.hpp"
#include "panfuse/tensor.hpp"

namespace panfuse {

struct SimScenario {
  HyperCube reference;
  SensorModel model;
  std::uint64_t seed = 0;
  /// Scales the noise radii handed to the solver. At 1.0 the true image meets
  /// |n|^2 <= M sigma^2 only about half of the time.
  double radius_inflation = 1.0;

  void validate() const {
    model.validate();
    if (model.bands() != reference.bands())
      throw ShapeError("SimScenario: spectral weights do not match reference bands");
    model.check_grid(reference.width(), reference.height());
  }

  /// Sensor model with radii scaled by radius_inflation, for the solver.
  SensorModel solver_model() const {
    SensorModel m = model;
    for (double& s : m.sigma_x) s *= radius_inflation;
    m.sigma_p *= radius_inflation;
    return m;
  }
};

/// Isotropic Gaussian with standard deviation sigma_rel*q high-resolution
/// pixels, truncated at 4 sigma and normalised to unit sum.
inline Kernel gaussian_psf(std::size_t q, double sigma_rel = 0.5) {
  if (!(sigma_rel > 0.0)) throw ConfigError("gaussian_psf: sigma_rel must be > 0");
  if (q == 0) throw ConfigError("gaussian_psf: q must be >= 1");
  const double sigma = sigma_rel * static_cast<double>(q);
  const auto r = static_cast<std::size_t>(std::ceil(4.0 * sigma));
  const std::size_t n = 2 * r + 1;
  Kernel k{n, n, std::vector<double>(n * n)};
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double di = static_cast<double>(i) - static_cast<double>(r);
      const double dj = static_cast<double>(j) - static_cast<double>(r);
      const double w = std::exp(-(di * di + dj * dj) / (2.0 * sigma * sigma));
      k.weights[i * n + j] = w;
      sum += w;
    }
  }
  for (double& w : k.weights) w /= sum;
  return k;
}

namespace detail {
inline std::mt19937_64 stream(std::uint64_t seed, std::uint64_t which) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(which)};
  return std::mt19937_64(seq);
}
}  // namespace detail

inline HyperCube degrade_hx(const SimScenario& sc) {
  sc.validate();
  const auto& u = sc.reference;
  const std::size_t q = sc.model.q;
  SpatialFilter blur(u.width(), u.height(), sc.model.psf);
  HyperCube x(u.width() / q, u.height() / q, u.bands());
  auto rng = detail::stream(sc.seed, 1);
  for (std::size_t l = 0; l < u.bands(); ++l) {
    const Plane d = spatial_downsample(blur.apply(u.plane_copy(l)), q, sc.model.offset);
    auto dst = x.plane(l);
    std::normal_distribution<double> noise(0.0, 1.0);
    const double sigma = sc.model.sigma_x[l];
    for (std::size_t i = 0; i < dst.size(); ++i) {
      const double n = noise(rng);
      dst[i] = d[i] + (sigma > 0.0 ? sigma * n : 0.0);
    }
  }
  return x;
}

inline PanImage degrade_pan(const SimScenario& sc) {
  sc.validate();
  double gsum = 0.0;
  for (double w : sc.model.g) gsum += w;
  if (!(gsum > 0.0)) throw ConfigError("degrade_pan: spectral weights sum to zero");
  PanImage p = pan_mix(sc.reference, sc.model.g);
  if (sc.model.sigma_p > 0.0) {
    auto rng = detail::stream(sc.seed, 2);
    std::normal_distribution<double> noise(0.0, sc.model.sigma_p);
    for (std::size_t i = 0; i < p.size(); ++i) p[i] += noise(rng);
  }
  return p;
}

/// Piecewise-constant cube whose bands all share one label map, hence the
/// same level lines. Values lie in [0.05, 1].
inline HyperCube piecewise_constant_scene(std::size_t width, std::size_t height,
                                          std::size_t bands, std::uint64_t seed,
                                          std::size_t regions = 6) {
  if (width == 0 || height == 0 || bands == 0) throw ShapeError("piecewise_constant_scene: empty");
  auto rng = detail::stream(seed, 3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::size_t> label(width * height, 0);
  const double w = static_cast<double>(width), h = static_cast<double>(height);
  for (std::size_t k = 1; k <= regions; ++k) {
    const double cx = unit(rng) * w, cy = unit(rng) * h;
    const double rx = (0.12 + 0.3 * unit(rng)) * w, ry = (0.12 + 0.3 * unit(rng)) * h;
    const bool disk = unit(rng) < 0.5;
    for (std::size_t i = 0; i < height; ++i) {
      for (std::size_t j = 0; j < width; ++j) {
        const double dx = (static_cast<double>(j) + 0.5 - cx) / rx;
        const double dy = (static_cast<double>(i) + 0.5 - cy) / ry;
        const bool inside = disk ? dx * dx + dy * dy <= 1.0
                                 : std::abs(dx) <= 1.0 && std::abs(dy) <= 1.0;
        if (inside) label[i * width + j] = k;
      }
    }
  }
  // Smooth random spectra, one per label.
  std::vector<std::vector<double>> spectra(regions + 1, std::vector<double>(bands));
  for (auto& s : spectra) {
    const double base = 0.2 + 0.5 * unit(rng);
    const double amp = 0.25 * unit(rng);
    const double freq = 0.5 + 3.0 * unit(rng);
    const double phase = 6.283185307179586 * unit(rng);
    const double slope = 0.3 * (unit(rng) - 0.5);
    for (std::size_t l = 0; l < bands; ++l) {
      const double t = bands > 1 ? static_cast<double>(l) / static_cast<double>(bands - 1) : 0.0;
      s[l] = std::clamp(base + amp * std::sin(freq * 6.283185307179586 * t + phase) + slope * t,
                        0.05, 1.0);
    }
  }
  HyperCube cube(width, height, bands);
  for (std::size_t l = 0; l < bands; ++l) {
    auto dst = cube.plane(l);
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = spectra[label[i]][l];
  }
  return cube;
}

}  // namespace panfuse
