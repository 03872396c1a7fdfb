#pragma once

// Fusion quality measures. Referenced: RMSE, ERGAS, SAM. Against the
// panchromatic image: FCC. Without reference (QNR distortions): D_lambda, D_s.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "panfuse/errors.hpp"
#include "panfuse/operators.hpp"
#include "panfuse/tensor.hpp"

namespace panfuse {

inline double rmse(const HyperCube& est, const HyperCube& ref) {
  if (!est.same_shape(ref)) throw ShapeError("rmse: shape mismatch");
  if (est.size() == 0) throw ShapeError("rmse: empty cube");
  double s = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) s += (est[i] - ref[i]) * (est[i] - ref[i]);
  return std::sqrt(s / static_cast<double>(est.size()));
}

/// 100/q * sqrt(mean_l (RMSE_l / mean(ref_l))^2)
inline double ergas(const HyperCube& est, const HyperCube& ref, double q) {
  if (!est.same_shape(ref)) throw ShapeError("ergas: shape mismatch");
  if (!(q > 0.0)) throw ConfigError("ergas: q must be > 0");
  const double n = static_cast<double>(ref.pixels());
  double acc = 0.0;
  for (std::size_t l = 0; l < ref.bands(); ++l) {
    auto e = est.plane(l);
    auto r = ref.plane(l);
    double mean = 0.0, se = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
      mean += r[i];
      se += (e[i] - r[i]) * (e[i] - r[i]);
    }
    mean /= n;
    if (mean == 0.0) throw DataError("ergas: reference band " + std::to_string(l + 1) + " has zero mean");
    const double rel = std::sqrt(se / n) / mean;
    acc += rel * rel;
  }
  return 100.0 / q * std::sqrt(acc / static_cast<double>(ref.bands()));
}

/// Mean spectral angle in degrees.
inline double sam(const HyperCube& est, const HyperCube& ref) {
  if (!est.same_shape(ref)) throw ShapeError("sam: shape mismatch");
  const std::size_t n = ref.pixels();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t l = 0; l < ref.bands(); ++l) {
      const double a = est[l * n + i], b = ref[l * n + i];
      ab += a * b;
      aa += a * a;
      bb += b * b;
    }
    if (aa == 0.0 || bb == 0.0) throw DataError("sam: zero spectrum at pixel " + std::to_string(i));
    const double c = std::clamp(ab / std::sqrt(aa * bb), -1.0, 1.0);
    total += std::acos(c);
  }
  return total / static_cast<double>(n) * 180.0 / std::numbers::pi;
}

/// 3x3 Laplacian high-pass (centre 8, neighbours -1), periodic.
inline Plane laplacian_filter(std::span<const double> u, std::size_t width, std::size_t height) {
  Plane out(width, height);
  for (std::size_t i = 0; i < height; ++i) {
    for (std::size_t j = 0; j < width; ++j) {
      double s = 8.0 * u[i * width + j];
      for (int di = -1; di <= 1; ++di) {
        for (int dj = -1; dj <= 1; ++dj) {
          if (di == 0 && dj == 0) continue;
          const std::size_t r = (i + height + di) % height;
          const std::size_t c = (j + width + dj) % width;
          s -= u[r * width + c];
        }
      }
      out(i, j) = s;
    }
  }
  return out;
}

/// Pearson correlation coefficient.
inline double correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) throw ShapeError("correlation: length mismatch");
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) { ma += a[i]; mb += b[i]; }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) throw DataError("correlation: zero variance");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

/// Mean over bands of corr(Laplacian(est_l), Laplacian(p)).
inline double fcc(const HyperCube& est, const PanImage& p) {
  if (est.width() != p.width() || est.height() != p.height())
    throw ShapeError("fcc: estimate and panchromatic grids differ");
  const Plane hp = laplacian_filter(p.data(), p.width(), p.height());
  double s = 0.0;
  for (std::size_t l = 0; l < est.bands(); ++l) {
    const Plane hb = laplacian_filter(est.plane(l), est.width(), est.height());
    s += correlation(hb.data(), hp.data());
  }
  return s / static_cast<double>(est.bands());
}

/// Universal image quality index over the whole image:
/// 4 cov(a,b) mean(a) mean(b) / ((var a + var b)(mean a^2 + mean b^2)).
inline double q_index(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw ShapeError("q_index: length mismatch");
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) { ma += a[i]; mb += b[i]; }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  sab /= n - 1.0;
  saa /= n - 1.0;
  sbb /= n - 1.0;
  const double den = (saa + sbb) * (ma * ma + mb * mb);
  if (den == 0.0) throw DataError("q_index: degenerate (zero-variance or zero-mean) input");
  return 4.0 * sab * ma * mb / den;
}

/// QNR spectral distortion: mean over band pairs of |Q(est_l, est_r) - Q(x_l, x_r)|.
inline double d_lambda(const HyperCube& est, const HyperCube& x_lr) {
  if (est.bands() != x_lr.bands()) throw ShapeError("d_lambda: band count mismatch");
  const std::size_t L = est.bands();
  if (L < 2) throw ShapeError("d_lambda: needs at least two bands");
  double s = 0.0;
  for (std::size_t l = 0; l < L; ++l)
    for (std::size_t r = 0; r < L; ++r)
      if (l != r)
        s += std::abs(q_index(est.plane(l), est.plane(r)) - q_index(x_lr.plane(l), x_lr.plane(r)));
  return s / static_cast<double>(L * (L - 1));
}

/// QNR spatial distortion: mean over bands of |Q(est_l, p) - Q(x_l, p_lr)|.
inline double d_s(const HyperCube& est, const HyperCube& x_lr, const PanImage& p,
                  const PanImage& p_lr) {
  if (est.bands() != x_lr.bands()) throw ShapeError("d_s: band count mismatch");
  if (est.width() != p.width() || est.height() != p.height() ||
      x_lr.width() != p_lr.width() || x_lr.height() != p_lr.height())
    throw ShapeError("d_s: grid mismatch");
  double s = 0.0;
  for (std::size_t l = 0; l < est.bands(); ++l)
    s += std::abs(q_index(est.plane(l), p.data()) - q_index(x_lr.plane(l), p_lr.data()));
  return s / static_cast<double>(est.bands());
}

/// p degraded to the hyperspectral grid by the sensor's blur and decimation.
inline PanImage lowres_pan(const PanImage& p, const SensorModel& model) {
  return spatial_downsample(spatial_convolve(p, model.psf), model.q, model.offset);
}

// ---------------------------------------------------------------------------

struct QualityReport {
  std::optional<double> rmse;
  std::optional<double> ergas;
  std::optional<double> sam;  // degrees
  std::optional<double> fcc;
  std::optional<double> d_s;
  std::optional<double> d_lambda;

  bool empty() const {
    return !rmse && !ergas && !sam && !fcc && !d_s && !d_lambda;
  }

  /// Aligned key/value block; scaled entries follow the usual tabulation
  /// (RMSE, FCC, D_s, D_lambda multiplied by 100).
  std::string to_text() const {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(4);
    auto line = [&](const char* key, const std::optional<double>& v, double scale,
                    const char* why_missing) {
      os << key;
      if (v) os << *v * scale;
      else os << "n/a (" << why_missing << ")";
      os << '\n';
    };
    line("rmse_x100      = ", rmse, 100.0, "no reference");
    line("ergas          = ", ergas, 1.0, "no reference");
    line("sam_deg        = ", sam, 1.0, "no reference");
    line("fcc_x100       = ", fcc, 100.0, "no panchromatic image");
    line("d_s_x100       = ", d_s, 100.0, "needs x and p");
    line("d_lambda_x100  = ", d_lambda, 100.0, "needs x");
    return os.str();
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    std::vector<std::string> missing;
    auto put = [&](const char* key, const std::optional<double>& v, double scale) {
      if (v) {
        j[key] = *v;
        if (scale != 1.0) j["scaled_x100"][key] = *v * scale;
      } else {
        j[key] = nullptr;
        missing.emplace_back(key);
      }
    };
    put("rmse", rmse, 100.0);
    put("ergas", ergas, 1.0);
    put("sam", sam, 1.0);
    put("fcc", fcc, 100.0);
    put("d_s", d_s, 100.0);
    put("d_lambda", d_lambda, 100.0);
    j["sam_unit"] = "degrees";
    j["missing"] = missing;
    return j;
  }
};

}  // namespace panfuse
