#pragma once

// Test-only oracles. Nothing here calls the FFT paths it is used to check:
// convolutions are direct sums and M is assembled entry by entry.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "panfuse/panfuse.hpp"

namespace panfuse::testing {

using Rng = std::mt19937_64;

inline Plane random_plane(Rng& rng, std::size_t w, std::size_t h, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Plane p(w, h);
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = d(rng);
  return p;
}

inline HyperCube random_cube(Rng& rng, std::size_t w, std::size_t h, std::size_t L,
                             double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  HyperCube c(w, h, L);
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = d(rng);
  return c;
}

inline VectorField random_field(Rng& rng, std::size_t w, std::size_t h) {
  return VectorField(random_plane(rng, w, h), random_plane(rng, w, h));
}

inline Kernel random_psf(Rng& rng, std::size_t kw, std::size_t kh) {
  std::uniform_real_distribution<double> d(0.05, 1.0);
  Kernel k{kw, kh, std::vector<double>(kw * kh)};
  double s = 0.0;
  for (double& v : k.weights) s += (v = d(rng));
  for (double& v : k.weights) v /= s;
  return k;
}

inline std::vector<double> random_weights(Rng& rng, std::size_t L) {
  std::uniform_real_distribution<double> d(0.0, 1.0);
  std::vector<double> g(L);
  for (double& v : g) v = d(rng);
  return g;
}

inline SensorModel random_model(Rng& rng, std::size_t L, std::size_t q = 1) {
  std::uniform_int_distribution<std::size_t> ks(1, 3);
  SensorModel m;
  m.q = q;
  m.psf = random_psf(rng, ks(rng), ks(rng));
  m.g = random_weights(rng, L);
  m.sigma_x.assign(L, 0.0);
  return m;
}

inline SplitVector random_split(Rng& rng, std::size_t w, std::size_t h, std::size_t L) {
  SplitVector s = SplitVector::zeros(w, h, L);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (auto b : s.blocks())
    for (double& v : b) v = d(rng);
  return s;
}

inline Eigen::VectorXd flatten(const SplitVector& s) {
  std::vector<double> out;
  for (auto b : s.blocks()) out.insert(out.end(), b.begin(), b.end());
  return Eigen::Map<Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size()));
}

inline Eigen::VectorXd flatten(const HyperCube& c) {
  return Eigen::Map<const Eigen::VectorXd>(c.data().data(), static_cast<Eigen::Index>(c.size()));
}

inline HyperCube unflatten(const Eigen::VectorXd& v, std::size_t w, std::size_t h, std::size_t L) {
  return HyperCube(w, h, L, std::vector<double>(v.data(), v.data() + v.size()));
}

inline SplitVector unflatten_split(const Eigen::VectorXd& v, std::size_t w, std::size_t h, std::size_t L) {
  SplitVector s = SplitVector::zeros(w, h, L);
  Eigen::Index k = 0;
  for (auto b : s.blocks())
    for (double& x : b) x = v[k++];
  return s;
}

inline std::size_t wrap(long i, std::size_t n) {
  const long m = static_cast<long>(n);
  return static_cast<std::size_t>(((i % m) + m) % m);
}

/// Direct-sum circular convolution with kernel origin at (kh/2, kw/2).
inline Plane naive_convolve(const Plane& u, const Kernel& k) {
  Plane out(u.width(), u.height());
  const long cr = static_cast<long>(k.height / 2), cc = static_cast<long>(k.width / 2);
  for (std::size_t i = 0; i < u.height(); ++i)
    for (std::size_t j = 0; j < u.width(); ++j) {
      double s = 0.0;
      for (std::size_t a = 0; a < k.height; ++a)
        for (std::size_t b = 0; b < k.width; ++b)
          s += k(a, b) * u(wrap(static_cast<long>(i) - (static_cast<long>(a) - cr), u.height()),
                           wrap(static_cast<long>(j) - (static_cast<long>(b) - cc), u.width()));
      out(i, j) = s;
    }
  return out;
}

/// out_m = sum_l g_l u_{(m+l) mod L}, per pixel, by direct summation.
inline HyperCube naive_spectral(const HyperCube& u, const std::vector<double>& g) {
  const std::size_t L = u.bands(), n = u.pixels();
  HyperCube out(u.width(), u.height(), L);
  for (std::size_t m = 0; m < L; ++m)
    for (std::size_t l = 0; l < L; ++l)
      for (std::size_t i = 0; i < n; ++i) out[m * n + i] += g[l] * u[((m + l) % L) * n + i];
  return out;
}

/// Dense matrices built from index arithmetic.
struct DenseOperators {
  Eigen::MatrixXd dh, dv;     // N x N forward differences
  Eigen::MatrixXd hs;         // N x N circular blur
  Eigen::MatrixXd hl;         // L x L spectral circulant
  Eigen::MatrixXd M;          // (6 L N) x (L N), rows ordered like SplitVector::blocks()
};

inline DenseOperators dense_operators(std::size_t W, std::size_t H, const SensorModel& m) {
  const std::size_t N = W * H, L = m.bands();
  DenseOperators d;
  d.dh = Eigen::MatrixXd::Zero(N, N);
  d.dv = Eigen::MatrixXd::Zero(N, N);
  d.hs = Eigen::MatrixXd::Zero(N, N);
  d.hl = Eigen::MatrixXd::Zero(L, L);
  for (std::size_t i = 0; i < H; ++i)
    for (std::size_t j = 0; j < W; ++j) {
      const std::size_t r = i * W + j;
      d.dh(r, r) -= 1.0;
      d.dh(r, i * W + (j + 1) % W) += 1.0;
      d.dv(r, r) -= 1.0;
      d.dv(r, ((i + 1) % H) * W + j) += 1.0;
      const long cr = static_cast<long>(m.psf.height / 2), cc = static_cast<long>(m.psf.width / 2);
      for (std::size_t a = 0; a < m.psf.height; ++a)
        for (std::size_t b = 0; b < m.psf.width; ++b) {
          const std::size_t si = wrap(static_cast<long>(i) - (static_cast<long>(a) - cr), H);
          const std::size_t sj = wrap(static_cast<long>(j) - (static_cast<long>(b) - cc), W);
          d.hs(r, si * W + sj) += m.psf(a, b);
        }
    }
  for (std::size_t mm = 0; mm < L; ++mm)
    for (std::size_t l = 0; l < L; ++l) d.hl(mm, (mm + l) % L) += m.g[l];

  d.M = Eigen::MatrixXd::Zero(6 * L * N, L * N);
  std::size_t row = 0;
  for (int rep = 0; rep < 2; ++rep)
    for (std::size_t l = 0; l < L; ++l) {
      d.M.block(row, l * N, N, N) = d.dh;
      row += N;
      d.M.block(row, l * N, N, N) = d.dv;
      row += N;
    }
  for (std::size_t l = 0; l < L; ++l) d.M.block(row + l * N, l * N, N, N) = d.hs;
  row += L * N;
  for (std::size_t mm = 0; mm < L; ++mm)
    for (std::size_t l = 0; l < L; ++l)
      if (d.hl(mm, l) != 0.0)
        d.M.block(row + mm * N, l * N, N, N) += d.hl(mm, l) * Eigen::MatrixXd::Identity(N, N);
  return d;
}

/// Minimises a convex function on R^2. A 41 x 41 grid over the square of
/// half-width `half_width` picks the start cell, then nested golden-section
/// search refines inside it. Golden section only needs unimodality, so kinks
/// in any direction are fine, and min over y1 of a convex f is convex in y0.
inline double golden_min(const std::function<double(double)>& f, double lo, double hi,
                         double* arg = nullptr) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  // Run to round-off: at a kink an inner position error costs linearly in f.
  for (int it = 0; it < 200 && b - a > 4e-16 * std::max(1.0, std::abs(a) + std::abs(b)); ++it) {
    if (fc <= fd) {
      b = d, d = c, fd = fc;
      c = b - r * (b - a), fc = f(c);
    } else {
      a = c, c = d, fc = fd;
      d = a + r * (b - a), fd = f(d);
    }
  }
  const double x = 0.5 * (a + b);
  if (arg) *arg = x;
  return f(x);
}

inline std::array<double, 2> brute_force_min2(const std::function<double(double, double)>& f,
                                              std::array<double, 2> start, double half_width) {
  const double h = half_width / 20.0;
  std::array<double, 2> best = start;
  double fbest = f(best[0], best[1]);
  for (int a = -20; a <= 20; ++a)
    for (int b = -20; b <= 20; ++b) {
      const double y0 = start[0] + a * h, y1 = start[1] + b * h;
      const double v = f(y0, y1);
      if (v < fbest) fbest = v, best = {y0, y1};
    }
  // The grid minimiser of a convex function lies within one cell of the
  // true minimiser's cell; search two cells either way.
  const auto inner = [&](double y0, double* y1) {
    return golden_min([&](double t) { return f(y0, t); }, start[1] - half_width,
                      start[1] + half_width, y1);
  };
  double y0 = 0.0, y1 = 0.0;
  golden_min([&](double t) { return inner(t, nullptr); }, best[0] - 2 * h, best[0] + 2 * h, &y0);
  inner(y0, &y1);
  return {y0, y1};
}

inline double rel_diff(double a, double b, double scale) {
  return std::abs(a - b) / std::max(scale, 1e-300);
}

}  // namespace panfuse::testing
