#pragma once

// Closed-form proximal maps and ball projections used by the ADMM y-updates.

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <string>

#include "panfuse/errors.hpp"
#include "panfuse/operators.hpp"
#include "panfuse/tensor.hpp"

namespace panfuse {

using Vec2 = std::array<double, 2>;

/// argmin_y tau*|y| + 1/2 |y - z|^2 on R^2 (vector soft-threshold).
inline Vec2 prox_tv(Vec2 z, double tau) {
  const double n = std::hypot(z[0], z[1]);
  if (n <= tau || n == 0.0) return {0.0, 0.0};
  const double s = (n - tau) / n;
  return {z[0] * s, z[1] * s};
}

inline VectorField prox_tv(const VectorField& z, double tau) {
  if (!(tau >= 0.0)) throw ConfigError("prox_tv: tau must be >= 0");
  VectorField y(z.width(), z.height());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const Vec2 r = prox_tv(Vec2{z.h[i], z.v[i]}, tau);
    y.h[i] = r[0];
    y.v[i] = r[1];
  }
  return y;
}

/// argmin_y tau*|<y, eta>| + 1/2 |y - z|^2 on R^2. The component of z along
/// eta is soft-thresholded, the orthogonal part passes through; eta = 0 gives
/// the identity.
inline Vec2 prox_levelline(Vec2 z, Vec2 eta, double tau) {
  const double e2 = eta[0] * eta[0] + eta[1] * eta[1];
  if (e2 == 0.0) return z;
  const double c = (z[0] * eta[0] + z[1] * eta[1]) / e2;
  const double t = std::clamp(c, -tau, tau);
  return {z[0] - t * eta[0], z[1] - t * eta[1]};
}

inline VectorField prox_levelline(const VectorField& z, const VectorField& eta, double tau) {
  if (!(tau >= 0.0)) throw ConfigError("prox_levelline: tau must be >= 0");
  if (!z.same_shape(eta)) throw ShapeError("prox_levelline: eta shape mismatch");
  VectorField y(z.width(), z.height());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const Vec2 r = prox_levelline(Vec2{z.h[i], z.v[i]}, Vec2{eta.h[i], eta.v[i]}, tau);
    y.h[i] = r[0];
    y.v[i] = r[1];
  }
  return y;
}

// ---------------------------------------------------------------------------
// Ball projections {y : |S y - data| <= radius} for selectors with S S^T = I

/// A selector keeps a subset of coordinates of a block variable.
template <class S>
concept Selector = requires(const S s, const typename S::Block& b,
                            typename S::Block& mb, const typename S::Measurement& m) {
  { s.select(b) } -> std::convertible_to<typename S::Measurement>;
  s.subtract_adjoint(mb, m);  // b -= S^T m
};

/// D_s on one band: keeps pixel (offset) of every q x q block.
struct SpatialDecimation {
  using Block = Plane;
  using Measurement = Plane;
  std::size_t q = 1;
  DecimationOffset offset;

  Plane select(const Plane& y) const { return spatial_downsample(y, q, offset); }
  void subtract_adjoint(Plane& y, const Plane& m) const {
    if (m.width() * q != y.width() || m.height() * q != y.height())
      throw ShapeError("SpatialDecimation: shape mismatch");
    for (std::size_t i = 0; i < m.height(); ++i)
      for (std::size_t j = 0; j < m.width(); ++j)
        y(i * q + offset.row, j * q + offset.col) -= m(i, j);
  }
};

/// D_lambda: keeps spectral index 0 of a cube.
struct SpectralDecimation {
  using Block = HyperCube;
  using Measurement = Plane;

  Plane select(const HyperCube& y) const { return y.plane_copy(0); }
  void subtract_adjoint(HyperCube& y, const Plane& m) const {
    if (m.width() != y.width() || m.height() != y.height())
      throw ShapeError("SpectralDecimation: shape mismatch");
    auto dst = y.plane(0);
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] -= m[i];
  }
};

/// Identity selector on planes (plain Euclidean ball).
struct IdentitySelector {
  using Block = Plane;
  using Measurement = Plane;

  Plane select(const Plane& y) const { return y; }
  void subtract_adjoint(Plane& y, const Plane& m) const {
    if (!y.same_shape(m)) throw ShapeError("IdentitySelector: shape mismatch");
    for (std::size_t i = 0; i < y.size(); ++i) y[i] -= m[i];
  }
};

template <Selector S>
struct BallSpec {
  typename S::Measurement center;
  double radius = 0.0;
  S selector;
};

/// Euclidean distance between selector(y) and the ball center.
template <Selector S>
double ball_distance(const typename S::Block& y, const BallSpec<S>& spec) {
  const auto r = spec.selector.select(y);
  if (!r.same_shape(spec.center)) throw ShapeError("ball_distance: measurement shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double d = r[i] - spec.center[i];
    s += d * d;
  }
  return std::sqrt(s);
}

/// Exact Euclidean projection onto {y : |selector(y) - center| <= radius}.
/// Coordinates outside the selector's range are returned untouched.
template <Selector S>
typename S::Block project_ball(const typename S::Block& z, const BallSpec<S>& spec) {
  if (!(spec.radius >= 0.0))
    throw ConfigError("project_ball: radius must be >= 0 (got " + std::to_string(spec.radius) + ")");
  auto r = spec.selector.select(z);
  if (!r.same_shape(spec.center)) throw ShapeError("project_ball: measurement shape mismatch");
  double n2 = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    r[i] -= spec.center[i];
    n2 += r[i] * r[i];
  }
  const double n = std::sqrt(n2);
  if (n <= spec.radius) return z;
  const double shrink = 1.0 - spec.radius / n;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] *= shrink;
  auto y = z;
  spec.selector.subtract_adjoint(y, r);
  return y;
}

}  // namespace panfuse
