#pragma once

// Linear operators of the sensing models and of the ADMM splitting, each with
// its exact adjoint. Every spatial operator uses periodic boundaries, so all of
// them are circulant and diagonalised by the DFT.

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "panfuse/errors.hpp"
#include "panfuse/fft.hpp"
#include "panfuse/tensor.hpp"

namespace panfuse {

/// Small 2D kernel whose origin sits at (height/2, width/2).
struct Kernel {
  std::size_t width = 1;
  std::size_t height = 1;
  std::vector<double> weights{1.0};

  double operator()(std::size_t row, std::size_t col) const {
    return weights[row * width + col];
  }
  double sum() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }

  static Kernel delta() { return {}; }

  /// q x q moving average.
  static Kernel box(std::size_t q) {
    if (q == 0) throw ConfigError("Kernel::box: q must be >= 1");
    const double w = 1.0 / static_cast<double>(q * q);
    return {q, q, std::vector<double>(q * q, w)};
  }
};

/// Position kept by spatial decimation inside each q x q block.
struct DecimationOffset {
  std::size_t row = 0;
  std::size_t col = 0;
};

/// Spatial blur H_s, decimation D_s, spectral weights g and noise levels.
struct SensorModel {
  std::size_t q = 1;
  Kernel psf;
  std::vector<double> g;
  std::vector<double> sigma_x;
  double sigma_p = 0.0;
  DecimationOffset offset;

  std::size_t bands() const noexcept { return g.size(); }

  void validate() const {
    if (q < 1) throw ConfigError("SensorModel: q must be >= 1");
    if (offset.row >= q || offset.col >= q)
      throw ConfigError("SensorModel: decimation offset must lie inside the q x q block");
    if (psf.weights.size() != psf.width * psf.height || psf.weights.empty())
      throw ConfigError("SensorModel: psf weights do not match its extent");
    if (std::abs(psf.sum() - 1.0) > 1e-12)
      throw ConfigError("SensorModel: psf must have unit sum (got " +
                        std::to_string(psf.sum()) + ")");
    if (g.empty()) throw ConfigError("SensorModel: empty spectral weights");
    for (double w : g)
      if (!(w >= 0.0) || !std::isfinite(w))
        throw ConfigError("SensorModel: spectral weights must be finite and >= 0");
    if (sigma_x.size() != g.size())
      throw ConfigError("SensorModel: sigma_x needs one entry per band");
    for (double s : sigma_x)
      if (!(s >= 0.0)) throw ConfigError("SensorModel: sigma_x must be >= 0");
    if (!(sigma_p >= 0.0)) throw ConfigError("SensorModel: sigma_p must be >= 0");
  }

  /// Throws unless q divides both high-resolution dimensions.
  void check_grid(std::size_t width, std::size_t height) const {
    if (width % q != 0 || height % q != 0)
      throw ShapeError("SensorModel: q=" + std::to_string(q) + " does not divide " +
                       std::to_string(width) + "x" + std::to_string(height));
  }
};

// ---------------------------------------------------------------------------
// Gradient and its adjoint

inline VectorField gradient(const Plane& u) {
  const auto W = u.width(), H = u.height();
  if (u.size() == 0) throw ShapeError("gradient: empty plane");
  VectorField g(W, H);
  for (std::size_t i = 0; i < H; ++i) {
    const std::size_t ip = (i + 1) % H;
    for (std::size_t j = 0; j < W; ++j) {
      const std::size_t jp = (j + 1) % W;
      g.h(i, j) = u(i, jp) - u(i, j);
      g.v(i, j) = u(ip, j) - u(i, j);
    }
  }
  return g;
}

/// Exact adjoint of `gradient` (the negative backward-difference divergence).
inline Plane divergence(const VectorField& f) {
  if (!f.h.same_shape(f.v)) throw ShapeError("divergence: component shapes differ");
  const auto W = f.width(), H = f.height();
  Plane out(W, H);
  for (std::size_t i = 0; i < H; ++i) {
    const std::size_t im = (i + H - 1) % H;
    for (std::size_t j = 0; j < W; ++j) {
      const std::size_t jm = (j + W - 1) % W;
      out(i, j) = f.h(i, jm) - f.h(i, j) + f.v(im, j) - f.v(i, j);
    }
  }
  return out;
}

/// Unit field tangent to the level lines of p: (-dv p, dh p) / |grad p|.
/// Pixels whose gradient magnitude is at most eps_rel times the largest one get
/// a zero vector.
inline VectorField eta_field(const PanImage& p, double eps_rel = 1e-8) {
  if (!(eps_rel > 0.0)) throw ConfigError("eta_field: eps_rel must be > 0");
  const VectorField grad = gradient(p);
  Plane mag(p.width(), p.height());
  double max_mag = 0.0;
  for (std::size_t i = 0; i < mag.size(); ++i) {
    mag[i] = std::hypot(grad.h[i], grad.v[i]);
    max_mag = std::max(max_mag, mag[i]);
  }
  VectorField eta(p.width(), p.height());
  if (max_mag == 0.0) return eta;
  const double threshold = eps_rel * max_mag;
  for (std::size_t i = 0; i < mag.size(); ++i) {
    if (mag[i] > threshold) {
      eta.h[i] = -grad.v[i] / mag[i];
      eta.v[i] = grad.h[i] / mag[i];
    }
  }
  return eta;
}

// ---------------------------------------------------------------------------
// Spatial decimation D_s and nearest-neighbour upsampling

inline Plane spatial_downsample(const Plane& u, std::size_t q,
                                DecimationOffset offset = {}) {
  if (q == 0 || u.width() % q != 0 || u.height() % q != 0)
    throw ShapeError("spatial_downsample: q=" + std::to_string(q) +
                     " does not divide " + std::to_string(u.width()) + "x" +
                     std::to_string(u.height()));
  if (offset.row >= q || offset.col >= q)
    throw ShapeError("spatial_downsample: offset outside block");
  Plane out(u.width() / q, u.height() / q);
  for (std::size_t i = 0; i < out.height(); ++i)
    for (std::size_t j = 0; j < out.width(); ++j)
      out(i, j) = u(i * q + offset.row, j * q + offset.col);
  return out;
}

/// Zero-filling adjoint of spatial_downsample.
inline Plane spatial_downsample_adjoint(const Plane& x, std::size_t q,
                                        DecimationOffset offset = {}) {
  if (q == 0) throw ShapeError("spatial_downsample_adjoint: q must be >= 1");
  if (offset.row >= q || offset.col >= q)
    throw ShapeError("spatial_downsample_adjoint: offset outside block");
  Plane out(x.width() * q, x.height() * q);
  for (std::size_t i = 0; i < x.height(); ++i)
    for (std::size_t j = 0; j < x.width(); ++j)
      out(i * q + offset.row, j * q + offset.col) = x(i, j);
  return out;
}

/// Pixel replication by q in both directions.
inline Plane upsample_nearest(const Plane& x, std::size_t q) {
  if (q == 0) throw ShapeError("upsample_nearest: q must be >= 1");
  Plane out(x.width() * q, x.height() * q);
  for (std::size_t i = 0; i < out.height(); ++i)
    for (std::size_t j = 0; j < out.width(); ++j) out(i, j) = x(i / q, j / q);
  return out;
}

inline HyperCube upsample_nearest(const HyperCube& x, std::size_t q) {
  HyperCube out(x.width() * q, x.height() * q, x.bands());
  for (std::size_t l = 0; l < x.bands(); ++l)
    out.set_plane(l, upsample_nearest(x.plane_copy(l), q));
  return out;
}

// ---------------------------------------------------------------------------
// Spatial circular convolution H_s

/// Circular convolution of W x H planes with a fixed kernel, through the DFT.
class SpatialFilter {
 public:
  SpatialFilter(std::size_t width, std::size_t height, const Kernel& kernel)
      : width_(width), height_(height),
        fft_({static_cast<int>(height), static_cast<int>(width)}),
        transfer_(width * height) {
    if (width == 0 || height == 0) throw ShapeError("SpatialFilter: empty grid");
    auto buf = fft_.buffer();
    std::fill(buf.begin(), buf.end(), std::complex<double>{});
    const std::size_t cr = kernel.height / 2, cc = kernel.width / 2;
    for (std::size_t a = 0; a < kernel.height; ++a) {
      for (std::size_t b = 0; b < kernel.width; ++b) {
        const auto r = wrap(static_cast<long>(a) - static_cast<long>(cr), height);
        const auto c = wrap(static_cast<long>(b) - static_cast<long>(cc), width);
        buf[r * width + c] += kernel(a, b);
      }
    }
    fft_.forward();
    std::copy(buf.begin(), buf.begin() + transfer_.size(), transfer_.begin());
    if (kernel.width == 1 && kernel.height == 1) gain_ = kernel(0, 0);
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }

  /// DFT of the kernel embedded on the grid.
  std::span<const std::complex<double>> transfer() const noexcept { return transfer_; }

  void apply(std::span<const double> in, std::span<double> out) {
    filter(in, out, false);
  }
  void apply_adjoint(std::span<const double> in, std::span<double> out) {
    filter(in, out, true);
  }

  Plane apply(const Plane& u) {
    check(u);
    Plane out(width_, height_);
    apply(u.data(), out.data());
    return out;
  }
  Plane apply_adjoint(const Plane& u) {
    check(u);
    Plane out(width_, height_);
    apply_adjoint(u.data(), out.data());
    return out;
  }

 private:
  static std::size_t wrap(long i, std::size_t n) {
    const long m = static_cast<long>(n);
    return static_cast<std::size_t>(((i % m) + m) % m);
  }

  void check(const Plane& u) const {
    if (u.width() != width_ || u.height() != height_)
      throw ShapeError("SpatialFilter: plane shape does not match the filter grid");
  }

  void filter(std::span<const double> in, std::span<double> out, bool conjugate) {
    const std::size_t n = width_ * height_;
    if (in.size() != n || out.size() != n) throw ShapeError("SpatialFilter: length mismatch");
    if (gain_) {  // 1x1 kernel: exact scaling, no transform round-off
      for (std::size_t i = 0; i < n; ++i) out[i] = *gain_ * in[i];
      return;
    }
    auto buf = fft_.buffer();
    for (std::size_t i = 0; i < n; ++i) buf[i] = in[i];
    fft_.forward();
    for (std::size_t i = 0; i < n; ++i)
      buf[i] *= conjugate ? std::conj(transfer_[i]) : transfer_[i];
    fft_.backward();
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = buf[i].real() * scale;
  }

  std::size_t width_;
  std::size_t height_;
  fft::BatchedFft fft_;
  std::vector<std::complex<double>> transfer_;
  std::optional<double> gain_;
};

inline Plane spatial_convolve(const Plane& u, const Kernel& psf) {
  return SpatialFilter(u.width(), u.height(), psf).apply(u);
}
inline Plane spatial_convolve_adjoint(const Plane& u, const Kernel& psf) {
  return SpatialFilter(u.width(), u.height(), psf).apply_adjoint(u);
}

// ---------------------------------------------------------------------------
// Spectral operators: G = D_lambda H_lambda and the spectral circulant H_lambda

/// p(i) = sum_l g_l u_l(i).
inline PanImage pan_mix(const HyperCube& u, std::span<const double> g) {
  if (g.size() != u.bands())
    throw ShapeError("pan_mix: " + std::to_string(g.size()) + " weights for " +
                     std::to_string(u.bands()) + " bands");
  PanImage p(u.width(), u.height());
  for (std::size_t l = 0; l < u.bands(); ++l) {
    auto src = u.plane(l);
    for (std::size_t i = 0; i < p.size(); ++i) p[i] += g[l] * src[i];
  }
  return p;
}

inline HyperCube pan_mix_adjoint(const PanImage& p, std::span<const double> g) {
  HyperCube u(p.width(), p.height(), g.size());
  for (std::size_t l = 0; l < g.size(); ++l) {
    auto dst = u.plane(l);
    for (std::size_t i = 0; i < p.size(); ++i) dst[i] = g[l] * p[i];
  }
  return u;
}

/// Spectral circulant H_lambda: out_m = sum_l g_l u_{(m+l) mod L} at every
/// pixel, so band 0 of the output equals pan_mix. The adjoint is the circular
/// convolution out_m = sum_l g_l u_{(m-l) mod L}.
class SpectralFilter {
 public:
  SpectralFilter(std::size_t pixels, std::span<const double> g)
      : pixels_(pixels), bands_(g.size()),
        fft_({static_cast<int>(g.size())}, static_cast<int>(pixels),
             static_cast<int>(pixels), 1),
        transfer_(g.size()) {
    if (g.empty() || pixels == 0) throw ShapeError("SpectralFilter: empty input");
    // Equivalent convolution kernel k_j = g_{-j mod L}.
    fft::BatchedFft one({static_cast<int>(bands_)});
    auto buf = one.buffer();
    for (std::size_t j = 0; j < bands_; ++j) buf[j] = g[(bands_ - j) % bands_];
    one.forward();
    std::copy(buf.begin(), buf.begin() + bands_, transfer_.begin());
  }

  std::size_t bands() const noexcept { return bands_; }
  std::span<const std::complex<double>> transfer() const noexcept { return transfer_; }

  HyperCube apply(const HyperCube& u) { return filter(u, false); }
  HyperCube apply_adjoint(const HyperCube& u) { return filter(u, true); }

 private:
  HyperCube filter(const HyperCube& u, bool conjugate) {
    if (u.bands() != bands_ || u.pixels() != pixels_)
      throw ShapeError("SpectralFilter: cube shape mismatch");
    auto buf = fft_.buffer();
    auto in = u.data();
    for (std::size_t i = 0; i < in.size(); ++i) buf[i] = in[i];
    fft_.forward();
    for (std::size_t m = 0; m < bands_; ++m) {
      const auto t = conjugate ? std::conj(transfer_[m]) : transfer_[m];
      for (std::size_t i = 0; i < pixels_; ++i) buf[m * pixels_ + i] *= t;
    }
    fft_.backward();
    HyperCube out(u.width(), u.height(), bands_);
    auto o = out.data();
    const double scale = 1.0 / static_cast<double>(bands_);
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = buf[i].real() * scale;
    return out;
  }

  std::size_t pixels_;
  std::size_t bands_;
  fft::BatchedFft fft_;
  std::vector<std::complex<double>> transfer_;
  std::optional<double> gain_;
};

inline HyperCube spectral_convolve(const HyperCube& u, std::span<const double> g) {
  if (g.size() != u.bands()) throw ShapeError("spectral_convolve: length mismatch");
  return SpectralFilter(u.pixels(), g).apply(u);
}
inline HyperCube spectral_convolve_adjoint(const HyperCube& u, std::span<const double> g) {
  if (g.size() != u.bands()) throw ShapeError("spectral_convolve_adjoint: length mismatch");
  return SpectralFilter(u.pixels(), g).apply_adjoint(u);
}

// ---------------------------------------------------------------------------
// The stacked splitting operator M = [grad; grad; H_s; H_lambda]

/// Element of the range of M: one block per ADMM auxiliary variable.
struct SplitVector {
  std::vector<VectorField> tv;         // grad u_l, TV block
  std::vector<VectorField> levelline;  // grad u_l, level-line block
  HyperCube hx;                        // H_s u_l, fit-to-HX block
  HyperCube pan;                       // H_lambda u, fit-to-P block

  static SplitVector zeros(std::size_t width, std::size_t height, std::size_t bands) {
    SplitVector s;
    s.tv.assign(bands, VectorField(width, height));
    s.levelline.assign(bands, VectorField(width, height));
    s.hx = HyperCube(width, height, bands);
    s.pan = HyperCube(width, height, bands);
    return s;
  }

  std::size_t bands() const noexcept { return hx.bands(); }

  /// Every block flattened, in a fixed order.
  std::vector<std::span<double>> blocks() {
    std::vector<std::span<double>> out;
    for (auto& f : tv) { out.push_back(f.h.data()); out.push_back(f.v.data()); }
    for (auto& f : levelline) { out.push_back(f.h.data()); out.push_back(f.v.data()); }
    out.push_back(hx.data());
    out.push_back(pan.data());
    return out;
  }
  std::vector<std::span<const double>> blocks() const {
    std::vector<std::span<const double>> out;
    for (auto& f : tv) { out.push_back(f.h.data()); out.push_back(f.v.data()); }
    for (auto& f : levelline) { out.push_back(f.h.data()); out.push_back(f.v.data()); }
    out.push_back(hx.data());
    out.push_back(pan.data());
    return out;
  }

  bool same_shape(const SplitVector& o) const {
    const auto a = blocks();
    const auto b = o.blocks();
    if (a.size() != b.size()) return false;
    for (std::size_t k = 0; k < a.size(); ++k)
      if (a[k].size() != b[k].size()) return false;
    return true;
  }
};

inline double dot(const SplitVector& a, const SplitVector& b) {
  if (!a.same_shape(b)) throw ShapeError("dot: split vector shape mismatch");
  const auto x = a.blocks();
  const auto y = b.blocks();
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) s += dot(x[k], y[k]);
  return s;
}

inline double norm2(const SplitVector& a) { return std::sqrt(dot(a, a)); }

/// y += a * x
inline void add_scaled(SplitVector& y, double a, const SplitVector& x) {
  if (!x.same_shape(y)) throw ShapeError("add_scaled: split vector shape mismatch");
  auto dst = y.blocks();
  const auto src = x.blocks();
  for (std::size_t k = 0; k < dst.size(); ++k)
    for (std::size_t i = 0; i < dst[k].size(); ++i) dst[k][i] += a * src[k][i];
}

inline bool all_finite(const SplitVector& s) {
  for (auto b : s.blocks())
    if (!all_finite(b)) return false;
  return true;
}

/// M and its adjoint on a fixed W x H x L grid.
class SplittingOperator {
 public:
  SplittingOperator(std::size_t width, std::size_t height, const SensorModel& model)
      : width_(width), height_(height), bands_(model.bands()),
        spatial_(width, height, model.psf),
        spectral_(width * height, model.g) {}

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t bands() const noexcept { return bands_; }

  SpatialFilter& spatial() noexcept { return spatial_; }
  SpectralFilter& spectral() noexcept { return spectral_; }

  SplitVector apply(const HyperCube& u) {
    check(u);
    SplitVector y;
    y.tv.reserve(bands_);
    y.hx = HyperCube(width_, height_, bands_);
    for (std::size_t l = 0; l < bands_; ++l) {
      const Plane ul = u.plane_copy(l);
      y.tv.push_back(gradient(ul));
      spatial_.apply(ul.data(), y.hx.plane(l));
    }
    y.levelline = y.tv;
    y.pan = spectral_.apply(u);
    return y;
  }

  HyperCube apply_adjoint(const SplitVector& y) {
    if (y.tv.size() != bands_ || y.levelline.size() != bands_ ||
        y.hx.bands() != bands_ || y.hx.pixels() != width_ * height_ ||
        !y.hx.same_shape(y.pan))
      throw ShapeError("SplittingOperator::apply_adjoint: block shape mismatch");
    HyperCube out = spectral_.apply_adjoint(y.pan);
    std::vector<double> tmp(width_ * height_);
    for (std::size_t l = 0; l < bands_; ++l) {
      auto dst = out.plane(l);
      const Plane d1 = divergence(y.tv[l]);
      const Plane d2 = divergence(y.levelline[l]);
      spatial_.apply_adjoint(y.hx.plane(l), tmp);
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += d1[i] + d2[i] + tmp[i];
    }
    return out;
  }

 private:
  void check(const HyperCube& u) const {
    if (u.width() != width_ || u.height() != height_ || u.bands() != bands_)
      throw ShapeError("SplittingOperator: cube shape mismatch");
  }

  std::size_t width_;
  std::size_t height_;
  std::size_t bands_;
  SpatialFilter spatial_;
  SpectralFilter spectral_;
};

inline SplitVector apply_M(const HyperCube& u, const SensorModel& model) {
  return SplittingOperator(u.width(), u.height(), model).apply(u);
}
inline HyperCube apply_M_adjoint(const SplitVector& y, const SensorModel& model) {
  return SplittingOperator(y.hx.width(), y.hx.height(), model).apply_adjoint(y);
}

// ---------------------------------------------------------------------------
// Fourier symbol of M^T M

/// Per-frequency symbols of the blocks of M^T M on an L x H x W grid.
/// `denominator` is indexed like a band-sequential cube: [omega][xi_v][xi_h].
struct TransferSet {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t bands = 0;
  std::vector<double> gradient_h;   // |d_h(xi)|^2, H*W
  std::vector<double> gradient_v;   // |d_v(xi)|^2, H*W
  std::vector<double> psf;          // |h_s(xi)|^2, H*W
  std::vector<double> spectral;     // |g(omega)|^2, L
  std::vector<double> denominator;  // L*H*W
};

inline TransferSet build_transfer_set(const SensorModel& model, std::size_t width,
                                      std::size_t height) {
  const std::size_t n = width * height;
  const std::size_t L = model.bands();
  if (n == 0 || L == 0) throw ShapeError("build_transfer_set: empty grid");
  TransferSet t;
  t.width = width;
  t.height = height;
  t.bands = L;
  t.gradient_h.resize(n);
  t.gradient_v.resize(n);
  t.psf.resize(n);
  t.spectral.resize(L);

  // |exp(2 pi i k / n) - 1|^2 = 4 sin^2(pi k / n)
  auto diff_symbol = [](std::size_t k, std::size_t len) {
    const double s = std::sin(std::numbers::pi * static_cast<double>(k) /
                              static_cast<double>(len));
    return 4.0 * s * s;
  };
  SpatialFilter blur(width, height, model.psf);
  const auto hs = blur.transfer();
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      const std::size_t k = r * width + c;
      t.gradient_h[k] = diff_symbol(c, width);
      t.gradient_v[k] = diff_symbol(r, height);
      t.psf[k] = std::norm(hs[k]);
    }
  }
  SpectralFilter mix(1, model.g);
  const auto gs = mix.transfer();
  for (std::size_t m = 0; m < L; ++m) t.spectral[m] = std::norm(gs[m]);

  t.denominator.resize(L * n);
  for (std::size_t m = 0; m < L; ++m) {
    for (std::size_t k = 0; k < n; ++k) {
      const double d = 2.0 * (t.gradient_h[k] + t.gradient_v[k]) + t.psf[k] + t.spectral[m];
      if (!(d > 0.0) || !std::isfinite(d))
        throw NumericalError("build_transfer_set: non-positive symbol of M^T M at frequency (" +
                             std::to_string(m) + ", " + std::to_string(k) + ")");
      t.denominator[m * n + k] = d;
    }
  }
  return t;
}

/// Multiplies a cube by a real Fourier symbol (or its inverse) over the full
/// L x H x W DFT. Used to apply M^T M and its inverse.
class CubeFourierMultiplier {
 public:
  CubeFourierMultiplier(std::size_t width, std::size_t height, std::size_t bands)
      : width_(width), height_(height), bands_(bands),
        fft_({static_cast<int>(bands), static_cast<int>(height), static_cast<int>(width)}) {}

  /// Returns F^{-1}(symbol^{+1 or -1} . F(u)) and reports the largest imaginary
  /// residue relative to the largest real magnitude.
  HyperCube apply(const HyperCube& u, std::span<const double> symbol, bool invert,
                  double* imaginary_residue = nullptr) {
    if (u.width() != width_ || u.height() != height_ || u.bands() != bands_ ||
        symbol.size() != u.size())
      throw ShapeError("CubeFourierMultiplier: shape mismatch");
    auto buf = fft_.buffer();
    auto in = u.data();
    for (std::size_t i = 0; i < in.size(); ++i) buf[i] = in[i];
    fft_.forward();
    for (std::size_t i = 0; i < in.size(); ++i)
      buf[i] = invert ? buf[i] / symbol[i] : buf[i] * symbol[i];
    fft_.backward();
    HyperCube out(width_, height_, bands_);
    auto o = out.data();
    const double scale = 1.0 / static_cast<double>(in.size());
    double max_re = 0.0, max_im = 0.0;
    for (std::size_t i = 0; i < o.size(); ++i) {
      o[i] = buf[i].real() * scale;
      max_re = std::max(max_re, std::abs(o[i]));
      max_im = std::max(max_im, std::abs(buf[i].imag() * scale));
    }
    if (imaginary_residue) *imaginary_residue = max_re > 0.0 ? max_im / max_re : max_im;
    return out;
  }

 private:
  std::size_t width_;
  std::size_t height_;
  std::size_t bands_;
  fft::BatchedFft fft_;
};

/// M^T M u evaluated through the TransferSet.
inline HyperCube apply_normal_operator(const HyperCube& u, const TransferSet& t) {
  CubeFourierMultiplier mult(u.width(), u.height(), u.bands());
  return mult.apply(u, t.denominator, false);
}

}  // namespace panfuse
