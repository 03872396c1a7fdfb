#pragma once

// Dense image containers. A HyperCube stores its samples band-sequential
// (all pixels of band 1, then band 2, ...), row-major within a band, which is
// the stacked-vector layout u = (u_1; ...; u_L).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "panfuse/errors.hpp"

namespace panfuse {

inline bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(),
                     [](double v) { return std::isfinite(v); });
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("dot: length mismatch");
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

/// Single-band W x H image, row-major.
class Plane {
 public:
  Plane() = default;
  Plane(std::size_t width, std::size_t height, double fill = 0.0)
      : width_(width), height_(height), data_(width * height, fill) {}
  Plane(std::size_t width, std::size_t height, std::vector<double> data)
      : width_(width), height_(height), data_(std::move(data)) {
    if (data_.size() != width_ * height_)
      throw ShapeError("Plane: data length " + std::to_string(data_.size()) +
                       " != width*height " + std::to_string(width_ * height_));
    if (!all_finite(data_)) throw DataError("Plane: non-finite sample");
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t row, std::size_t col) {
    return data_[row * width_ + col];
  }
  double operator()(std::size_t row, std::size_t col) const {
    return data_[row * width_ + col];
  }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  bool same_shape(const Plane& o) const noexcept {
    return width_ == o.width_ && height_ == o.height_;
  }

  friend bool operator==(const Plane&, const Plane&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<double> data_;
};

/// The panchromatic image p.
using PanImage = Plane;

/// Per-pixel 2-vectors: horizontal and vertical components.
struct VectorField {
  Plane h;
  Plane v;

  VectorField() = default;
  VectorField(std::size_t width, std::size_t height)
      : h(width, height), v(width, height) {}
  VectorField(Plane horizontal, Plane vertical)
      : h(std::move(horizontal)), v(std::move(vertical)) {
    if (!h.same_shape(v)) throw ShapeError("VectorField: component shapes differ");
  }

  std::size_t width() const noexcept { return h.width(); }
  std::size_t height() const noexcept { return h.height(); }
  std::size_t size() const noexcept { return h.size(); }

  bool same_shape(const VectorField& o) const noexcept { return h.same_shape(o.h); }

  friend bool operator==(const VectorField&, const VectorField&) = default;
};

/// L-band image on a W x H grid, band-sequential.
class HyperCube {
 public:
  HyperCube() = default;
  HyperCube(std::size_t width, std::size_t height, std::size_t bands,
            double fill = 0.0)
      : width_(width), height_(height), bands_(bands),
        data_(width * height * bands, fill) {}
  HyperCube(std::size_t width, std::size_t height, std::size_t bands,
            std::vector<double> data)
      : width_(width), height_(height), bands_(bands), data_(std::move(data)) {
    if (data_.size() != width_ * height_ * bands_)
      throw ShapeError("HyperCube: data length " + std::to_string(data_.size()) +
                       " != width*height*bands " +
                       std::to_string(width_ * height_ * bands_));
    if (!all_finite(data_)) throw DataError("HyperCube: non-finite sample");
  }

  static HyperCube from_planes(std::span<const Plane> planes) {
    if (planes.empty()) throw ShapeError("HyperCube::from_planes: no planes");
    const auto w = planes.front().width();
    const auto h = planes.front().height();
    HyperCube cube(w, h, planes.size());
    for (std::size_t k = 0; k < planes.size(); ++k) {
      if (planes[k].width() != w || planes[k].height() != h)
        throw ShapeError("HyperCube::from_planes: plane shapes differ");
      std::copy(planes[k].data().begin(), planes[k].data().end(),
                cube.plane(k).begin());
    }
    return cube;
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t bands() const noexcept { return bands_; }
  std::size_t pixels() const noexcept { return width_ * height_; }
  std::size_t size() const noexcept { return data_.size(); }

  /// Zero-based view of one band.
  std::span<double> plane(std::size_t k) {
    return std::span<double>(data_).subspan(k * pixels(), pixels());
  }
  std::span<const double> plane(std::size_t k) const {
    return std::span<const double>(data_).subspan(k * pixels(), pixels());
  }

  Plane plane_copy(std::size_t k) const {
    auto src = plane(k);
    Plane out(width_, height_);
    std::copy(src.begin(), src.end(), out.data().begin());
    return out;
  }
  void set_plane(std::size_t k, const Plane& p) {
    if (p.width() != width_ || p.height() != height_)
      throw ShapeError("HyperCube::set_plane: shape mismatch");
    std::copy(p.data().begin(), p.data().end(), plane(k).begin());
  }

  double& operator()(std::size_t band, std::size_t row, std::size_t col) {
    return data_[band * pixels() + row * width_ + col];
  }
  double operator()(std::size_t band, std::size_t row, std::size_t col) const {
    return data_[band * pixels() + row * width_ + col];
  }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool same_shape(const HyperCube& o) const noexcept {
    return width_ == o.width_ && height_ == o.height_ && bands_ == o.bands_;
  }

  friend bool operator==(const HyperCube&, const HyperCube&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::size_t bands_ = 0;
  std::vector<double> data_;
};

/// Band `l` of the cube, counting from 1.
inline Plane band(const HyperCube& cube, std::size_t l) {
  if (l < 1 || l > cube.bands())
    throw ShapeError("band: index " + std::to_string(l) + " outside [1, " +
                     std::to_string(cube.bands()) + "]");
  return cube.plane_copy(l - 1);
}

inline HyperCube axpy(double a, const HyperCube& x, const HyperCube& y) {
  if (!x.same_shape(y)) throw ShapeError("axpy: shape mismatch");
  HyperCube out = y;
  auto o = out.data();
  auto xs = x.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += a * xs[i];
  return out;
}

inline double dot(const HyperCube& a, const HyperCube& b) {
  if (!a.same_shape(b)) throw ShapeError("dot: shape mismatch");
  return dot(a.data(), b.data());
}
inline double dot(const Plane& a, const Plane& b) {
  if (!a.same_shape(b)) throw ShapeError("dot: shape mismatch");
  return dot(a.data(), b.data());
}
inline double dot(const VectorField& a, const VectorField& b) {
  return dot(a.h, b.h) + dot(a.v, b.v);
}

}  // namespace panfuse
