#pragma once

// Thin RAII layer over FFTW3 complex transforms. Plans are built with
// FFTW_ESTIMATE so construction never touches the buffer contents.

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "panfuse/errors.hpp"

namespace panfuse::fft {

namespace detail {

// FFTW's planner is not reentrant.
inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct BufferDeleter {
  void operator()(fftw_complex* p) const noexcept { fftw_free(p); }
};
struct PlanDeleter {
  void operator()(fftw_plan_s* p) const noexcept {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(p);
  }
};

}  // namespace detail

/// In-place complex DFT over a batch of equally shaped arrays.
///
/// `dims` are the transform extents (row-major, slowest first). `howmany`,
/// `stride` and `dist` follow fftw_plan_many_dft: element k of batch b lives at
/// offset b*dist + k*stride in the buffer.
class BatchedFft {
 public:
  BatchedFft(std::vector<int> dims, int howmany = 1, int stride = 1, int dist = 0)
      : dims_(std::move(dims)) {
    if (dims_.empty()) throw ShapeError("BatchedFft: empty dims");
    std::size_t n = 1;
    for (int d : dims_) {
      if (d <= 0) throw ShapeError("BatchedFft: non-positive extent");
      n *= static_cast<std::size_t>(d);
    }
    transform_size_ = n;
    if (dist == 0) dist = static_cast<int>(n);
    // Span of the buffer touched by the batch layout.
    const std::size_t extent = static_cast<std::size_t>(howmany - 1) * dist +
                               (n - 1) * static_cast<std::size_t>(stride) + 1;
    size_ = extent;
    buffer_.reset(fftw_alloc_complex(size_));
    if (!buffer_) throw std::bad_alloc();

    std::lock_guard lock(detail::planner_mutex());
    const int rank = static_cast<int>(dims_.size());
    forward_.reset(fftw_plan_many_dft(rank, dims_.data(), howmany, buffer_.get(),
                                      nullptr, stride, dist, buffer_.get(), nullptr,
                                      stride, dist, FFTW_FORWARD, FFTW_ESTIMATE));
    backward_.reset(fftw_plan_many_dft(rank, dims_.data(), howmany, buffer_.get(),
                                       nullptr, stride, dist, buffer_.get(), nullptr,
                                       stride, dist, FFTW_BACKWARD, FFTW_ESTIMATE));
    if (!forward_ || !backward_) throw NumericalError("BatchedFft: planning failed");
  }

  BatchedFft(const BatchedFft&) = delete;
  BatchedFft& operator=(const BatchedFft&) = delete;
  BatchedFft(BatchedFft&&) noexcept = default;
  BatchedFft& operator=(BatchedFft&&) noexcept = default;

  std::span<std::complex<double>> buffer() noexcept {
    return {reinterpret_cast<std::complex<double>*>(buffer_.get()), size_};
  }

  void forward() noexcept { fftw_execute(forward_.get()); }
  /// Unnormalized inverse; divide by transform_size() to invert forward().
  void backward() noexcept { fftw_execute(backward_.get()); }

  std::size_t transform_size() const noexcept { return transform_size_; }

 private:
  std::vector<int> dims_;
  std::size_t transform_size_ = 0;
  std::size_t size_ = 0;
  std::unique_ptr<fftw_complex, detail::BufferDeleter> buffer_;
  std::unique_ptr<fftw_plan_s, detail::PlanDeleter> forward_;
  std::unique_ptr<fftw_plan_s, detail::PlanDeleter> backward_;
};

}  // namespace panfuse::fft
