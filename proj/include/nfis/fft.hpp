#pragma once

// Thin RAII wrapper over FFTW complex transforms of rank 2 or 3.

#include <complex>
#include <mutex>
#include <vector>

#include <fftw3.h>

#include "nfis/common.hpp"

namespace nfis {

namespace detail {
inline std::mutex& fftw_plan_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

/// In-place forward (exp(-i...)) and backward (exp(+i...)) unnormalized
/// transforms on a row-major array of the given shape.
class FftPlan {
 public:
  explicit FftPlan(std::vector<int> shape) : shape_(std::move(shape)) {
    std::size_t total = 1;
    for (int s : shape_) total *= static_cast<std::size_t>(s);
    buf_ = fftw_alloc_complex(total);
    size_ = total;
    std::lock_guard<std::mutex> lock(detail::fftw_plan_mutex());
    fwd_ = fftw_plan_dft(static_cast<int>(shape_.size()), shape_.data(), buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    bwd_ = fftw_plan_dft(static_cast<int>(shape_.size()), shape_.data(), buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  }
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;
  ~FftPlan() {
    std::lock_guard<std::mutex> lock(detail::fftw_plan_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
    fftw_free(buf_);
  }

  std::size_t size() const { return size_; }
  const std::vector<int>& shape() const { return shape_; }

  void forward(std::vector<Complex>& data) { run(fwd_, data); }
  void backward(std::vector<Complex>& data) { run(bwd_, data); }

 private:
  void run(fftw_plan plan, std::vector<Complex>& data) {
    require(data.size() == size_, "FftPlan: size mismatch");
    auto* raw = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plan, raw, raw);
  }

  std::vector<int> shape_;
  std::size_t size_ = 0;
  fftw_complex* buf_ = nullptr;
  fftw_plan fwd_ = nullptr;
  fftw_plan bwd_ = nullptr;
};

}  // namespace nfis
