#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ptycho/error.hpp"

namespace ptycho {

using cplx = std::complex<double>;

/// Dense row-major 2-D grid. Holds objects, probes, coverage maps and masks.
template <typename T>
class Grid2D {
 public:
  Grid2D() = default;
  Grid2D(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Grid2D(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    require(data_.size() == rows_ * cols_, ErrorCode::shape_mismatch,
            "grid data length " + std::to_string(data_.size()) + " != " +
                std::to_string(rows_) + "x" + std::to_string(cols_));
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }
  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }

  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  template <typename U>
  bool same_shape(const Grid2D<U>& other) const noexcept {
    return rows_ == other.rows() && cols_ == other.cols();
  }

  friend bool operator==(const Grid2D&, const Grid2D&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using ComplexField2D = Grid2D<cplx>;
using RealField2D = Grid2D<double>;
using Mask2D = Grid2D<std::uint8_t>;

/// Q equally shaped frames stored contiguously; data space of the measurement map.
template <typename T>
class FrameStack {
 public:
  FrameStack() = default;
  FrameStack(std::size_t frames, std::size_t rows, std::size_t cols, T fill = T{})
      : frames_(frames), rows_(rows), cols_(cols), data_(frames * rows * cols, fill) {}

  std::size_t frames() const noexcept { return frames_; }
  std::size_t frame_rows() const noexcept { return rows_; }
  std::size_t frame_cols() const noexcept { return cols_; }
  std::size_t frame_size() const noexcept { return rows_ * cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<T> frame(std::size_t q) noexcept {
    return std::span<T>(data_.data() + q * frame_size(), frame_size());
  }
  std::span<const T> frame(std::size_t q) const noexcept {
    return std::span<const T>(data_.data() + q * frame_size(), frame_size());
  }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }
  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }
  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }

  template <typename U>
  bool same_shape(const FrameStack<U>& other) const noexcept {
    return frames_ == other.frames() && rows_ == other.frame_rows() &&
           cols_ == other.frame_cols();
  }

  friend bool operator==(const FrameStack&, const FrameStack&) = default;

 private:
  std::size_t frames_ = 0;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using ComplexFrames = FrameStack<cplx>;
using AmplitudeFrames = FrameStack<double>;

/// Unit-modulus phase of z, with sgn(0) = 1.
inline cplx sgn(cplx z) noexcept {
  const double r = std::abs(z);
  return r == 0.0 ? cplx(1.0, 0.0) : z / r;
}

inline double norm2(std::span<const cplx> v) noexcept {
  double s = 0.0;
  for (const auto& z : v) s += std::norm(z);
  return std::sqrt(s);
}

inline double norm2(std::span<const double> v) noexcept {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

/// <a, b> = sum conj(a) b
inline cplx inner(std::span<const cplx> a, std::span<const cplx> b) noexcept {
  cplx s{};
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

/// ‖|y| − b‖₂
inline double amplitude_residual(std::span<const cplx> y, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = std::abs(y[i]) - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

inline bool all_finite(std::span<const cplx> v) noexcept {
  for (const auto& z : v)
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  return true;
}

inline AmplitudeFrames modulus(const ComplexFrames& frames) {
  AmplitudeFrames out(frames.frames(), frames.frame_rows(), frames.frame_cols());
  for (std::size_t i = 0; i < frames.size(); ++i) out[i] = std::abs(frames[i]);
  return out;
}

}  // namespace ptycho
