#include "ptycho/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>
#include <vector>

namespace ptycho {
namespace {

struct PlanPair {
  fftw_plan forward;
  fftw_plan inverse;
};

// FFTW's planner is not re-entrant; everything that touches it goes through here.
PlanPair plans_for(std::size_t rows, std::size_t cols) {
  static std::mutex mutex;
  static std::map<std::pair<std::size_t, std::size_t>, PlanPair> cache;
  std::lock_guard lock(mutex);
  const auto key = std::make_pair(rows, cols);
  if (auto it = cache.find(key); it != cache.end()) return it->second;

  std::vector<cplx> scratch(rows * cols);
  auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  PlanPair p{
      fftw_plan_dft_2d(static_cast<int>(rows), static_cast<int>(cols), buf, buf, FFTW_FORWARD,
                       flags),
      fftw_plan_dft_2d(static_cast<int>(rows), static_cast<int>(cols), buf, buf, FFTW_BACKWARD,
                       flags),
  };
  require(p.forward && p.inverse, ErrorCode::numerical, "FFTW planning failed");
  cache.emplace(key, p);
  return p;
}

}  // namespace

Fft2::Fft2(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), scale_(1.0 / std::sqrt(static_cast<double>(rows * cols))) {
  require(rows > 0 && cols > 0, ErrorCode::invalid_argument, "empty transform shape");
  const auto p = plans_for(rows, cols);
  forward_plan_ = p.forward;
  inverse_plan_ = p.inverse;
}

void Fft2::forward(cplx* data) const {
  auto* buf = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(static_cast<fftw_plan>(forward_plan_), buf, buf);
  for (std::size_t i = 0; i < rows_ * cols_; ++i) data[i] *= scale_;
}

void Fft2::inverse(cplx* data) const {
  auto* buf = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(static_cast<fftw_plan>(inverse_plan_), buf, buf);
  for (std::size_t i = 0; i < rows_ * cols_; ++i) data[i] *= scale_;
}

ComplexField2D dft2(const ComplexField2D& field, std::size_t pad_rows, std::size_t pad_cols) {
  require(pad_rows >= field.rows() && pad_cols >= field.cols(), ErrorCode::invalid_argument,
          "dft2: padding " + std::to_string(pad_rows) + "x" + std::to_string(pad_cols) +
              " smaller than field " + std::to_string(field.rows()) + "x" +
              std::to_string(field.cols()));
  ComplexField2D out(pad_rows, pad_cols);
  for (std::size_t r = 0; r < field.rows(); ++r)
    for (std::size_t c = 0; c < field.cols(); ++c) out(r, c) = field(r, c);
  Fft2(pad_rows, pad_cols).forward(out.data());
  return out;
}

ComplexField2D idft2(const ComplexField2D& field) {
  ComplexField2D out = field;
  Fft2(field.rows(), field.cols()).inverse(out.data());
  return out;
}

}  // namespace ptycho
