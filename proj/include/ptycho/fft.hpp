#pragma once

#include <cstddef>

#include "ptycho/field.hpp"

namespace ptycho {

/// In-place unitary 2-D DFT of a fixed shape, normalization 1/sqrt(rows*cols).
///
/// Plans are created once per shape with FFTW_ESTIMATE (deterministic planning) and
/// shared process-wide; execute calls are safe from many threads at once.
class Fft2 {
 public:
  Fft2(std::size_t rows, std::size_t cols);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  void forward(cplx* data) const;
  void inverse(cplx* data) const;

 private:
  std::size_t rows_;
  std::size_t cols_;
  double scale_;
  void* forward_plan_;
  void* inverse_plan_;
};

/// Zero-pad to pad_rows x pad_cols, then unitary forward DFT.
ComplexField2D dft2(const ComplexField2D& field, std::size_t pad_rows, std::size_t pad_cols);

inline ComplexField2D dft2(const ComplexField2D& field) {
  return dft2(field, field.rows(), field.cols());
}

/// Unitary inverse DFT, same shape as the input.
ComplexField2D idft2(const ComplexField2D& field);

}  // namespace ptycho
