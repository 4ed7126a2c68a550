#pragma once

#include <array>
#include <cstdint>
#include <limits>

#include "ptycho/field.hpp"
#include "ptycho/forward_model.hpp"

namespace ptycho {

// Counts N ~ Poisson((s b)^2) per pixel, returned as sqrt(N) / s.
AmplitudeFrames poissonize(const AmplitudeFrames& b_clean, double photon_scale, std::uint64_t seed);

// ||b_noisy - b_clean|| / ||b_clean||
double nsr(const AmplitudeFrames& b_noisy, const AmplitudeFrames& b_clean);

// Photon scale whose poissonized data (with this seed) has the target NSR.
// Bracketing bisection in log(s); throws if the target cannot be reached.
double calibrate_photon_scale(const AmplitudeFrames& b_clean, double target_nsr, std::uint64_t seed,
                              double rel_tol = 2e-3);

struct MetricReport {
  double re = 0.0;   // modulo scale, global phase and linear phase ramp
  double re2 = 0.0;  // modulo scale and global phase only
  double rr = std::numeric_limits<double>::quiet_NaN();
  cplx alpha_hat{1.0, 0.0};
  std::array<double, 2> k_hat{0.0, 0.0};  // (kx, ky): columns, rows
};

// min over alpha (and k when discount_ramp) of
// ||f - alpha exp(-i 2pi k.r / n) f_est|| / ||f||, on equally shaped fields.
MetricReport relative_error(const ComplexField2D& f_true, const ComplexField2D& f_est,
                            bool discount_ramp = true);

// ||b - |A f||| / ||b||
double relative_residual(const AmplitudeFrames& b, const ObjectOperator& a, const ComplexField2D& f_est);

// ||b - |y||| / ||b||
double relative_residual(const AmplitudeFrames& b, const ComplexFrames& y);

}  // namespace ptycho
