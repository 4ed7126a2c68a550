#include "ptycho/metrics.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "ptycho/fft.hpp"

namespace ptycho {
namespace {

// S(k) = sum_r h(r) exp(+i 2pi (kx c / cols + ky r / rows)) on a kx x ky stencil.
class RampCorrelator {
 public:
  explicit RampCorrelator(const ComplexField2D& h) : h_(h) {}

  // out[i][j] = S(kx[j], ky[i])
  template <std::size_t K>
  void eval(const std::array<double, K>& kx, const std::array<double, K>& ky,
            std::array<std::array<cplx, K>, K>& out) const {
    const std::size_t rows = h_.rows(), cols = h_.cols();
    const double tau = 2.0 * std::numbers::pi;
    // Row sums for every kx, then weight by the row exponential.
    std::vector<cplx> ex(cols), ey(rows);
    std::vector<std::array<cplx, K>> rowsum(rows);
    for (std::size_t j = 0; j < K; ++j) {
      for (std::size_t c = 0; c < cols; ++c) ex[c] = std::polar(1.0, tau * kx[j] * c / cols);
      for (std::size_t r = 0; r < rows; ++r) {
        const cplx* row = h_.data() + r * cols;
        cplx s{};
        for (std::size_t c = 0; c < cols; ++c) s += row[c] * ex[c];
        rowsum[r][j] = s;
      }
    }
    for (std::size_t i = 0; i < K; ++i) {
      for (std::size_t r = 0; r < rows; ++r) ey[r] = std::polar(1.0, tau * ky[i] * r / rows);
      for (std::size_t j = 0; j < K; ++j) {
        cplx s{};
        for (std::size_t r = 0; r < rows; ++r) s += rowsum[r][j] * ey[r];
        out[i][j] = s;
      }
    }
  }

  cplx at(double kx, double ky) const {
    std::array<std::array<cplx, 1>, 1> o;
    eval<1>({kx}, {ky}, o);
    return o[0][0];
  }

 private:
  const ComplexField2D& h_;
};

double residual_norm(const ComplexField2D& f, const ComplexField2D& g, cplx alpha, double kx,
                     double ky) {
  const std::size_t rows = f.rows(), cols = f.cols();
  const double tau = 2.0 * std::numbers::pi;
  std::vector<cplx> ex(cols);
  for (std::size_t c = 0; c < cols; ++c) ex[c] = std::polar(1.0, -tau * kx * c / cols);
  double s = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const cplx ey = alpha * std::polar(1.0, -tau * ky * r / rows);
    for (std::size_t c = 0; c < cols; ++c) s += std::norm(f(r, c) - ey * ex[c] * g(r, c));
  }
  return std::sqrt(s);
}

// Integer argmax of |S(k)| via the backward FFT of h, as signed frequencies.
std::array<double, 2> integer_peak(const ComplexField2D& h) {
  ComplexField2D s = h;
  Fft2(h.rows(), h.cols()).inverse(s.data());
  std::size_t best = 0;
  for (std::size_t i = 1; i < s.size(); ++i)
    if (std::norm(s[i]) > std::norm(s[best])) best = i;
  auto signed_k = [](std::size_t k, std::size_t n) {
    return 2 * k > n ? static_cast<double>(k) - static_cast<double>(n) : static_cast<double>(k);
  };
  return {signed_k(best % h.cols(), h.cols()), signed_k(best / h.cols(), h.rows())};
}

// Maximize |S(k)|^2 by Newton steps on a 3x3 finite-difference stencil whose
// spacing shrinks when the centre is already best.
std::array<double, 2> refine_peak(const RampCorrelator& corr, std::array<double, 2> k) {
  double h = 0.5;
  for (int it = 0; it < 200 && h > 1e-6; ++it) {
    std::array<std::array<cplx, 3>, 3> s;
    corr.eval<3>({k[0] - h, k[0], k[0] + h}, {k[1] - h, k[1], k[1] + h}, s);
    double phi[3][3];
    int bi = 1, bj = 1;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        phi[i][j] = std::norm(s[i][j]);
        if (phi[i][j] > phi[bi][bj]) bi = i, bj = j;
      }
    const double gx = (phi[1][2] - phi[1][0]) / (2 * h);
    const double gy = (phi[2][1] - phi[0][1]) / (2 * h);
    const double hxx = (phi[1][2] - 2 * phi[1][1] + phi[1][0]) / (h * h);
    const double hyy = (phi[2][1] - 2 * phi[1][1] + phi[0][1]) / (h * h);
    const double hxy = (phi[2][2] - phi[2][0] - phi[0][2] + phi[0][0]) / (4 * h * h);
    const double det = hxx * hyy - hxy * hxy;
    if (hxx < 0 && det > 0) {
      double dx = -(hyy * gx - hxy * gy) / det;
      double dy = -(hxx * gy - hxy * gx) / det;
      const double size = std::max(std::abs(dx), std::abs(dy));
      if (size > h) {
        dx *= h / size;
        dy *= h / size;
      }
      const double trial = std::norm(corr.at(k[0] + dx, k[1] + dy));
      if (trial >= phi[1][1]) {
        k = {k[0] + dx, k[1] + dy};
        if (size < 0.25 * h) h *= 0.25;
        continue;
      }
    }
    if (bi == 1 && bj == 1) {
      h *= 0.5;
    } else {
      k = {k[0] + (bj - 1) * h, k[1] + (bi - 1) * h};
    }
  }
  return k;
}

}  // namespace

AmplitudeFrames poissonize(const AmplitudeFrames& b_clean, double photon_scale, std::uint64_t seed) {
  require(photon_scale > 0.0 && std::isfinite(photon_scale), ErrorCode::invalid_argument,
          "photon scale must be positive");
  std::mt19937_64 eng(seed);
  AmplitudeFrames out(b_clean.frames(), b_clean.frame_rows(), b_clean.frame_cols());
  for (std::size_t i = 0; i < b_clean.size(); ++i) {
    const double lambda = std::pow(photon_scale * b_clean[i], 2);
    if (lambda <= 0.0) continue;
    std::poisson_distribution<long long> pd(lambda);
    out[i] = std::sqrt(static_cast<double>(pd(eng))) / photon_scale;
  }
  return out;
}

double nsr(const AmplitudeFrames& b_noisy, const AmplitudeFrames& b_clean) {
  require(b_noisy.same_shape(b_clean), ErrorCode::shape_mismatch, "nsr: shape mismatch");
  const double den = norm2(b_clean.values());
  require(den > 0.0, ErrorCode::invalid_argument, "nsr: clean data has zero norm");
  double s = 0.0;
  for (std::size_t i = 0; i < b_clean.size(); ++i) s += std::pow(b_noisy[i] - b_clean[i], 2);
  return std::sqrt(s) / den;
}

double calibrate_photon_scale(const AmplitudeFrames& b_clean, double target, std::uint64_t seed,
                              double rel_tol) {
  require(target > 0.0 && target < 1.0, ErrorCode::invalid_argument,
          "target NSR must lie in (0, 1)");
  const double bnorm = norm2(b_clean.values());
  require(bnorm > 0.0, ErrorCode::invalid_argument, "calibration needs nonzero data");
  auto eval = [&](double s) { return nsr(poissonize(b_clean, s, seed), b_clean); };

  // Gaussian-limit estimate: each pixel's amplitude noise has std 1/(2s).
  double s0 = std::sqrt(static_cast<double>(b_clean.size())) / (2.0 * bnorm * target);
  double lo = s0, hi = s0;
  double nlo = eval(lo), nhi = nlo;
  for (int i = 0; i < 80 && nhi >= target; ++i) nhi = eval(hi *= 2.0);
  for (int i = 0; i < 80 && nlo <= target; ++i) nlo = eval(lo *= 0.5);
  require(nhi < target && nlo > target, ErrorCode::invalid_argument,
          "target NSR " + std::to_string(target) + " is unreachable for this data");
  double best = (std::abs(nlo - target) < std::abs(nhi - target)) ? lo : hi;
  double best_err = std::min(std::abs(nlo - target), std::abs(nhi - target));
  for (int i = 0; i < 100 && best_err > rel_tol * target; ++i) {
    const double mid = std::sqrt(lo * hi);
    const double nm = eval(mid);
    if (std::abs(nm - target) < best_err) best = mid, best_err = std::abs(nm - target);
    (nm > target ? lo : hi) = mid;
    if (hi / lo < 1.0 + 1e-12) break;
  }
  return best;
}

MetricReport relative_error(const ComplexField2D& f_true, const ComplexField2D& f_est,
                            bool discount_ramp) {
  require(f_true.same_shape(f_est) && !f_true.empty(), ErrorCode::shape_mismatch,
          "relative_error: fields must be non-empty and equally shaped");
  const double fn = norm2(f_true.values());
  require(fn > 0.0, ErrorCode::invalid_argument, "relative_error: truth has zero norm");
  const double gn2 = std::pow(norm2(f_est.values()), 2);

  MetricReport rep;
  if (gn2 == 0.0) {
    rep.re = rep.re2 = 1.0;
    rep.alpha_hat = 0.0;
    return rep;
  }
  ComplexField2D h(f_true.rows(), f_true.cols());
  for (std::size_t i = 0; i < h.size(); ++i) h[i] = f_true[i] * std::conj(f_est[i]);
  const RampCorrelator corr(h);

  const cplx a0 = corr.at(0.0, 0.0) / gn2;
  rep.re2 = residual_norm(f_true, f_est, a0, 0.0, 0.0) / fn;
  rep.re = rep.re2;
  rep.alpha_hat = a0;
  if (!discount_ramp) return rep;

  const auto k = refine_peak(corr, integer_peak(h));
  const cplx ak = corr.at(k[0], k[1]) / gn2;
  const double re = residual_norm(f_true, f_est, ak, k[0], k[1]) / fn;
  if (re < rep.re) {
    rep.re = re;
    rep.alpha_hat = ak;
    rep.k_hat = k;
  }
  return rep;
}

double relative_residual(const AmplitudeFrames& b, const ComplexFrames& y) {
  require(b.same_shape(y), ErrorCode::shape_mismatch, "relative_residual: shape mismatch");
  const double bn = norm2(b.values());
  require(bn > 0.0, ErrorCode::invalid_argument, "relative_residual: data has zero norm");
  return amplitude_residual(y.values(), b.values()) / bn;
}

double relative_residual(const AmplitudeFrames& b, const ObjectOperator& a, const ComplexField2D& f_est) {
  return relative_residual(b, a.apply(f_est));
}

}  // namespace ptycho
