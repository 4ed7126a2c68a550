#include <cmath>
#include <numbers>

#include "doctest.h"
#include "oracles.hpp"
#include "ptycho/metrics.hpp"
#include "ptycho/object.hpp"
#include "ptycho/probe.hpp"

using namespace ptycho;

namespace {

ComplexField2D ramp(const ComplexField2D& f, double kx, double ky, cplx alpha = 1.0) {
  ComplexField2D out = f;
  const double n = static_cast<double>(f.rows());
  for (std::size_t r = 0; r < f.rows(); ++r)
    for (std::size_t c = 0; c < f.cols(); ++c)
      out(r, c) = alpha * f(r, c) * std::polar(1.0, 2.0 * std::numbers::pi * (kx * c + ky * r) / n);
  return out;
}

}  // namespace

TEST_CASE("poissonize: zeros stay zero, large photon counts approach the clean data") {
  AmplitudeFrames b(1, 64, 64, 1.0);
  b[5] = 0.0;
  auto noisy = poissonize(b, 1e4, 3);
  CHECK(noisy[5] == 0.0);
  CHECK(nsr(noisy, b) < 1e-3);
  CHECK(poissonize(b, 1e4, 3) == noisy);
  CHECK_FALSE(poissonize(b, 1e4, 4) == noisy);
  CHECK_THROWS_AS(poissonize(b, 0.0, 1), Error);
}

TEST_CASE("poissonize counts have mean and variance lambda") {
  AmplitudeFrames b(1, 1, 100000, 10.0);  // lambda = (1 * 10)^2
  auto noisy = poissonize(b, 1.0, 9);
  double mean = 0.0, var = 0.0;
  for (std::size_t i = 0; i < noisy.size(); ++i) mean += noisy[i] * noisy[i];
  mean /= noisy.size();
  for (std::size_t i = 0; i < noisy.size(); ++i) var += std::pow(noisy[i] * noisy[i] - mean, 2);
  var /= noisy.size() - 1;
  CHECK(std::abs(mean - 100.0) < 2.0);
  CHECK(std::abs(var - 100.0) < 2.0);
  for (std::size_t i = 0; i < 100; ++i) CHECK(std::abs(noisy[i] * noisy[i] - std::round(noisy[i] * noisy[i])) < 1e-9);
}

TEST_CASE("nsr examples") {
  AmplitudeFrames b(2, 3, 3, 2.0), c = b;
  CHECK(nsr(b, b) == 0.0);
  for (std::size_t i = 0; i < c.size(); ++i) c[i] *= 1.1;
  CHECK(std::abs(nsr(c, b) - 0.1) < 1e-14);
  CHECK_THROWS_AS(nsr(AmplitudeFrames(1, 3, 3), b), Error);
}

TEST_CASE("calibrated photon scale reproduces the target NSR") {
  Rng rng(1);
  AmplitudeFrames b(8, 16, 16);
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = 5.0 * rng.uniform01();
  for (double target : {0.02, 0.05, 0.2}) {
    const double s = calibrate_photon_scale(b, target, 77);
    CHECK(std::abs(nsr(poissonize(b, s, 77), b) - target) < 0.01 * std::max(1.0, target / 0.05));
  }
  CHECK_THROWS_AS(calibrate_photon_scale(b, 0.0, 1), Error);
  CHECK_THROWS_AS(calibrate_photon_scale(b, 1.5, 1), Error);
}

TEST_CASE("RE and RE2 examples: identity, scaling, integer ramps") {
  auto f = make_cib(synthetic_cib_image(32, 0), synthetic_cib_image(32, 1)).field;
  auto same = relative_error(f, f);
  CHECK(same.re < 1e-12);
  CHECK(same.re2 < 1e-12);
  CHECK(std::abs(same.alpha_hat - cplx(1.0, 0.0)) < 1e-12);
  CHECK(same.k_hat[0] == 0.0);
  CHECK(same.k_hat[1] == 0.0);

  const cplx alpha = std::polar(2.0, std::numbers::pi / 3);
  auto scaled = relative_error(f, ramp(f, 0, 0, 1.0 / alpha));
  CHECK(scaled.re2 < 1e-12);
  CHECK(std::abs(scaled.alpha_hat - alpha) < 1e-10);

  auto r = relative_error(f, ramp(f, 1, 2));
  CHECK(r.re < 1e-4);
  CHECK(r.re2 > 0.1);
  CHECK(std::abs(r.k_hat[0] - 1.0) < 1e-3);
  CHECK(std::abs(r.k_hat[1] - 2.0) < 1e-3);
}

TEST_CASE("composed ambiguities are discounted; RE <= RE2 on random pairs") {
  Rng rng(21);
  for (int i = 0; i < 10; ++i) {
    auto f = oracle::random_field(24, 24, rng);
    const double kx = static_cast<double>(rng.uniform_int(-3, 3)), ky = static_cast<double>(rng.uniform_int(-3, 3));
    const cplx a = std::polar(rng.uniform(0.2, 3.0), rng.uniform(-3.0, 3.0));
    auto rep = relative_error(f, ramp(f, kx, ky, a));
    CHECK(rep.re < 1e-4);
  }
  for (int i = 0; i < 100; ++i) {
    auto f = oracle::random_field(12, 12, rng);
    auto g = oracle::random_field(12, 12, rng);
    if (i % 2) g = ramp(f, 1, -1, cplx(0.5, 0.2));
    for (std::size_t j = 0; j < g.size(); j += 7) g[j] += cplx(rng.normal(), rng.normal()) * 0.1;
    auto rep = relative_error(f, g);
    CHECK(rep.re <= rep.re2 + 1e-12);
  }
  CHECK_THROWS_AS(relative_error(ComplexField2D(3, 3, 1.0), ComplexField2D(3, 4)), Error);
  CHECK_THROWS_AS(relative_error(ComplexField2D(3, 3), ComplexField2D(3, 3)), Error);
}

TEST_CASE("relative residual: exact solution, zero estimate, dense evaluation") {
  auto plan = make_plain_raster(2, 2, 3);
  BoundaryCondition bc;
  auto grid = reconstruction_grid(plan, 3, 6, bc);
  ForwardGeometry geom(plan, 3, grid, 2);
  Rng rng(6);
  auto mu = oracle::random_field(3, 3, rng);
  auto f = oracle::random_field(6, 6, rng);
  ObjectOperator a(geom, mu);
  auto b = measure(mu, f, geom);
  CHECK(relative_residual(b, a, f) < 1e-14);
  CHECK(std::abs(relative_residual(b, a, ComplexField2D(6, 6)) - 1.0) < 1e-15);

  auto g = f;
  for (auto& z : g) z += 0.05 * cplx(rng.normal(), rng.normal());
  const auto dense = oracle::dense_object_operator(plan, mu, 6, 2);
  const Eigen::VectorXcd y = dense * oracle::flatten(g);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    num += std::pow(b[i] - std::abs(y(static_cast<Eigen::Index>(i))), 2);
    den += b[i] * b[i];
  }
  CHECK(std::abs(relative_residual(b, a, g) - std::sqrt(num / den)) < 1e-12);
}
