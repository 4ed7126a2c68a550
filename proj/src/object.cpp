#include "ptycho/object.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ptycho/random.hpp"

namespace ptycho {
namespace {

// Toft's modified Shepp-Logan table: value, semi-axes, centre, rotation.
constexpr Ellipse kSheppLogan[] = {
    {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},
    {-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0},
    {-0.2, 0.1100, 0.3100, 0.22, 0.0, -18.0},
    {-0.2, 0.1600, 0.4100, -0.22, 0.0, 18.0},
    {0.1, 0.2100, 0.2500, 0.0, 0.35, 0.0},
    {0.1, 0.0460, 0.0460, 0.0, 0.1, 0.0},
    {0.1, 0.0460, 0.0460, 0.0, -0.1, 0.0},
    {0.1, 0.0460, 0.0230, -0.08, -0.605, 0.0},
    {0.1, 0.0230, 0.0230, 0.0, -0.606, 0.0},
    {0.1, 0.0230, 0.0460, 0.06, -0.605, 0.0},
};

double to_byte(double t) { return std::round(255.0 * std::clamp(t, 0.0, 1.0)); }

}  // namespace

const Ellipse* shepp_logan_table(std::size_t& count) {
  count = std::size(kSheppLogan);
  return kSheppLogan;
}

RealField2D shepp_logan(int n) {
  require(n >= 1, ErrorCode::invalid_argument, "phantom size must be positive");
  const auto un = static_cast<std::size_t>(n);
  RealField2D img(un, un);
  for (const auto& e : kSheppLogan) {
    const double th = e.phi_deg * std::numbers::pi / 180.0;
    const double ct = std::cos(th), st = std::sin(th);
    for (std::size_t r = 0; r < un; ++r) {
      const double y = 1.0 - (2.0 * r + 1.0) / n;
      for (std::size_t c = 0; c < un; ++c) {
        const double x = (2.0 * c + 1.0) / n - 1.0;
        const double dx = x - e.x0, dy = y - e.y0;
        const double xr = dx * ct + dy * st;
        const double yr = -dx * st + dy * ct;
        if ((xr * xr) / (e.a * e.a) + (yr * yr) / (e.b * e.b) <= 1.0) img(r, c) += e.value;
      }
    }
  }
  for (auto& v : img) v = std::clamp(v, 0.0, 1.0);
  return img;
}

TestObject make_cib(const RealField2D& image_a, const RealField2D& image_b) {
  require(image_a.same_shape(image_b) && !image_a.empty(), ErrorCode::shape_mismatch,
          "CiB component images must be non-empty and equally shaped");
  TestObject obj{ComplexField2D(image_a.rows(), image_a.cols()), "CiB", 0.0};
  for (std::size_t i = 0; i < image_a.size(); ++i) {
    require(image_a[i] >= 0.0 && image_b[i] >= 0.0, ErrorCode::invalid_argument,
            "CiB component images must be non-negative");
    obj.field[i] = {image_a[i], image_b[i]};
  }
  obj.phase_range = phase_extent(obj.field);
  return obj;
}

TestObject make_rpp(int n, std::uint64_t seed) {
  require(n >= 32, ErrorCode::invalid_argument, "RPP needs n >= 32");
  const auto p = shepp_logan(n);
  Rng rng(seed);
  TestObject obj{ComplexField2D(p.rows(), p.cols()), "RPP", 2.0 * std::numbers::pi};
  for (std::size_t i = 0; i < p.size(); ++i)
    obj.field[i] = std::polar(p[i], 2.0 * std::numbers::pi * rng.uniform01());
  return obj;
}

RealField2D synthetic_cib_image(int n, int which) {
  require(n >= 1, ErrorCode::invalid_argument, "image size must be positive");
  const auto un = static_cast<std::size_t>(n);
  RealField2D img(un, un);
  const double tau = 2.0 * std::numbers::pi;
  for (std::size_t r = 0; r < un; ++r) {
    const double y = 1.0 - (2.0 * r + 1.0) / n;
    for (std::size_t c = 0; c < un; ++c) {
      const double x = (2.0 * c + 1.0) / n - 1.0;
      double t;
      if (which == 0) {
        const double rho = std::hypot(x + 0.15, y - 0.1);
        t = 0.42 + 0.28 * std::cos(tau * 5.0 * std::pow(rho, 1.3)) * std::exp(-1.5 * rho * rho) +
            0.18 * std::tanh(6.0 * (0.55 - std::hypot(x - 0.35, y + 0.3))) +
            0.08 * std::sin(tau * (1.5 * x - 2.5 * y));
        if (std::abs(x + 0.5) < 0.18 && std::abs(y + 0.45) < 0.25) t += 0.2;
      } else {
        const double warp = 1.0 + 0.35 * x * y;
        t = 0.5 + 0.18 * std::sin(tau * (6.0 * x + 2.0 * y) * warp) +
            0.14 * std::cos(tau * (2.5 * x - 7.0 * y)) +
            0.1 * std::cos(tau * 3.0 * std::hypot(x - 0.4, y - 0.5)) - 0.12 * x;
        const int bx = static_cast<int>(c * 12 / un), by = static_cast<int>(r * 12 / un);
        if (((bx + by) & 1) && x < -0.3 && y > 0.2) t -= 0.15;
      }
      img(r, c) = to_byte(t);
    }
  }
  return img;
}

double phase_extent(const ComplexField2D& field) {
  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (const auto& z : field) {
    if (z == cplx{}) continue;
    const double a = std::arg(z);
    if (!any) {
      lo = hi = a;
      any = true;
    } else {
      lo = std::min(lo, a);
      hi = std::max(hi, a);
    }
  }
  return hi - lo;
}

}  // namespace ptycho
