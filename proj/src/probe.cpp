#include "ptycho/probe.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "ptycho/fft.hpp"
#include "ptycho/random.hpp"

namespace ptycho {

Probe iid_probe(int m, std::uint64_t seed) {
  require(m >= 1, ErrorCode::invalid_argument, "probe size must be positive");
  Rng rng(seed);
  Probe p{ComplexField2D(static_cast<std::size_t>(m), static_cast<std::size_t>(m))};
  for (auto& z : p.field) z = std::polar(1.0, 2.0 * std::numbers::pi * rng.uniform01());
  return p;
}

Probe correlated_probe(int m, double c, std::uint64_t seed) {
  require(c > 0.0 && c <= 1.0, ErrorCode::invalid_argument, "correlation length c must lie in (0, 1]");
  Probe p = iid_probe(m, seed);
  const int h = static_cast<int>(std::floor(c * m));
  if (h == 0) return p;

  // Periodized 1-D box: how many k in [-h, h] fall on each residue mod m.
  std::vector<double> box(static_cast<std::size_t>(m), 0.0);
  for (int k = -h; k <= h; ++k) box[static_cast<std::size_t>(((k % m) + m) % m)] += 1.0;

  const auto um = static_cast<std::size_t>(m);
  ComplexField2D kernel(um, um);
  for (std::size_t r = 0; r < um; ++r)
    for (std::size_t q = 0; q < um; ++q) kernel(r, q) = box[r] * box[q];

  // Unitary transforms: conv = m * IDFT(DFT(z) . DFT(K)).
  auto zf = dft2(p.field);
  const auto kf = dft2(kernel);
  for (std::size_t i = 0; i < zf.size(); ++i) zf[i] *= kf[i] * static_cast<double>(m);
  const auto conv = idft2(zf);
  for (std::size_t i = 0; i < conv.size(); ++i) p.field[i] = sgn(conv[i]);
  return p;
}

Probe with_magnitude(const Probe& probe, const RealField2D& magnitude) {
  require(probe.field.same_shape(magnitude), ErrorCode::shape_mismatch,
          "probe magnitude profile has the wrong shape");
  Probe out = probe;
  for (std::size_t i = 0; i < out.field.size(); ++i) {
    require(magnitude[i] > 0.0 && std::isfinite(magnitude[i]), ErrorCode::invalid_argument,
            "probe magnitude must be positive at every pixel");
    out.field[i] = magnitude[i] * sgn(probe.field[i]);
  }
  return out;
}

void validate(const Probe& probe) {
  require(!probe.field.empty() && probe.field.rows() == probe.field.cols(),
          ErrorCode::shape_mismatch, "probe must be square and non-empty");
  for (const auto& z : probe.field)
    require(std::abs(z) > 0.0 && std::isfinite(z.real()) && std::isfinite(z.imag()),
            ErrorCode::invalid_argument, "probe must be finite and nonzero at every pixel");
}

PpcInit ppc_init(const Probe& truth, std::array<double, 2> k, double delta, int object_n,
                 std::uint64_t seed) {
  validate(truth);
  require(object_n >= 1, ErrorCode::invalid_argument, "object size must be positive");
  require(delta >= 0.0, ErrorCode::invalid_argument, "PPC delta must be non-negative");
  Rng rng(seed);
  PpcInit out{truth, delta <= 0.5 && k[0] == 0.0 && k[1] == 0.0};
  const auto m = truth.field.rows();
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < m; ++c) {
      const double ramp = 2.0 * std::numbers::pi * (k[0] * c + k[1] * r) / object_n;
      const double phi = delta == 0.0 ? 0.0 : rng.uniform(-delta * std::numbers::pi, delta * std::numbers::pi);
      if (ramp != 0.0 || phi != 0.0) out.probe.field(r, c) *= std::polar(1.0, ramp + phi);
    }
  return out;
}

PpcReport ppc_predicate(const ComplexField2D& estimate, const ComplexField2D& truth, double delta) {
  require(estimate.same_shape(truth), ErrorCode::shape_mismatch, "ppc_predicate: shape mismatch");
  PpcReport rep{Mask2D(truth.rows(), truth.cols(), 0), 0.0};
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double angle = std::abs(std::arg(estimate[i] * std::conj(truth[i])));
    if (angle < delta * std::numbers::pi) {
      rep.pass[i] = 1;
      ++hits;
    }
  }
  rep.fraction = truth.empty() ? 0.0 : static_cast<double>(hits) / truth.size();
  return rep;
}

double mean_neighbor_phase_step(const ComplexField2D& field) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t r = 0; r < field.rows(); ++r)
    for (std::size_t c = 0; c < field.cols(); ++c) {
      if (c + 1 < field.cols()) {
        sum += std::abs(std::arg(field(r, c + 1) * std::conj(field(r, c))));
        ++count;
      }
      if (r + 1 < field.rows()) {
        sum += std::abs(std::arg(field(r + 1, c) * std::conj(field(r, c))));
        ++count;
      }
    }
  return count ? sum / count : 0.0;
}

}  // namespace ptycho
