#pragma once

#include <array>
#include <cstdint>

#include "ptycho/field.hpp"

namespace ptycho {

struct Probe {
  ComplexField2D field;  // m x m, nonzero everywhere
  int m() const noexcept { return static_cast<int>(field.rows()); }
};

// Unit modulus, i.i.d. uniform phases on [0, 2pi).
Probe iid_probe(int m, std::uint64_t seed);

// Periodic box convolution of the i.i.d. field with {|k1|, |k2| <= floor(c*m)},
// then each pixel renormalized to unit modulus.
Probe correlated_probe(int m, double c, std::uint64_t seed);

// Replace the probe modulus by a strictly positive profile, keeping phases.
Probe with_magnitude(const Probe& probe, const RealField2D& magnitude);

void validate(const Probe& probe);

struct PpcInit {
  Probe probe;
  bool guaranteed = false;  // delta <= 1/2 and k = 0: predicate holds everywhere
};

// nu(r) = mu(r) exp(i 2pi k.r / object_n) exp(i phi(r)), phi uniform on (-delta pi, delta pi).
// k = (kx, ky) pairs with (column, row).
PpcInit ppc_init(const Probe& truth, std::array<double, 2> k, double delta, int object_n,
                 std::uint64_t seed);

struct PpcReport {
  Mask2D pass;
  double fraction = 0.0;
};

// Pixelwise |angle(nu, mu)| < delta*pi.
PpcReport ppc_predicate(const ComplexField2D& estimate, const ComplexField2D& truth, double delta);

// Mean |phase difference| between 4-neighbours, wrapped to [0, pi].
double mean_neighbor_phase_step(const ComplexField2D& field);

}  // namespace ptycho
