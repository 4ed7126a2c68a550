#pragma once

#include <cstdint>
#include <string>

#include "ptycho/field.hpp"

namespace ptycho {

struct TestObject {
  ComplexField2D field;  // n x n interior
  std::string name;      // "CiB", "RPP" or "custom"
  double phase_range = 0.0;
};

// image_a + i image_b; both non-negative and equally shaped.
TestObject make_cib(const RealField2D& image_a, const RealField2D& image_b);

// Shepp-Logan magnitude with i.i.d. uniform phases.
TestObject make_rpp(int n, std::uint64_t seed);

// Modified (higher contrast) ten-ellipse Shepp-Logan phantom, sampled at pixel
// centres with y pointing up, clipped to [0, 1].
RealField2D shepp_logan(int n);

struct Ellipse {
  double value, a, b, x0, y0, phi_deg;
};
const Ellipse* shepp_logan_table(std::size_t& count);

// Deterministic 8-bit stand-ins for the CiB source images.
// which = 0: radial rings over a smooth blob; which = 1: oriented texture.
RealField2D synthetic_cib_image(int n, int which);

// max arg - min arg over nonzero pixels.
double phase_extent(const ComplexField2D& field);

}  // namespace ptycho
