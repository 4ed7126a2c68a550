#pragma once

#include <filesystem>

#include "ptycho/field.hpp"

namespace ptycho::io {

// CPXF: "CPXF", u32 rows, u32 cols, rows*cols interleaved float64 (re, im); little-endian.
void save_cpxf(const std::filesystem::path& path, const ComplexField2D& field);
ComplexField2D load_cpxf(const std::filesystem::path& path);

// AMPF: "AMPF", u32 Q, u32 rows, u32 cols, Q*rows*cols float64; little-endian.
void save_ampf(const std::filesystem::path& path, const AmplitudeFrames& frames);
AmplitudeFrames load_ampf(const std::filesystem::path& path);

/// 8-bit PGM (binary P5 or ASCII P2) as doubles in [0, maxval].
RealField2D load_pgm(const std::filesystem::path& path);

/// Linear map [lo, hi] -> [0, 255], clamped; writes binary P5.
void save_pgm(const std::filesystem::path& path, const RealField2D& image, double lo, double hi);

void save_magnitude_pgm(const std::filesystem::path& path, const ComplexField2D& field);

/// Phase in [-pi, pi] mapped to [0, 255].
void save_phase_pgm(const std::filesystem::path& path, const ComplexField2D& field);

}  // namespace ptycho::io
