#include "ptycho/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

namespace ptycho::io {
namespace {

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    std::array<unsigned char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), &v, sizeof(T));
    std::reverse(bytes.begin(), bytes.end());
    std::memcpy(&v, bytes.data(), sizeof(T));
    return v;
  }
}

template <typename T>
void put(std::ostream& os, T v) {
  v = to_little(v);
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is, const std::filesystem::path& path) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  require(static_cast<bool>(is), ErrorCode::io, "truncated file " + path.string());
  return to_little(v);
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  require(os.is_open(), ErrorCode::io, "cannot open for writing: " + path.string());
  return os;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  require(is.is_open(), ErrorCode::io, "cannot open: " + path.string());
  return is;
}

void expect_magic(std::istream& is, const char* magic, const std::filesystem::path& path) {
  char buf[4];
  is.read(buf, 4);
  require(is && std::memcmp(buf, magic, 4) == 0, ErrorCode::io,
          path.string() + ": bad magic, expected " + magic);
}

std::uint32_t checked_u32(std::size_t v) {
  require(v <= 0xffffffffu, ErrorCode::invalid_argument, "dimension exceeds u32");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

void save_cpxf(const std::filesystem::path& path, const ComplexField2D& field) {
  auto os = open_out(path);
  os.write("CPXF", 4);
  put(os, checked_u32(field.rows()));
  put(os, checked_u32(field.cols()));
  for (const auto& z : field) {
    put(os, z.real());
    put(os, z.imag());
  }
  require(static_cast<bool>(os), ErrorCode::io, "write failed: " + path.string());
}

ComplexField2D load_cpxf(const std::filesystem::path& path) {
  auto is = open_in(path);
  expect_magic(is, "CPXF", path);
  const auto rows = get<std::uint32_t>(is, path);
  const auto cols = get<std::uint32_t>(is, path);
  ComplexField2D field(rows, cols);
  for (auto& z : field) {
    const double re = get<double>(is, path);
    const double im = get<double>(is, path);
    z = {re, im};
  }
  return field;
}

void save_ampf(const std::filesystem::path& path, const AmplitudeFrames& frames) {
  auto os = open_out(path);
  os.write("AMPF", 4);
  put(os, checked_u32(frames.frames()));
  put(os, checked_u32(frames.frame_rows()));
  put(os, checked_u32(frames.frame_cols()));
  for (double v : frames.values()) put(os, v);
  require(static_cast<bool>(os), ErrorCode::io, "write failed: " + path.string());
}

AmplitudeFrames load_ampf(const std::filesystem::path& path) {
  auto is = open_in(path);
  expect_magic(is, "AMPF", path);
  const auto q = get<std::uint32_t>(is, path);
  const auto rows = get<std::uint32_t>(is, path);
  const auto cols = get<std::uint32_t>(is, path);
  AmplitudeFrames frames(q, rows, cols);
  for (auto& v : frames.values()) {
    v = get<double>(is, path);
    require(v >= 0.0, ErrorCode::io, path.string() + ": negative amplitude");
  }
  return frames;
}

RealField2D load_pgm(const std::filesystem::path& path) {
  auto is = open_in(path);
  std::string magic;
  is >> magic;
  require(magic == "P5" || magic == "P2", ErrorCode::io, path.string() + ": not a PGM");
  auto next_int = [&]() {
    is >> std::ws;
    while (is.peek() == '#') {
      std::string line;
      std::getline(is, line);
      is >> std::ws;
    }
    long v = -1;
    is >> v;
    require(static_cast<bool>(is) && v >= 0, ErrorCode::io, path.string() + ": bad PGM header");
    return v;
  };
  const long cols = next_int();
  const long rows = next_int();
  const long maxval = next_int();
  require(maxval > 0 && maxval < 256, ErrorCode::io, path.string() + ": only 8-bit PGM supported");
  RealField2D image(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
  if (magic == "P5") {
    is.get();
    std::vector<unsigned char> bytes(image.size());
    is.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    require(static_cast<bool>(is), ErrorCode::io, path.string() + ": truncated PGM");
    std::copy(bytes.begin(), bytes.end(), image.begin());
  } else {
    for (auto& v : image) v = static_cast<double>(next_int());
  }
  return image;
}

void save_pgm(const std::filesystem::path& path, const RealField2D& image, double lo, double hi) {
  auto os = open_out(path);
  os << "P5\n" << image.cols() << " " << image.rows() << "\n255\n";
  const double span = hi > lo ? hi - lo : 1.0;
  for (double v : image) {
    const double t = std::clamp((v - lo) / span, 0.0, 1.0);
    const auto byte = static_cast<unsigned char>(std::lround(255.0 * t));
    os.put(static_cast<char>(byte));
  }
  require(static_cast<bool>(os), ErrorCode::io, "write failed: " + path.string());
}

void save_magnitude_pgm(const std::filesystem::path& path, const ComplexField2D& field) {
  RealField2D mag(field.rows(), field.cols());
  double hi = 0.0;
  for (std::size_t i = 0; i < field.size(); ++i) {
    mag[i] = std::abs(field[i]);
    hi = std::max(hi, mag[i]);
  }
  save_pgm(path, mag, 0.0, hi);
}

void save_phase_pgm(const std::filesystem::path& path, const ComplexField2D& field) {
  RealField2D phase(field.rows(), field.cols());
  for (std::size_t i = 0; i < field.size(); ++i) phase[i] = std::arg(field[i]);
  save_pgm(path, phase, -std::numbers::pi, std::numbers::pi);
}

}  // namespace ptycho::io
