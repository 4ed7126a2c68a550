#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "oracles.hpp"
#include "ptycho/fft.hpp"
#include "ptycho/io.hpp"
#include "ptycho/parallel.hpp"

using namespace ptycho;
namespace fs = std::filesystem;

namespace {
fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / "ptycho_core_field_test";
  fs::create_directories(dir);
  return dir / name;
}

double max_diff(const ComplexField2D& a, const ComplexField2D& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}
}  // namespace

TEST_CASE("grid shape checks and row-major layout") {
  ComplexField2D g(2, 3, cplx(1.0, 0.0));
  CHECK(g.rows() == 2);
  CHECK(g.cols() == 3);
  g(1, 2) = {4.0, 5.0};
  CHECK(g[5] == cplx(4.0, 5.0));
  CHECK_THROWS_AS(ComplexField2D(2, 2, std::vector<cplx>(3)), Error);
  FrameStack<double> f(3, 2, 2, 1.0);
  CHECK(f.frame(2).size() == 4);
  CHECK(f.size() == 12);
}

TEST_CASE("sgn is unit modulus with sgn(0) = 1") {
  CHECK(sgn(cplx(0.0, 0.0)) == cplx(1.0, 0.0));
  CHECK(std::abs(sgn(cplx(3.0, -4.0)) - cplx(0.6, -0.8)) < 1e-15);
}

TEST_CASE("FFT matches the naive unitary DFT, padded and unpadded") {
  Rng rng(11);
  for (auto [r, c, pr, pc] : {std::array<std::size_t, 4>{4, 4, 4, 4}, {3, 5, 3, 5}, {3, 3, 6, 6}, {5, 2, 8, 7}}) {
    auto f = oracle::random_field(r, c, rng);
    auto fast = dft2(f, pr, pc);
    auto slow = oracle::naive_dft2(f, pr, pc);
    CHECK(max_diff(fast, slow) < 1e-12);
  }
}

TEST_CASE("FFT is unitary and inverts") {
  Rng rng(5);
  auto f = oracle::random_field(8, 6, rng);
  auto F = dft2(f);
  CHECK(std::abs(norm2(F.values()) - norm2(f.values())) < 1e-12 * norm2(f.values()));
  CHECK(max_diff(idft2(F), f) < 1e-13);
  CHECK(max_diff(idft2(f), oracle::naive_dft2(f, 8, 6, +1)) < 1e-12);
}

TEST_CASE("padding below the field size is rejected") {
  ComplexField2D f(4, 4);
  CHECK_THROWS_AS(dft2(f, 3, 4), Error);
}

TEST_CASE("CPXF and AMPF round trip bit-exactly") {
  Rng rng(2);
  auto f = oracle::random_field(3, 7, rng);
  io::save_cpxf(scratch("a.cpxf"), f);
  CHECK(io::load_cpxf(scratch("a.cpxf")) == f);

  AmplitudeFrames b(2, 3, 3);
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = rng.uniform01();
  io::save_ampf(scratch("b.ampf"), b);
  CHECK(io::load_ampf(scratch("b.ampf")) == b);
}

TEST_CASE("malformed and truncated files are io errors") {
  {
    std::ofstream(scratch("bad.cpxf"), std::ios::binary) << "NOPE0000";
  }
  try {
    io::load_cpxf(scratch("bad.cpxf"));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::io);
  }
  Rng rng(3);
  io::save_cpxf(scratch("t.cpxf"), oracle::random_field(4, 4, rng));
  fs::resize_file(scratch("t.cpxf"), 40);
  CHECK_THROWS_AS(io::load_cpxf(scratch("t.cpxf")), Error);
  CHECK_THROWS_AS(io::load_ampf(scratch("does_not_exist.ampf")), Error);
}

TEST_CASE("PGM binary and ASCII load; save maps the range") {
  {
    std::ofstream out(scratch("a.pgm"));
    out << "P2\n# comment\n3 2\n255\n0 128 255\n1 2 3\n";
  }
  auto img = io::load_pgm(scratch("a.pgm"));
  REQUIRE(img.rows() == 2);
  REQUIRE(img.cols() == 3);
  CHECK(img(0, 1) == 128.0);
  CHECK(img(1, 2) == 3.0);

  RealField2D r(2, 2);
  r[0] = -1.0, r[1] = 0.0, r[2] = 0.5, r[3] = 2.0;
  io::save_pgm(scratch("b.pgm"), r, 0.0, 1.0);
  auto back = io::load_pgm(scratch("b.pgm"));
  CHECK(back[0] == 0.0);
  CHECK(back[1] == 0.0);
  CHECK(std::abs(back[2] - 128.0) <= 1.0);
  CHECK(back[3] == 255.0);
}

TEST_CASE("thread cap") {
  const int base = worker_threads();
  CHECK(base >= 1);
  set_thread_cap(1);
  CHECK(worker_threads() == 1);
  set_thread_cap(0);
  CHECK(worker_threads() == base);
}

TEST_CASE("seed derivation separates streams and is stable") {
  CHECK(derive_seed(1, 1) != derive_seed(1, 2));
  CHECK(derive_seed(1, 1) != derive_seed(2, 1));
  CHECK(derive_seed(7, 3) == derive_seed(7, 3));
  Rng a(9), b(9);
  for (int i = 0; i < 10; ++i) CHECK(a.uniform01() == b.uniform01());
  Rng c(1);
  for (int i = 0; i < 2000; ++i) {
    const double u = c.uniform01();
    CHECK((u > 0.0 && u < 1.0));
    const auto k = c.uniform_int(-4, 4);
    CHECK((k >= -4 && k <= 4));
  }
}
