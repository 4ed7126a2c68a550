#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "doctest.h"
#include "ptycho/error.hpp"
#include "ptycho/scan_plan.hpp"

using namespace ptycho;
namespace fs = std::filesystem;

TEST_CASE("plain raster: l outer, k inner, t = tau (k, l)") {
  auto p = make_plain_raster(3, 2, 5);
  REQUIRE(p.size() == 6);
  CHECK(p.positions[1] == ScanPosition{1, 0, {5, 0}});
  CHECK(p.positions[3] == ScanPosition{0, 1, {0, 5}});
  CHECK(p.positions[5].t == Shift{10, 5});
  CHECK(p.scheme == ScanScheme::plain_raster);
}

TEST_CASE("rank-one jitter is shared along raster columns and rows") {
  auto p = make_rank_one(5, 4, 10, 3, 42);
  std::map<int, int> dx, dy;
  std::set<int> seen;
  for (const auto& s : p.positions) {
    const int jx = s.t.x - 10 * s.k, jy = s.t.y - 10 * s.l;
    CHECK(std::abs(jx) <= 3);
    CHECK(std::abs(jy) <= 3);
    if (dx.count(s.k)) CHECK(dx[s.k] == jx);
    if (dy.count(s.l)) CHECK(dy[s.l] == jy);
    dx[s.k] = jx, dy[s.l] = jy;
    seen.insert(jx);
  }
  CHECK(seen.size() > 1);
}

TEST_CASE("full-rank jitter is independent per position and within bounds") {
  auto p = make_full_rank(8, 8, 10, 4, 7);
  std::set<std::pair<int, int>> offsets;
  bool column_shared = true;
  std::map<int, int> dx;
  for (const auto& s : p.positions) {
    const int jx = s.t.x - 10 * s.k, jy = s.t.y - 10 * s.l;
    CHECK(std::abs(jx) <= 4);
    CHECK(std::abs(jy) <= 4);
    offsets.insert({jx, jy});
    if (dx.count(s.k) && dx[s.k] != jx) column_shared = false;
    dx[s.k] = jx;
  }
  CHECK_FALSE(column_shared);
  CHECK(offsets.size() > 20);
}

TEST_CASE("jittered plans are deterministic per seed") {
  CHECK(make_full_rank(4, 4, 8, 2, 1) == make_full_rank(4, 4, 8, 2, 1));
  CHECK_FALSE(make_full_rank(4, 4, 8, 2, 1) == make_full_rank(4, 4, 8, 2, 2));
  CHECK(make_rank_one(4, 4, 8, 2, 9) == make_scan(ScanScheme::rank_one, 4, 4, 8, 2, 9));
}

TEST_CASE("zero jitter reduces both schemes to the plain raster") {
  auto plain = make_plain_raster(3, 3, 4);
  for (auto scheme : {ScanScheme::rank_one, ScanScheme::full_rank}) {
    auto p = make_scan(scheme, 3, 3, 4, 0, 5);
    REQUIRE(p.size() == plain.size());
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(p.positions[i] == plain.positions[i]);
  }
}

TEST_CASE("invalid scan parameters are rejected") {
  CHECK_THROWS_AS(make_plain_raster(0, 3, 4), Error);
  CHECK_THROWS_AS(make_plain_raster(3, 3, 0), Error);
  CHECK_THROWS_AS(make_full_rank(3, 3, 4, -1, 0), Error);
  CHECK_THROWS_AS(scan_scheme_from_string("zigzag"), Error);
  CHECK(scan_scheme_from_string("rank_one") == ScanScheme::rank_one);
}

TEST_CASE("reindex_raster moves indices and shifts together") {
  auto p = make_full_rank(3, 3, 10, 2, 4);
  auto q = reindex_raster(p, -1, -1);
  REQUIRE(q.size() == p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    CHECK(q.positions[i].k == p.positions[i].k - 1);
    CHECK(q.positions[i].l == p.positions[i].l - 1);
    CHECK(q.positions[i].t.x == p.positions[i].t.x - 10);
    CHECK(q.positions[i].t.y == p.positions[i].t.y - 10);
  }
}

TEST_CASE("periodic coverage counts wrapped footprints") {
  BoundaryCondition bc;
  auto p = make_plain_raster(2, 2, 2);
  auto w = coverage(p, 3, 4, bc);
  REQUIRE(w.rows() == 4);
  double total = 0.0;
  for (double v : w) total += v;
  CHECK(total == 4 * 9);
  CHECK(w(2, 2) == 4.0);  // every footprint of side 3 at steps of 2 touches (2, 2)
  // Rows {0,1,2} and the wrapped {2,3,0} both contain row 0, likewise for columns.
  CHECK(w(0, 0) == 4.0);
  CHECK(w(1, 1) == 1.0);
  CHECK(w(3, 1) == 1.0);
}

TEST_CASE("CSV and JSON round trip, including negative shifts") {
  auto dir = fs::temp_directory_path() / "ptycho_scan_plan_test";
  fs::create_directories(dir);
  auto p = reindex_raster(make_rank_one(4, 3, 6, 2, 3), -1, -1);
  save_plan(p, dir / "p.csv", dir / "p.json");
  CHECK(load_plan(dir / "p.csv", dir / "p.json") == p);
  CHECK(plan_csv(p).rfind("k,l,tx,ty\n", 0) == 0);

  // A leading comment line is tolerated.
  {
    std::ofstream out(dir / "c.csv");
    out << "# config_hash=0\n" << plan_csv(p);
  }
  CHECK(load_plan(dir / "c.csv", dir / "p.json") == p);
}

TEST_CASE("a plan CSV inconsistent with its sidecar is rejected") {
  auto dir = fs::temp_directory_path() / "ptycho_scan_plan_test";
  fs::create_directories(dir);
  auto p = make_plain_raster(2, 2, 4);
  save_plan(p, dir / "q.csv", dir / "q.json");
  {
    std::ofstream out(dir / "q.csv");
    out << "k,l,tx,ty\n0,0,0,0\n1,0,4,0\n";
  }
  CHECK_THROWS_AS(load_plan(dir / "q.csv", dir / "q.json"), Error);
  {
    std::ofstream out(dir / "r.csv");
    out << "k,l,tx\n0,0,0\n";
  }
  CHECK_THROWS_AS(load_plan(dir / "r.csv", dir / "q.json"), Error);
}
