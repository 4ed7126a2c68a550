#include "ptycho/scan_plan.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include "json.hpp"
#include "ptycho/random.hpp"

namespace ptycho {
namespace {

void check_grid(int grid_k, int grid_l, int tau, int jitter_bound) {
  require(grid_k >= 1 && grid_l >= 1, ErrorCode::invalid_argument, "scan grid must be at least 1x1");
  require(tau >= 1, ErrorCode::invalid_argument, "tau must be positive");
  require(jitter_bound >= 0, ErrorCode::invalid_argument, "jitter bound must be non-negative");
  require(tau > jitter_bound, ErrorCode::invalid_argument,
          "tau (" + std::to_string(tau) + ") must exceed the jitter bound (" +
              std::to_string(jitter_bound) + ")");
}

void check_distinct(const ScanPlan& plan) {
  std::set<std::pair<int, int>> seen;
  for (const auto& p : plan.positions) {
    const bool fresh = seen.emplace(p.t.x, p.t.y).second;
    require(fresh, ErrorCode::invalid_argument,
            "scan positions collide at (" + std::to_string(p.t.x) + ", " +
                std::to_string(p.t.y) + "); increase tau relative to the jitter bound");
  }
}

ScanPlan skeleton(ScanScheme scheme, int grid_k, int grid_l, int tau, int jitter_bound,
                  std::uint64_t seed) {
  ScanPlan plan;
  plan.grid_k = grid_k;
  plan.grid_l = grid_l;
  plan.tau = tau;
  plan.jitter_bound = jitter_bound;
  plan.scheme = scheme;
  plan.seed = seed;
  plan.positions.reserve(static_cast<std::size_t>(grid_k) * grid_l);
  return plan;
}

}  // namespace

std::string to_string(ScanScheme s) {
  switch (s) {
    case ScanScheme::plain_raster: return "plain_raster";
    case ScanScheme::rank_one: return "rank_one";
    case ScanScheme::full_rank: return "full_rank";
  }
  return "?";
}

ScanScheme scan_scheme_from_string(const std::string& s) {
  if (s == "plain_raster" || s == "raster") return ScanScheme::plain_raster;
  if (s == "rank_one") return ScanScheme::rank_one;
  if (s == "full_rank") return ScanScheme::full_rank;
  fail(ErrorCode::invalid_argument, "unknown scan scheme '" + s + "'");
}

ScanPlan make_plain_raster(int grid_k, int grid_l, int tau) {
  check_grid(grid_k, grid_l, tau, 0);
  auto plan = skeleton(ScanScheme::plain_raster, grid_k, grid_l, tau, 0, 0);
  for (int l = 0; l < grid_l; ++l)
    for (int k = 0; k < grid_k; ++k) plan.positions.push_back({k, l, {tau * k, tau * l}});
  return plan;
}

ScanPlan make_rank_one(int grid_k, int grid_l, int tau, int jitter_bound, std::uint64_t seed) {
  check_grid(grid_k, grid_l, tau, jitter_bound);
  auto plan = skeleton(ScanScheme::rank_one, grid_k, grid_l, tau, jitter_bound, seed);
  Rng rng(seed);
  std::vector<int> d1(grid_k), d2(grid_l);
  for (auto& d : d1) d = static_cast<int>(rng.uniform_int(-jitter_bound, jitter_bound));
  for (auto& d : d2) d = static_cast<int>(rng.uniform_int(-jitter_bound, jitter_bound));
  for (int l = 0; l < grid_l; ++l)
    for (int k = 0; k < grid_k; ++k)
      plan.positions.push_back({k, l, {tau * k + d1[k], tau * l + d2[l]}});
  check_distinct(plan);
  return plan;
}

ScanPlan make_full_rank(int grid_k, int grid_l, int tau, int jitter_bound, std::uint64_t seed) {
  check_grid(grid_k, grid_l, tau, jitter_bound);
  auto plan = skeleton(ScanScheme::full_rank, grid_k, grid_l, tau, jitter_bound, seed);
  Rng rng(seed);
  for (int l = 0; l < grid_l; ++l)
    for (int k = 0; k < grid_k; ++k) {
      const int dx = static_cast<int>(rng.uniform_int(-jitter_bound, jitter_bound));
      const int dy = static_cast<int>(rng.uniform_int(-jitter_bound, jitter_bound));
      plan.positions.push_back({k, l, {tau * k + dx, tau * l + dy}});
    }
  check_distinct(plan);
  return plan;
}

ScanPlan make_scan(ScanScheme scheme, int grid_k, int grid_l, int tau, int jitter_bound,
                   std::uint64_t seed) {
  switch (scheme) {
    case ScanScheme::plain_raster: return make_plain_raster(grid_k, grid_l, tau);
    case ScanScheme::rank_one: return make_rank_one(grid_k, grid_l, tau, jitter_bound, seed);
    case ScanScheme::full_rank: return make_full_rank(grid_k, grid_l, tau, jitter_bound, seed);
  }
  fail(ErrorCode::invalid_argument, "unknown scan scheme");
}

ScanPlan reindex_raster(ScanPlan plan, int dk, int dl) {
  for (auto& p : plan.positions) {
    p.k += dk;
    p.l += dl;
    p.t.x += plan.tau * dk;
    p.t.y += plan.tau * dl;
  }
  return plan;
}

RealField2D coverage(const ScanPlan& plan, int probe_m, int object_n, const BoundaryCondition& bc) {
  const auto grid = reconstruction_grid(plan, probe_m, object_n, bc);
  RealField2D count(static_cast<std::size_t>(grid.rows), static_cast<std::size_t>(grid.cols));
  for (const auto& p : plan.positions)
    for (int i = 0; i < probe_m; ++i)
      for (int j = 0; j < probe_m; ++j) count[grid.local_index(p.t.y + i, p.t.x + j)] += 1.0;
  return count;
}

std::string plan_csv(const ScanPlan& plan) {
  std::ostringstream os;
  os << "k,l,tx,ty\n";
  for (const auto& p : plan.positions) os << p.k << ',' << p.l << ',' << p.t.x << ',' << p.t.y << '\n';
  return os.str();
}

std::string plan_json(const ScanPlan& plan) {
  nlohmann::ordered_json j;
  j["scheme"] = to_string(plan.scheme);
  j["grid_k"] = plan.grid_k;
  j["grid_l"] = plan.grid_l;
  j["tau"] = plan.tau;
  j["jitter_bound"] = plan.jitter_bound;
  j["seed"] = plan.seed;
  j["positions"] = plan.positions.size();
  return j.dump(2) + "\n";
}

void save_plan(const ScanPlan& plan, const std::filesystem::path& csv_path,
               const std::filesystem::path& json_path) {
  std::ofstream csv(csv_path, std::ios::binary);
  require(csv.is_open(), ErrorCode::io, "cannot write " + csv_path.string());
  csv << plan_csv(plan);
  std::ofstream js(json_path, std::ios::binary);
  require(js.is_open(), ErrorCode::io, "cannot write " + json_path.string());
  js << plan_json(plan);
}

ScanPlan load_plan(const std::filesystem::path& csv_path, const std::filesystem::path& json_path) {
  std::ifstream js(json_path);
  require(js.is_open(), ErrorCode::io, "cannot open " + json_path.string());
  nlohmann::json meta;
  try {
    js >> meta;
  } catch (const std::exception& e) {
    fail(ErrorCode::io, json_path.string() + ": " + e.what());
  }
  ScanPlan plan;
  try {
    plan.scheme = scan_scheme_from_string(meta.at("scheme").get<std::string>());
    plan.grid_k = meta.at("grid_k").get<int>();
    plan.grid_l = meta.at("grid_l").get<int>();
    plan.tau = meta.at("tau").get<int>();
    plan.jitter_bound = meta.at("jitter_bound").get<int>();
    plan.seed = meta.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::io, json_path.string() + ": " + e.what());
  }

  std::ifstream csv(csv_path);
  require(csv.is_open(), ErrorCode::io, "cannot open " + csv_path.string());
  std::string line;
  int lineno = 0;
  while (std::getline(csv, line) && ++lineno && line.rfind('#', 0) == 0) {
  }
  require(line.rfind("k,l,tx,ty", 0) == 0, ErrorCode::io, csv_path.string() + ": bad header");
  while (std::getline(csv, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream is(line);
    ScanPosition p;
    char c1, c2, c3;
    is >> p.k >> c1 >> p.l >> c2 >> p.t.x >> c3 >> p.t.y;
    require(is && c1 == ',' && c2 == ',' && c3 == ',', ErrorCode::io,
            csv_path.string() + ":" + std::to_string(lineno) + ": malformed row");
    plan.positions.push_back(p);
  }
  require(plan.positions.size() == static_cast<std::size_t>(plan.grid_k) * plan.grid_l, ErrorCode::shape_mismatch,
          csv_path.string() + ": " + std::to_string(plan.positions.size()) + " positions for a " +
              std::to_string(plan.grid_k) + "x" + std::to_string(plan.grid_l) + " raster");
  return plan;
}

}  // namespace ptycho
