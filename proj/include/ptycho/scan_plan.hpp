#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ptycho/boundary.hpp"
#include "ptycho/field.hpp"

namespace ptycho {

enum class ScanScheme { plain_raster, rank_one, full_rank };

std::string to_string(ScanScheme s);
ScanScheme scan_scheme_from_string(const std::string& s);

// Shift of the probe's top-left pixel: x is the column, y the row.
struct Shift {
  int x = 0;
  int y = 0;
  friend bool operator==(const Shift&, const Shift&) = default;
};

struct ScanPosition {
  int k = 0;  // raster column index
  int l = 0;  // raster row index
  Shift t;
  friend bool operator==(const ScanPosition&, const ScanPosition&) = default;
};

struct ScanPlan {
  std::vector<ScanPosition> positions;  // l outer, k inner
  int grid_k = 0;
  int grid_l = 0;
  int tau = 0;
  int jitter_bound = 0;
  ScanScheme scheme = ScanScheme::plain_raster;
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return positions.size(); }
  friend bool operator==(const ScanPlan&, const ScanPlan&) = default;
};

ScanPlan make_plain_raster(int grid_k, int grid_l, int tau);

// t_kl = tau*(k,l) + (d1_k, d2_l): column jitter shared by a raster column,
// row jitter shared by a raster row.
ScanPlan make_rank_one(int grid_k, int grid_l, int tau, int jitter_bound, std::uint64_t seed);

// t_kl = tau*(k,l) + (d1_kl, d2_kl), independent per position.
ScanPlan make_full_rank(int grid_k, int grid_l, int tau, int jitter_bound, std::uint64_t seed);

ScanPlan make_scan(ScanScheme scheme, int grid_k, int grid_l, int tau, int jitter_bound,
                   std::uint64_t seed);

// Relabels raster indices k -> k + dk, l -> l + dl and moves every position by
// tau*(dk, dl), so jitter offsets are unchanged. reindex_raster(plan, -1, -1) on
// an (n/tau + 1)-square raster starts the scan one step before the object, which
// keeps the low edge of Z_n^2 lit under any jitter for dark and bright grids.
ScanPlan reindex_raster(ScanPlan plan, int dk, int dl);

// Number of probe footprints covering each pixel of the reconstruction grid.
RealField2D coverage(const ScanPlan& plan, int probe_m, int object_n, const BoundaryCondition& bc);

void save_plan(const ScanPlan& plan, const std::filesystem::path& csv_path,
               const std::filesystem::path& json_path);
ScanPlan load_plan(const std::filesystem::path& csv_path, const std::filesystem::path& json_path);

std::string plan_csv(const ScanPlan& plan);
std::string plan_json(const ScanPlan& plan);

}  // namespace ptycho
