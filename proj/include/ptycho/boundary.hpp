#pragma once

#include <string>

#include "ptycho/field.hpp"

namespace ptycho {

struct ScanPlan;

enum class BoundaryKind { periodic, dark, bright };

std::string to_string(BoundaryKind k);
BoundaryKind boundary_kind_from_string(const std::string& s);

struct BoundaryCondition {
  BoundaryKind kind = BoundaryKind::periodic;
  cplx value{0.0, 0.0};  // margin value, bright only
  bool enforce = false;

  // Known value on M \ Z_n^2 (0 for dark).
  cplx margin_value() const noexcept {
    return kind == BoundaryKind::bright ? value : cplx{0.0, 0.0};
  }
};

void validate(const BoundaryCondition& bc);

// The reconstruction grid M. Interior pixel (r, c) of the n x n object sits at
// local (r - origin_row, c - origin_col); origin is <= 0 for dark/bright grids.
struct ReconstructionGrid {
  int n = 0;
  bool periodic = true;
  int origin_row = 0;
  int origin_col = 0;
  int rows = 0;
  int cols = 0;
  Mask2D margin;  // 1 on M \ Z_n^2

  bool is_interior(int local_r, int local_c) const noexcept {
    return margin(static_cast<std::size_t>(local_r), static_cast<std::size_t>(local_c)) == 0;
  }
  std::size_t margin_count() const noexcept;

  // Local linear index of global pixel (gr, gc); wraps for periodic grids.
  std::size_t local_index(int gr, int gc) const noexcept;
};

// periodic: M = Z_n^2. dark/bright: bounding box of Z_n^2 and every footprint.
ReconstructionGrid reconstruction_grid(const ScanPlan& plan, int probe_m, int object_n,
                                       const BoundaryCondition& bc);

ComplexField2D extend_truth(const ComplexField2D& object, const BoundaryCondition& bc,
                            const ReconstructionGrid& grid);

ComplexField2D enforce_bc(const ComplexField2D& estimate, const BoundaryCondition& bc,
                          const ReconstructionGrid& grid);

// Restriction of a field on M to the n x n interior.
ComplexField2D interior(const ComplexField2D& field_on_m, const ReconstructionGrid& grid);

// Place an n x n interior into M, filling the margin with `fill`.
ComplexField2D embed(const ComplexField2D& interior_field, const ReconstructionGrid& grid,
                     cplx fill);

}  // namespace ptycho
