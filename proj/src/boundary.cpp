#include "ptycho/boundary.hpp"

#include <algorithm>
#include <limits>

#include "ptycho/scan_plan.hpp"

namespace ptycho {

std::string to_string(BoundaryKind k) {
  switch (k) {
    case BoundaryKind::periodic: return "periodic";
    case BoundaryKind::dark: return "dark";
    case BoundaryKind::bright: return "bright";
  }
  return "?";
}

BoundaryKind boundary_kind_from_string(const std::string& s) {
  if (s == "periodic") return BoundaryKind::periodic;
  if (s == "dark") return BoundaryKind::dark;
  if (s == "bright") return BoundaryKind::bright;
  fail(ErrorCode::invalid_argument, "unknown boundary condition '" + s + "'");
}

void validate(const BoundaryCondition& bc) {
  if (bc.kind == BoundaryKind::bright)
    require(std::abs(bc.value) > 0.0, ErrorCode::invalid_argument,
            "bright boundary needs a nonzero value");
}

std::size_t ReconstructionGrid::margin_count() const noexcept {
  return static_cast<std::size_t>(std::count(margin.begin(), margin.end(), std::uint8_t{1}));
}

std::size_t ReconstructionGrid::local_index(int gr, int gc) const noexcept {
  int r, c;
  if (periodic) {
    r = ((gr % n) + n) % n;
    c = ((gc % n) + n) % n;
  } else {
    r = gr - origin_row;
    c = gc - origin_col;
  }
  return static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c);
}

ReconstructionGrid reconstruction_grid(const ScanPlan& plan, int probe_m, int object_n,
                                       const BoundaryCondition& bc) {
  require(object_n >= 1 && probe_m >= 1, ErrorCode::invalid_argument, "empty object or probe");
  validate(bc);
  ReconstructionGrid g;
  g.n = object_n;
  g.periodic = bc.kind == BoundaryKind::periodic;
  if (g.periodic) {
    require(probe_m <= object_n, ErrorCode::invalid_argument,
            "periodic boundary needs probe size <= object size");
    g.rows = g.cols = object_n;
    g.margin = Mask2D(static_cast<std::size_t>(object_n), static_cast<std::size_t>(object_n), 0);
    return g;
  }
  int r0 = 0, c0 = 0, r1 = object_n, c1 = object_n;
  for (const auto& p : plan.positions) {
    r0 = std::min(r0, p.t.y);
    c0 = std::min(c0, p.t.x);
    r1 = std::max(r1, p.t.y + probe_m);
    c1 = std::max(c1, p.t.x + probe_m);
  }
  g.origin_row = r0;
  g.origin_col = c0;
  g.rows = r1 - r0;
  g.cols = c1 - c0;
  g.margin = Mask2D(static_cast<std::size_t>(g.rows), static_cast<std::size_t>(g.cols), 1);
  for (int r = 0; r < object_n; ++r)
    for (int c = 0; c < object_n; ++c) g.margin[g.local_index(r, c)] = 0;
  return g;
}

ComplexField2D embed(const ComplexField2D& interior_field, const ReconstructionGrid& grid,
                     cplx fill) {
  require(interior_field.rows() == static_cast<std::size_t>(grid.n) &&
              interior_field.cols() == static_cast<std::size_t>(grid.n),
          ErrorCode::shape_mismatch, "interior field does not match grid size n");
  ComplexField2D out(static_cast<std::size_t>(grid.rows), static_cast<std::size_t>(grid.cols), fill);
  for (int r = 0; r < grid.n; ++r)
    for (int c = 0; c < grid.n; ++c) out[grid.local_index(r, c)] = interior_field(r, c);
  return out;
}

ComplexField2D interior(const ComplexField2D& field_on_m, const ReconstructionGrid& grid) {
  require(field_on_m.rows() == static_cast<std::size_t>(grid.rows) &&
              field_on_m.cols() == static_cast<std::size_t>(grid.cols),
          ErrorCode::shape_mismatch, "field does not live on the reconstruction grid");
  ComplexField2D out(static_cast<std::size_t>(grid.n), static_cast<std::size_t>(grid.n));
  for (int r = 0; r < grid.n; ++r)
    for (int c = 0; c < grid.n; ++c) out(r, c) = field_on_m[grid.local_index(r, c)];
  return out;
}

ComplexField2D extend_truth(const ComplexField2D& object, const BoundaryCondition& bc,
                            const ReconstructionGrid& grid) {
  validate(bc);
  if (grid.periodic) return embed(object, grid, 0.0);
  return embed(object, grid, bc.margin_value());
}

ComplexField2D enforce_bc(const ComplexField2D& estimate, const BoundaryCondition& bc,
                          const ReconstructionGrid& grid) {
  require(estimate.rows() == static_cast<std::size_t>(grid.rows) &&
              estimate.cols() == static_cast<std::size_t>(grid.cols),
          ErrorCode::shape_mismatch, "estimate does not live on the reconstruction grid");
  if (!bc.enforce || grid.periodic) return estimate;
  ComplexField2D out = estimate;
  const cplx v = bc.margin_value();
  for (std::size_t i = 0; i < out.size(); ++i)
    if (grid.margin[i]) out[i] = v;
  return out;
}

}  // namespace ptycho
