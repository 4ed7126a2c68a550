#include "ptycho/ptycho.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <string>

#include "ptycho/amdrs.hpp"
#include "ptycho/io.hpp"
#include "ptycho/metrics.hpp"
#include "ptycho/object.hpp"
#include "ptycho/parallel.hpp"
#include "ptycho/probe.hpp"
#include "ptycho/random.hpp"
#include "ptycho/stability.hpp"

struct ptycho_field {
  ptycho::ComplexField2D f;
};
struct ptycho_frames {
  ptycho::AmplitudeFrames b;
};
struct ptycho_plan {
  ptycho::ScanPlan p;
};
struct ptycho_geometry {
  ptycho::BoundaryCondition bc;
  int n;
  ptycho::ForwardGeometry g;
};
struct ptycho_history {
  ptycho::RunHistory h;
};

namespace {

thread_local std::string last_error;

ptycho_status to_status(ptycho::ErrorCode c) {
  switch (c) {
    case ptycho::ErrorCode::invalid_argument: return PTYCHO_ERR_INVALID_ARGUMENT;
    case ptycho::ErrorCode::shape_mismatch: return PTYCHO_ERR_SHAPE_MISMATCH;
    case ptycho::ErrorCode::coverage_hole: return PTYCHO_ERR_COVERAGE_HOLE;
    case ptycho::ErrorCode::numerical: return PTYCHO_ERR_NUMERICAL;
    case ptycho::ErrorCode::io: return PTYCHO_ERR_IO;
    case ptycho::ErrorCode::verification: return PTYCHO_ERR_VERIFICATION;
  }
  return PTYCHO_ERR_INTERNAL;
}

template <typename F>
ptycho_status guarded(F&& body) {
  try {
    body();
    return PTYCHO_OK;
  } catch (const ptycho::Error& e) {
    last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return PTYCHO_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return PTYCHO_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown exception";
    return PTYCHO_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  ptycho::require(p != nullptr, ptycho::ErrorCode::invalid_argument, std::string(what) + " is NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <typename H, typename V>
H* wrap(V&& v) {
  return new H{std::forward<V>(v)};
}

ptycho_field* wrap_field(ptycho::ComplexField2D f) { return new ptycho_field{std::move(f)}; }
ptycho_frames* wrap_frames(ptycho::AmplitudeFrames b) { return new ptycho_frames{std::move(b)}; }

ptycho::RealField2D real_part(const ptycho::ComplexField2D& f) {
  ptycho::RealField2D out(f.rows(), f.cols());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = f[i].real();
  return out;
}

ptycho::ComplexField2D complexify(const ptycho::RealField2D& r) {
  ptycho::ComplexField2D out(r.rows(), r.cols());
  for (std::size_t i = 0; i < r.size(); ++i) out[i] = r[i];
  return out;
}

ptycho::BoundaryCondition to_bc(const ptycho_bc& bc) {
  ptycho::BoundaryCondition out;
  switch (bc.kind) {
    case PTYCHO_BC_PERIODIC: out.kind = ptycho::BoundaryKind::periodic; break;
    case PTYCHO_BC_DARK: out.kind = ptycho::BoundaryKind::dark; break;
    case PTYCHO_BC_BRIGHT: out.kind = ptycho::BoundaryKind::bright; break;
    default: ptycho::fail(ptycho::ErrorCode::invalid_argument, "unknown boundary kind");
  }
  out.value = {bc.value_re, bc.value_im};
  out.enforce = bc.enforce != 0;
  ptycho::validate(out);
  return out;
}

ptycho::AmdrsConfig to_config(const ptycho_amdrs_config& c) {
  ptycho::AmdrsConfig out;
  out.drs.objective = c.objective == PTYCHO_POISSON ? ptycho::Objective::poisson : ptycho::Objective::gaussian;
  out.drs.rho = c.rho;
  out.drs.max_inner = c.max_inner;
  out.drs.rel_tol = c.inner_tol;
  out.max_epochs = c.max_epochs;
  out.outer_tol = c.outer_tol;
  out.stagnation_window = c.stagnation_window;
  out.rr_tol = c.rr_tol;
  switch (c.object_init) {
    case PTYCHO_INIT_RANDOM_PHASE: out.object_init = ptycho::ObjectInit::random_phase; break;
    case PTYCHO_INIT_ZERO: out.object_init = ptycho::ObjectInit::zero; break;
    case PTYCHO_INIT_CUSTOM: out.object_init = ptycho::ObjectInit::custom; break;
    default: ptycho::fail(ptycho::ErrorCode::invalid_argument, "unknown object_init");
  }
  out.start = c.start == PTYCHO_START_COLD ? ptycho::StartMode::cold : ptycho::StartMode::warm;
  out.seed = c.seed;
  out.eps_rel = c.eps_rel;
  out.record_timing = c.record_timing != 0;
  return out;
}

}  // namespace

extern "C" {

const char* ptycho_last_error(void) { return last_error.c_str(); }

const char* ptycho_status_name(ptycho_status s) {
  switch (s) {
    case PTYCHO_OK: return "ok";
    case PTYCHO_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case PTYCHO_ERR_SHAPE_MISMATCH: return "shape_mismatch";
    case PTYCHO_ERR_COVERAGE_HOLE: return "coverage_hole";
    case PTYCHO_ERR_NUMERICAL: return "numerical";
    case PTYCHO_ERR_IO: return "io";
    case PTYCHO_ERR_VERIFICATION: return "verification";
    case PTYCHO_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

void ptycho_string_free(char* s) { std::free(s); }

void ptycho_set_thread_cap(int threads) { ptycho::set_thread_cap(threads < 0 ? 0 : threads); }
int ptycho_worker_threads(void) { return ptycho::worker_threads(); }

uint64_t ptycho_derive_seed(uint64_t master, uint64_t stream) { return ptycho::derive_seed(master, stream); }

// ---------------------------------------------------------------- fields

ptycho_status ptycho_field_create(size_t rows, size_t cols, const double* interleaved, ptycho_field** out) {
  return guarded([&] {
    need(out, "out");
    ptycho::ComplexField2D f(rows, cols);
    if (interleaved)
      for (std::size_t i = 0; i < f.size(); ++i) f[i] = {interleaved[2 * i], interleaved[2 * i + 1]};
    *out = wrap_field(std::move(f));
  });
}

ptycho_status ptycho_field_clone(const ptycho_field* f, ptycho_field** out) {
  return guarded([&] {
    need(f, "field");
    need(out, "out");
    *out = wrap_field(f->f);
  });
}

void ptycho_field_free(ptycho_field* f) { delete f; }
size_t ptycho_field_rows(const ptycho_field* f) { return f ? f->f.rows() : 0; }
size_t ptycho_field_cols(const ptycho_field* f) { return f ? f->f.cols() : 0; }
double* ptycho_field_data(ptycho_field* f) { return f ? reinterpret_cast<double*>(f->f.data()) : nullptr; }
const double* ptycho_field_cdata(const ptycho_field* f) {
  return f ? reinterpret_cast<const double*>(f->f.data()) : nullptr;
}

ptycho_status ptycho_field_load_cpxf(const char* path, ptycho_field** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = wrap_field(ptycho::io::load_cpxf(path));
  });
}

ptycho_status ptycho_field_save_cpxf(const ptycho_field* f, const char* path) {
  return guarded([&] {
    need(f, "field");
    need(path, "path");
    ptycho::io::save_cpxf(path, f->f);
  });
}

ptycho_status ptycho_field_load_pgm(const char* path, ptycho_field** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = wrap_field(complexify(ptycho::io::load_pgm(path)));
  });
}

ptycho_status ptycho_field_save_magnitude_pgm(const ptycho_field* f, const char* path) {
  return guarded([&] {
    need(f, "field");
    need(path, "path");
    ptycho::io::save_magnitude_pgm(path, f->f);
  });
}

ptycho_status ptycho_field_save_phase_pgm(const ptycho_field* f, const char* path) {
  return guarded([&] {
    need(f, "field");
    need(path, "path");
    ptycho::io::save_phase_pgm(path, f->f);
  });
}

// ---------------------------------------------------------------- frames

void ptycho_frames_free(ptycho_frames* b) { delete b; }
size_t ptycho_frames_count(const ptycho_frames* b) { return b ? b->b.frames() : 0; }
size_t ptycho_frames_side(const ptycho_frames* b) { return b ? b->b.frame_rows() : 0; }
const double* ptycho_frames_data(const ptycho_frames* b) { return b ? b->b.data() : nullptr; }

ptycho_status ptycho_frames_load_ampf(const char* path, ptycho_frames** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    auto b = ptycho::io::load_ampf(path);
    ptycho::require(b.frame_rows() == b.frame_cols(), ptycho::ErrorCode::shape_mismatch,
                    "AMPF frames must be square");
    *out = wrap_frames(std::move(b));
  });
}

ptycho_status ptycho_frames_save_ampf(const ptycho_frames* b, const char* path) {
  return guarded([&] {
    need(b, "frames");
    need(path, "path");
    ptycho::io::save_ampf(path, b->b);
  });
}

// ---------------------------------------------------------------- scans

ptycho_status ptycho_plan_create(ptycho_scheme scheme, int grid_k, int grid_l, int tau, int jitter,
                                 uint64_t seed, int start_index, ptycho_plan** out) {
  return guarded([&] {
    need(out, "out");
    ptycho::ScanScheme s;
    switch (scheme) {
      case PTYCHO_SCAN_PLAIN_RASTER: s = ptycho::ScanScheme::plain_raster; break;
      case PTYCHO_SCAN_RANK_ONE: s = ptycho::ScanScheme::rank_one; break;
      case PTYCHO_SCAN_FULL_RANK: s = ptycho::ScanScheme::full_rank; break;
      default: ptycho::fail(ptycho::ErrorCode::invalid_argument, "unknown scan scheme");
    }
    auto plan = ptycho::make_scan(s, grid_k, grid_l, tau, jitter, seed);
    if (start_index != 0) plan = ptycho::reindex_raster(std::move(plan), start_index, start_index);
    *out = wrap<ptycho_plan>(std::move(plan));
  });
}

void ptycho_plan_free(ptycho_plan* p) { delete p; }
size_t ptycho_plan_size(const ptycho_plan* p) { return p ? p->p.size() : 0; }

ptycho_status ptycho_plan_position(const ptycho_plan* p, size_t i, int* x, int* y) {
  return guarded([&] {
    need(p, "plan");
    ptycho::require(i < p->p.size(), ptycho::ErrorCode::invalid_argument, "position index out of range");
    if (x) *x = p->p.positions[i].t.x;
    if (y) *y = p->p.positions[i].t.y;
  });
}

ptycho_status ptycho_plan_save(const ptycho_plan* p, const char* csv_path, const char* json_path) {
  return guarded([&] {
    need(p, "plan");
    need(csv_path, "csv_path");
    need(json_path, "json_path");
    ptycho::save_plan(p->p, csv_path, json_path);
  });
}

ptycho_status ptycho_plan_csv(const ptycho_plan* p, char** out) {
  return guarded([&] {
    need(p, "plan");
    need(out, "out");
    *out = dup_string(ptycho::plan_csv(p->p));
  });
}

ptycho_status ptycho_plan_json(const ptycho_plan* p, char** out) {
  return guarded([&] {
    need(p, "plan");
    need(out, "out");
    *out = dup_string(ptycho::plan_json(p->p));
  });
}

ptycho_status ptycho_plan_load(const char* csv_path, const char* json_path, ptycho_plan** out) {
  return guarded([&] {
    need(csv_path, "csv_path");
    need(json_path, "json_path");
    need(out, "out");
    *out = wrap<ptycho_plan>(ptycho::load_plan(csv_path, json_path));
  });
}

ptycho_status ptycho_scheme_from_string(const char* s, ptycho_scheme* out) {
  return guarded([&] {
    need(s, "string");
    need(out, "out");
    switch (ptycho::scan_scheme_from_string(s)) {
      case ptycho::ScanScheme::plain_raster: *out = PTYCHO_SCAN_PLAIN_RASTER; break;
      case ptycho::ScanScheme::rank_one: *out = PTYCHO_SCAN_RANK_ONE; break;
      case ptycho::ScanScheme::full_rank: *out = PTYCHO_SCAN_FULL_RANK; break;
    }
  });
}

// ---------------------------------------------------------------- geometry

ptycho_status ptycho_bc_kind_from_string(const char* s, ptycho_bc_kind* out) {
  return guarded([&] {
    need(s, "string");
    need(out, "out");
    switch (ptycho::boundary_kind_from_string(s)) {
      case ptycho::BoundaryKind::periodic: *out = PTYCHO_BC_PERIODIC; break;
      case ptycho::BoundaryKind::dark: *out = PTYCHO_BC_DARK; break;
      case ptycho::BoundaryKind::bright: *out = PTYCHO_BC_BRIGHT; break;
    }
  });
}

ptycho_status ptycho_geometry_create(const ptycho_plan* plan, int probe_m, int object_n, ptycho_bc bc,
                                     int pad_factor, ptycho_geometry** out) {
  return guarded([&] {
    need(plan, "plan");
    need(out, "out");
    ptycho::require(probe_m >= 1 && object_n >= 1, ptycho::ErrorCode::invalid_argument,
                    "probe and object sizes must be positive");
    const auto cbc = to_bc(bc);
    auto grid = ptycho::reconstruction_grid(plan->p, probe_m, object_n, cbc);
    *out = new ptycho_geometry{cbc, object_n, ptycho::ForwardGeometry(plan->p, probe_m, std::move(grid), pad_factor)};
  });
}

void ptycho_geometry_free(ptycho_geometry* g) { delete g; }
size_t ptycho_geometry_frames(const ptycho_geometry* g) { return g ? g->g.frames() : 0; }
int ptycho_geometry_frame_side(const ptycho_geometry* g) { return g ? g->g.frame_side() : 0; }
int ptycho_geometry_grid_rows(const ptycho_geometry* g) { return g ? g->g.grid().rows : 0; }
int ptycho_geometry_grid_cols(const ptycho_geometry* g) { return g ? g->g.grid().cols : 0; }

void ptycho_geometry_grid_origin(const ptycho_geometry* g, int* row, int* col) {
  if (row) *row = g ? g->g.grid().origin_row : 0;
  if (col) *col = g ? g->g.grid().origin_col : 0;
}

size_t ptycho_geometry_margin_pixels(const ptycho_geometry* g) { return g ? g->g.grid().margin_count() : 0; }

ptycho_status ptycho_extend_truth(const ptycho_geometry* g, const ptycho_field* object, ptycho_field** out) {
  return guarded([&] {
    need(g, "geometry");
    need(object, "object");
    need(out, "out");
    ptycho::require(object->f.rows() == static_cast<std::size_t>(g->n) &&
                        object->f.cols() == static_cast<std::size_t>(g->n),
                    ptycho::ErrorCode::shape_mismatch, "object must be n x n for this geometry");
    *out = wrap_field(ptycho::extend_truth(object->f, g->bc, g->g.grid()));
  });
}

ptycho_status ptycho_interior(const ptycho_geometry* g, const ptycho_field* object_on_m, ptycho_field** out) {
  return guarded([&] {
    need(g, "geometry");
    need(object_on_m, "object");
    need(out, "out");
    ptycho::require(object_on_m->f.rows() == static_cast<std::size_t>(g->g.grid().rows) &&
                        object_on_m->f.cols() == static_cast<std::size_t>(g->g.grid().cols),
                    ptycho::ErrorCode::shape_mismatch, "object does not live on the reconstruction grid");
    *out = wrap_field(ptycho::interior(object_on_m->f, g->g.grid()));
  });
}

ptycho_status ptycho_measure(const ptycho_geometry* g, const ptycho_field* probe, const ptycho_field* object_on_m,
                             ptycho_frames** out) {
  return guarded([&] {
    need(g, "geometry");
    need(probe, "probe");
    need(object_on_m, "object");
    need(out, "out");
    *out = wrap_frames(ptycho::measure(probe->f, object_on_m->f, g->g));
  });
}

// ---------------------------------------------------------------- objects and probes

ptycho_status ptycho_make_cib(const ptycho_field* image_a, const ptycho_field* image_b, ptycho_field** out) {
  return guarded([&] {
    need(image_a, "image_a");
    need(image_b, "image_b");
    need(out, "out");
    *out = wrap_field(ptycho::make_cib(real_part(image_a->f), real_part(image_b->f)).field);
  });
}

ptycho_status ptycho_synthetic_cib_image(int n, int which, ptycho_field** out) {
  return guarded([&] {
    need(out, "out");
    *out = wrap_field(complexify(ptycho::synthetic_cib_image(n, which)));
  });
}

ptycho_status ptycho_make_rpp(int n, uint64_t seed, ptycho_field** out) {
  return guarded([&] {
    need(out, "out");
    *out = wrap_field(ptycho::make_rpp(n, seed).field);
  });
}

ptycho_status ptycho_iid_probe(int m, uint64_t seed, ptycho_field** out) {
  return guarded([&] {
    need(out, "out");
    *out = wrap_field(ptycho::iid_probe(m, seed).field);
  });
}

ptycho_status ptycho_correlated_probe(int m, double c, uint64_t seed, ptycho_field** out) {
  return guarded([&] {
    need(out, "out");
    *out = wrap_field(ptycho::correlated_probe(m, c, seed).field);
  });
}

ptycho_status ptycho_ppc_init(const ptycho_field* truth, double kx, double ky, double delta, int object_n,
                              uint64_t seed, ptycho_field** out, int* guaranteed) {
  return guarded([&] {
    need(truth, "truth");
    need(out, "out");
    ptycho::Probe p{truth->f};
    auto init = ptycho::ppc_init(p, {kx, ky}, delta, object_n, seed);
    if (guaranteed) *guaranteed = init.guaranteed ? 1 : 0;
    *out = wrap_field(std::move(init.probe.field));
  });
}

ptycho_status ptycho_ppc_fraction(const ptycho_field* estimate, const ptycho_field* truth, double delta,
                                  double* fraction) {
  return guarded([&] {
    need(estimate, "estimate");
    need(truth, "truth");
    need(fraction, "fraction");
    *fraction = ptycho::ppc_predicate(estimate->f, truth->f, delta).fraction;
  });
}

// ---------------------------------------------------------------- noise and metrics

ptycho_status ptycho_poissonize(const ptycho_frames* clean, double photon_scale, uint64_t seed,
                                ptycho_frames** out) {
  return guarded([&] {
    need(clean, "frames");
    need(out, "out");
    *out = wrap_frames(ptycho::poissonize(clean->b, photon_scale, seed));
  });
}

ptycho_status ptycho_nsr(const ptycho_frames* noisy, const ptycho_frames* clean, double* out) {
  return guarded([&] {
    need(noisy, "noisy");
    need(clean, "clean");
    need(out, "out");
    *out = ptycho::nsr(noisy->b, clean->b);
  });
}

ptycho_status ptycho_calibrate_photon_scale(const ptycho_frames* clean, double target_nsr, uint64_t seed,
                                            double* photon_scale) {
  return guarded([&] {
    need(clean, "frames");
    need(photon_scale, "out");
    *photon_scale = ptycho::calibrate_photon_scale(clean->b, target_nsr, seed);
  });
}

ptycho_status ptycho_relative_error(const ptycho_field* truth, const ptycho_field* estimate, int discount_ramp,
                                    ptycho_metrics* out) {
  return guarded([&] {
    need(truth, "truth");
    need(estimate, "estimate");
    need(out, "out");
    const auto r = ptycho::relative_error(truth->f, estimate->f, discount_ramp != 0);
    *out = {r.re, r.re2, r.alpha_hat.real(), r.alpha_hat.imag(), r.k_hat[0], r.k_hat[1]};
  });
}

ptycho_status ptycho_relative_residual(const ptycho_geometry* g, const ptycho_frames* b, const ptycho_field* probe,
                                       const ptycho_field* object_on_m, double* out) {
  return guarded([&] {
    need(g, "geometry");
    need(b, "frames");
    need(probe, "probe");
    need(object_on_m, "object");
    need(out, "out");
    *out = ptycho::relative_residual(b->b, ptycho::exit_spectra(g->g, probe->f, object_on_m->f));
  });
}

// ---------------------------------------------------------------- reconstruction

void ptycho_amdrs_config_default(ptycho_amdrs_config* cfg) {
  if (!cfg) return;
  const ptycho::AmdrsConfig d;
  cfg->objective = d.drs.objective == ptycho::Objective::poisson ? PTYCHO_POISSON : PTYCHO_GAUSSIAN;
  cfg->rho = d.drs.rho;
  cfg->max_inner = d.drs.max_inner;
  cfg->inner_tol = d.drs.rel_tol;
  cfg->max_epochs = d.max_epochs;
  cfg->outer_tol = d.outer_tol;
  cfg->stagnation_window = d.stagnation_window;
  cfg->rr_tol = d.rr_tol;
  cfg->object_init = d.object_init == ptycho::ObjectInit::zero     ? PTYCHO_INIT_ZERO
                     : d.object_init == ptycho::ObjectInit::custom ? PTYCHO_INIT_CUSTOM
                                                                    : PTYCHO_INIT_RANDOM_PHASE;
  cfg->start = d.start == ptycho::StartMode::cold ? PTYCHO_START_COLD : PTYCHO_START_WARM;
  cfg->seed = d.seed;
  cfg->eps_rel = d.eps_rel;
  cfg->record_timing = d.record_timing ? 1 : 0;
}

ptycho_status ptycho_objective_from_string(const char* s, ptycho_objective* out) {
  return guarded([&] {
    need(s, "string");
    need(out, "out");
    *out = ptycho::objective_from_string(s) == ptycho::Objective::poisson ? PTYCHO_POISSON : PTYCHO_GAUSSIAN;
  });
}

ptycho_status ptycho_object_init_from_string(const char* s, ptycho_object_init* out) {
  return guarded([&] {
    need(s, "string");
    need(out, "out");
    switch (ptycho::object_init_from_string(s)) {
      case ptycho::ObjectInit::random_phase: *out = PTYCHO_INIT_RANDOM_PHASE; break;
      case ptycho::ObjectInit::zero: *out = PTYCHO_INIT_ZERO; break;
      case ptycho::ObjectInit::custom: *out = PTYCHO_INIT_CUSTOM; break;
    }
  });
}

ptycho_status ptycho_start_from_string(const char* s, ptycho_start* out) {
  return guarded([&] {
    need(s, "string");
    need(out, "out");
    *out = ptycho::start_mode_from_string(s) == ptycho::StartMode::cold ? PTYCHO_START_COLD : PTYCHO_START_WARM;
  });
}

ptycho_status ptycho_reconstruct(const ptycho_geometry* g, const ptycho_frames* b, const ptycho_field* probe_init,
                                 const ptycho_field* object_init, const ptycho_field* truth,
                                 const ptycho_amdrs_config* cfg, ptycho_history** out) {
  return guarded([&] {
    need(g, "geometry");
    need(b, "frames");
    need(probe_init, "probe_init");
    need(cfg, "config");
    need(out, "out");
    ptycho::AmdrsInputs in;
    in.b = &b->b;
    in.geometry = &g->g;
    in.bc = g->bc;
    in.probe_init = probe_init->f;
    if (object_init) in.object_init = object_init->f;
    if (truth) in.truth = truth->f;
    *out = new ptycho_history{ptycho::amdrs(in, to_config(*cfg))};
  });
}

void ptycho_history_free(ptycho_history* h) { delete h; }
size_t ptycho_history_epochs(const ptycho_history* h) { return h ? h->h.epochs.size() : 0; }

ptycho_status ptycho_history_epoch(const ptycho_history* h, size_t i, ptycho_epoch* out) {
  return guarded([&] {
    need(h, "history");
    need(out, "out");
    ptycho::require(i < h->h.epochs.size(), ptycho::ErrorCode::invalid_argument, "epoch index out of range");
    const auto& e = h->h.epochs[i];
    *out = {e.epoch, e.re, e.re2, e.rr, e.inner_obj, e.inner_probe, e.seconds};
  });
}

const char* ptycho_history_stop_reason(const ptycho_history* h) { return h ? h->h.stop_reason.c_str() : ""; }

ptycho_status ptycho_history_object(const ptycho_history* h, ptycho_field** out) {
  return guarded([&] {
    need(h, "history");
    need(out, "out");
    *out = wrap_field(h->h.object);
  });
}

ptycho_status ptycho_history_probe(const ptycho_history* h, ptycho_field** out) {
  return guarded([&] {
    need(h, "history");
    need(out, "out");
    *out = wrap_field(h->h.probe);
  });
}

ptycho_status ptycho_history_csv(const ptycho_history* h, char** out) {
  return guarded([&] {
    need(h, "history");
    need(out, "out");
    *out = dup_string(ptycho::history_csv(h->h));
  });
}

ptycho_status ptycho_fit_rate(const ptycho_history* h, ptycho_metric metric, int first_epoch, int last_epoch,
                              double* out) {
  return guarded([&] {
    need(h, "history");
    need(out, "out");
    const auto m = metric == PTYCHO_METRIC_RE2  ? ptycho::HistoryMetric::re2
                   : metric == PTYCHO_METRIC_RR ? ptycho::HistoryMetric::rr
                                                : ptycho::HistoryMetric::re;
    *out = ptycho::fit_rate(h->h, m, first_epoch, last_epoch);
  });
}

// ---------------------------------------------------------------- stability lab

void ptycho_stability_config_default(ptycho_stability_config* cfg) {
  if (!cfg) return;
  static const ptycho::stability::SuiteConfig d;
  cfg->n = d.n;
  cfg->m = d.m;
  cfg->tau = d.tau;
  cfg->pad = d.pad;
  cfg->seed = d.seed;
  cfg->rhos = d.rhos.data();
  cfg->rho_count = d.rhos.size();
  cfg->lambdas = d.lambdas.data();
  cfg->lambda_count = d.lambdas.size();
  cfg->noise_level = d.noise_level;
}

ptycho_status ptycho_stability_run(const ptycho_stability_config* cfg, char** json, int* all_pass) {
  return guarded([&] {
    need(cfg, "config");
    need(json, "json");
    ptycho::stability::SuiteConfig s;
    s.n = cfg->n;
    s.m = cfg->m;
    s.tau = cfg->tau;
    s.pad = cfg->pad;
    s.seed = cfg->seed;
    ptycho::require(cfg->rhos || cfg->rho_count == 0, ptycho::ErrorCode::invalid_argument, "rhos is NULL");
    ptycho::require(cfg->lambdas || cfg->lambda_count == 0, ptycho::ErrorCode::invalid_argument,
                    "lambdas is NULL");
    s.rhos.assign(cfg->rhos, cfg->rhos + cfg->rho_count);
    s.lambdas.assign(cfg->lambdas, cfg->lambdas + cfg->lambda_count);
    s.noise_level = cfg->noise_level;
    const auto reports = ptycho::stability::run_suite(s);
    *json = dup_string(ptycho::stability::to_json(reports));
    if (all_pass) *all_pass = ptycho::stability::all_pass(reports) ? 1 : 0;
  });
}

}  // extern "C"
