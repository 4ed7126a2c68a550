#include "ptycho/amdrs.hpp"

#include <chrono>
#include <limits>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "ptycho/metrics.hpp"
#include "ptycho/random.hpp"

namespace ptycho {
namespace {

void check_finite(const ComplexField2D& f, int epoch, const char* what) {
  if (!all_finite(f.values()))
    fail(ErrorCode::numerical, std::string("non-finite ") + what + " at epoch " + std::to_string(epoch));
}

ComplexField2D initial_object(const AmdrsInputs& in, const AmdrsConfig& cfg, const ObjectOperator& a) {
  const auto& geom = *in.geometry;
  switch (cfg.object_init) {
    case ObjectInit::zero: return geom.zero_object();
    case ObjectInit::custom: {
      require(in.object_init.has_value(), ErrorCode::invalid_argument,
              "object_init = custom needs an initial object");
      require(in.object_init->rows() == static_cast<std::size_t>(geom.grid().rows) &&
                  in.object_init->cols() == static_cast<std::size_t>(geom.grid().cols),
              ErrorCode::shape_mismatch, "initial object does not live on the reconstruction grid");
      return enforce_bc(*in.object_init, in.bc, geom.grid());
    }
    case ObjectInit::random_phase: break;
  }
  Rng rng(derive_seed(cfg.seed, 1));
  auto f = geom.zero_object();
  for (auto& z : f) z = std::polar(1.0, 2.0 * std::numbers::pi * rng.uniform01());
  // Match the data energy so the run does not depend on the probe's overall scale.
  const double an = norm2(a.apply(f).values());
  const double bn = norm2(in.b->values());
  if (an > 0.0 && bn > 0.0)
    for (auto& z : f) z *= bn / an;
  return enforce_bc(f, in.bc, geom.grid());
}

void fmt(std::ostringstream& os, double v) {
  if (std::isnan(v)) {
    os << "nan";
    return;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  os << buf;
}

}  // namespace

std::string to_string(ObjectInit o) {
  switch (o) {
    case ObjectInit::random_phase: return "random_phase";
    case ObjectInit::zero: return "zero";
    case ObjectInit::custom: return "custom";
  }
  return "?";
}

ObjectInit object_init_from_string(const std::string& s) {
  if (s == "random_phase") return ObjectInit::random_phase;
  if (s == "zero") return ObjectInit::zero;
  if (s == "custom" || s == "truth") return ObjectInit::custom;
  fail(ErrorCode::invalid_argument, "unknown object_init '" + s + "'");
}

std::string to_string(StartMode s) { return s == StartMode::warm ? "warm" : "cold"; }

StartMode start_mode_from_string(const std::string& s) {
  if (s == "warm") return StartMode::warm;
  if (s == "cold") return StartMode::cold;
  fail(ErrorCode::invalid_argument, "unknown start mode '" + s + "'");
}

void validate(const AmdrsConfig& cfg) {
  validate(cfg.drs);
  require(cfg.max_epochs >= 1, ErrorCode::invalid_argument, "max_epochs must be >= 1");
  require(cfg.stagnation_window >= 1, ErrorCode::invalid_argument, "stagnation window must be >= 1");
  require(cfg.outer_tol >= 0.0 && cfg.rr_tol >= 0.0, ErrorCode::invalid_argument,
          "outer tolerances must be non-negative");
  require(cfg.eps_rel > 0.0, ErrorCode::invalid_argument, "eps_rel must be > 0");
}

RunHistory amdrs(const AmdrsInputs& in, const AmdrsConfig& cfg) {
  validate(cfg);
  require(in.b && in.geometry, ErrorCode::invalid_argument, "amdrs: data and geometry are required");
  validate(in.bc);
  const auto& geom = *in.geometry;
  const auto& b = *in.b;
  {
    const auto s = static_cast<std::size_t>(geom.frame_side());
    require(b.frames() == geom.frames() && b.frame_rows() == s && b.frame_cols() == s,
            ErrorCode::shape_mismatch, "data frames do not match the scan geometry");
  }
  const double bnorm = norm2(b.values());
  require(bnorm > 0.0, ErrorCode::invalid_argument, "amdrs: data are identically zero");
  if (in.truth)
    require(in.truth->rows() == static_cast<std::size_t>(geom.grid().n) &&
                in.truth->cols() == static_cast<std::size_t>(geom.grid().n),
            ErrorCode::shape_mismatch, "truth must be the n x n object interior");

  const bool enforcing = in.bc.enforce && in.bc.kind != BoundaryKind::periodic;
  RunHistory hist;
  ComplexField2D mu = in.probe_init;
  ComplexFrames u, v;
  ComplexField2D f;
  using clock = std::chrono::steady_clock;

  for (int k = 1; k <= cfg.max_epochs; ++k) {
    const auto t0 = clock::now();
    EpochRecord rec;
    rec.epoch = k;

    const ObjectOperator a(geom, mu, cfg.eps_rel);
    if (k == 1) f = initial_object(in, cfg, a);
    auto af = a.apply(f);
    rec.data_residual = amplitude_residual(af.values(), b.values());
    // An enforced margin moves f off A_k^+ u, so the warm iterate is re-anchored
    // at A_k f_k; otherwise the object loop keeps undoing the enforcement.
    if (k == 1 || cfg.start == StartMode::cold || enforcing) u = std::move(af);
    auto obj = run_inner(std::move(u), b, a, cfg.drs);
    u = std::move(obj.u);
    rec.inner_obj = obj.iterations_run;
    f = enforce_bc(a.pinv(u), in.bc, geom.grid());
    check_finite(f, k, "object");

    const ProbeOperator pb(geom, f, cfg.eps_rel);
    if (k == 1 || cfg.start == StartMode::cold) v = pb.apply(mu);
    auto prb = run_inner(std::move(v), b, pb, cfg.drs);
    v = std::move(prb.u);
    rec.inner_probe = prb.iterations_run;
    mu = pb.pinv(v);
    check_finite(mu, k, "probe");

    rec.rr = relative_residual(b, pb.apply(mu));
    if (!std::isfinite(rec.rr)) fail(ErrorCode::numerical, "non-finite residual at epoch " + std::to_string(k));
    if (in.truth) {
      const auto rep = relative_error(*in.truth, interior(f, geom.grid()), true);
      rec.re = rep.re;
      rec.re2 = rep.re2;
    } else {
      rec.re = rec.re2 = std::numeric_limits<double>::quiet_NaN();
    }
    if (cfg.record_timing) rec.seconds = std::chrono::duration<double>(clock::now() - t0).count();
    hist.epochs.push_back(rec);

    if (rec.rr < cfg.rr_tol) {
      hist.stop_reason = "converged";
      break;
    }
    const auto w = static_cast<std::size_t>(cfg.stagnation_window);
    if (hist.epochs.size() > w) {
      const double old = hist.epochs[hist.epochs.size() - 1 - w].rr;
      if (old > 0.0 && std::abs(rec.rr - old) / old < cfg.outer_tol) {
        hist.stop_reason = "stagnated";
        break;
      }
    }
  }
  if (hist.stop_reason.empty()) hist.stop_reason = "max_epochs";
  hist.object = std::move(f);
  hist.probe = std::move(mu);
  return hist;
}

double fit_rate(const std::vector<double>& values, const std::vector<double>& epochs) {
  require(values.size() == epochs.size() && values.size() >= 2, ErrorCode::invalid_argument,
          "fit_rate needs at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    require(values[i] > 0.0 && std::isfinite(values[i]), ErrorCode::invalid_argument,
            "fit_rate: metric must be positive on the window");
    const double x = epochs[i], y = std::log(values[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double den = n * sxx - sx * sx;
  require(den != 0.0, ErrorCode::invalid_argument, "fit_rate: degenerate epoch window");
  return std::exp((n * sxy - sx * sy) / den);
}

double fit_rate(const RunHistory& history, HistoryMetric metric, int first_epoch, int last_epoch) {
  std::vector<double> vals, xs;
  for (const auto& e : history.epochs) {
    if (e.epoch < first_epoch || e.epoch > last_epoch) continue;
    xs.push_back(e.epoch);
    vals.push_back(metric == HistoryMetric::re ? e.re : metric == HistoryMetric::re2 ? e.re2 : e.rr);
  }
  return fit_rate(vals, xs);
}

std::string history_csv(const RunHistory& history) {
  std::ostringstream os;
  os << "epoch,re,re2,rr,inner_obj,inner_probe,seconds\n";
  for (const auto& e : history.epochs) {
    os << e.epoch << ',';
    fmt(os, e.re);
    os << ',';
    fmt(os, e.re2);
    os << ',';
    fmt(os, e.rr);
    os << ',' << e.inner_obj << ',' << e.inner_probe << ',';
    fmt(os, e.seconds);
    os << '\n';
  }
  return os.str();
}

}  // namespace ptycho
