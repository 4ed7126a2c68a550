// Acceptance suite: one pass/fail line per criterion.
//
//   acceptance [--profile reduced|full] [--only N]
//
// Exit status is 0 when every selected criterion passes.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "ptycho/amdrs.hpp"
#include "ptycho/drs.hpp"
#include "ptycho/metrics.hpp"
#include "ptycho/object.hpp"
#include "ptycho/probe.hpp"
#include "ptycho/stability.hpp"

using namespace ptycho;
namespace st = ptycho::stability;

namespace {

bool full_profile = false;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " FAIL[" << what << "]";
    }
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

void report_failures(const st::Report& r, Outcome& o) {
  for (const auto& c : r.checks)
    if (c.hard && !c.pass) o.require(false, r.name + "/" + c.name + " measured " + fmt("%.3g", c.measured));
}

// ---------------------------------------------------------------- 1

void criterion1(Outcome& o) {
  const int n = 6, m = 3, pad = 2;
  auto plan = make_full_rank(2, 2, 3, 1, 6);
  BoundaryCondition bc;
  ForwardGeometry geom(plan, m, reconstruction_grid(plan, m, n, bc), pad);
  Rng rng(2024);
  auto mu = oracle::random_field(m, m, rng);
  auto f = oracle::random_field(n, n, rng);
  ObjectOperator a(geom, mu);
  ProbeOperator b(geom, f);
  const auto da = oracle::dense_object_operator(plan, mu, n, pad);
  const auto db = oracle::dense_probe_operator(plan, f, m, pad);
  const auto pa = oracle::pinv(da), pb = oracle::pinv(db);

  double worst = 0.0, worst_adj = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    auto g = oracle::random_field(n, n, rng);
    auto nu = oracle::random_field(m, m, rng);
    auto u = oracle::random_frames(plan.size(), m * pad, rng);
    const auto ug = oracle::flatten(u);
    worst = std::max({worst, oracle::max_abs_diff(oracle::flatten(a.apply(g)), da * oracle::flatten(g)),
                      oracle::max_abs_diff(oracle::flatten(b.apply(nu)), db * oracle::flatten(nu)),
                      oracle::max_abs_diff(oracle::flatten(a.adjoint(u)), da.adjoint() * ug),
                      oracle::max_abs_diff(oracle::flatten(b.adjoint(u)), db.adjoint() * ug),
                      oracle::max_abs_diff(oracle::flatten(a.pinv(u)), pa * ug),
                      oracle::max_abs_diff(oracle::flatten(b.pinv(u)), pb * ug)});
    // <A g, u> = <g, A* u> and the same for B
    const cplx l1 = oracle::flatten(a.apply(g)).dot(ug), r1 = oracle::flatten(g).dot(oracle::flatten(a.adjoint(u)));
    const cplx l2 = oracle::flatten(b.apply(nu)).dot(ug), r2 = oracle::flatten(nu).dot(oracle::flatten(b.adjoint(u)));
    worst_adj = std::max({worst_adj, std::abs(l1 - r1) / std::max(1.0, std::abs(l1)),
                          std::abs(l2 - r2) / std::max(1.0, std::abs(l2))});
  }
  o.detail << "dense max diff " << fmt("%.2e", worst) << ", adjoint identity " << fmt("%.2e", worst_adj);
  o.require(worst <= 1e-8, "dense agreement 1e-8");
  o.require(worst_adj <= 1e-10, "adjoint identity 1e-10");
}

// ---------------------------------------------------------------- 2

void criterion2(Outcome& o) {
  const std::vector<double> rhos{0.1, 0.5, 1.0, 2.0, 10.0};
  struct Case {
    int n, m, tau;
  };
  double worst = 0.0;
  for (const Case& c : {Case{6, 3, 2}, Case{32, 8, 4}}) {
    auto plan = make_full_rank(c.n / c.tau, c.n / c.tau, c.tau, 1, 13);
    BoundaryCondition bc;
    ForwardGeometry geom(plan, c.m, reconstruction_grid(plan, c.m, c.n, bc), 2);
    Rng rng(c.n);
    auto mu = iid_probe(c.m, 4).field;
    auto f = oracle::random_field(c.n, c.n, rng);
    auto r = st::fixed_point_residuals(geom, mu, f, rhos);
    report_failures(r, o);
    for (const auto& ch : r.checks) worst = std::max(worst, ch.measured);
  }
  o.detail << "worst fixed-point residual " << fmt("%.2e", worst);
}

// ---------------------------------------------------------------- 3

void criterion3(Outcome& o) {
  Rng rng(31);
  auto gauss = [](cplx z, cplx w, double b, double rho) {
    const double d = std::abs(z) - b;
    return 0.5 * d * d + 0.5 * rho * std::norm(z - w);
  };
  auto poisson = [](cplx z, cplx w, double b, double rho) {
    const double r2 = std::norm(z);
    return r2 - b * b * std::log(r2) + 0.5 * rho * std::norm(z - w);
  };
  int beaten_g = 0, beaten_p = 0;
  double worst_root = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const cplx w = std::polar(rng.uniform(0.0, 5.0), rng.uniform(-std::numbers::pi, std::numbers::pi));
    const double b = rng.uniform(0.01, 5.0), rho = std::exp(rng.uniform(std::log(0.01), std::log(100.0)));
    const cplx zg = prox_gaussian(w, b, rho), zp = prox_poisson(w, b, rho);
    const double cg = gauss(zg, w, b, rho), cp = poisson(zp, w, b, rho);
    for (int k = 0; k < 100; ++k) {
      const cplx d = std::polar(1e-3, rng.uniform(-std::numbers::pi, std::numbers::pi));
      if (gauss(zg + d, w, b, rho) < cg) ++beaten_g;
      if (poisson(zp + d, w, b, rho) < cp) ++beaten_p;
    }
    const double r = std::abs(zp);
    const double residual = (2 + rho) * r * r - rho * std::abs(w) * r - 2 * b * b;
    worst_root = std::max(worst_root, std::abs(residual) / std::max(1.0, 2 * b * b));
  }
  o.detail << "beaten gaussian " << beaten_g << ", poisson " << beaten_p << ", root residual "
           << fmt("%.2e", worst_root);
  o.require(beaten_g == 0, "gaussian prox optimal");
  o.require(beaten_p == 0, "poisson prox optimal");
  o.require(worst_root <= 1e-10, "poisson root 1e-10");
}

// ---------------------------------------------------------------- shared experiment setup

struct Experiment {
  int n, m, tau;
  ScanScheme scheme = ScanScheme::full_rank;
  BoundaryCondition bc;
  std::array<double, 2> ramp{0.0, 0.0};
  double nsr_target = 0.0;
  Objective objective = Objective::gaussian;
  int epochs = 50;
  int max_inner = 60;
};

struct ExperimentResult {
  RunHistory history;
  double measured_nsr = 0.0;
};

ExperimentResult run_experiment(const Experiment& e) {
  auto cib = make_cib(synthetic_cib_image(e.n, 0), synthetic_cib_image(e.n, 1));
  // Non-periodic runs add one raster step before the object so the overhang
  // covers the whole boundary ring.
  const int lead = e.bc.kind == BoundaryKind::periodic ? 0 : 1;
  auto plan = reindex_raster(make_scan(e.scheme, e.n / e.tau + lead, e.n / e.tau + lead, e.tau, 4, 11), -lead, -lead);
  auto grid = reconstruction_grid(plan, e.m, e.n, e.bc);
  ForwardGeometry geom(plan, e.m, grid, 2);
  auto probe = iid_probe(e.m, 5);
  auto b = measure(probe.field, extend_truth(cib.field, e.bc, grid), geom);
  ExperimentResult res;
  if (e.nsr_target > 0) {
    auto clean = b;
    b = poissonize(clean, calibrate_photon_scale(clean, e.nsr_target, 77), 77);
    res.measured_nsr = nsr(b, clean);
  }
  auto init = ppc_init(probe, e.ramp, 0.5, e.n, 8);
  AmdrsConfig cfg;
  cfg.max_epochs = e.epochs;
  cfg.drs.objective = e.objective;
  cfg.drs.max_inner = e.max_inner;
  cfg.seed = 3;
  cfg.record_timing = false;
  AmdrsInputs in;
  in.b = &b;
  in.geometry = &geom;
  in.bc = e.bc;
  in.probe_init = init.probe.field;
  in.truth = cib.field;
  res.history = amdrs(in, cfg);
  return res;
}

int epochs_to_re2(const RunHistory& h, double level) {
  for (const auto& e : h.epochs)
    if (e.re2 < level) return e.epoch;
  return -1;
}

// ---------------------------------------------------------------- 4

void criterion4(Outcome& o) {
  Experiment base{full_profile ? 256 : 128, full_profile ? 60 : 32, full_profile ? 30 : 16};
  double rate[2][2];
  for (int s = 0; s < 2; ++s)
    for (int obj = 0; obj < 2; ++obj) {
      Experiment e = base;
      e.scheme = s == 0 ? ScanScheme::full_rank : ScanScheme::rank_one;
      e.objective = obj == 0 ? Objective::gaussian : Objective::poisson;
      auto h = run_experiment(e).history;
      const bool enough = h.epochs.size() >= 50;
      rate[s][obj] = enough ? fit_rate(h, HistoryMetric::re, 5, 50) : NAN;
      const std::string tag = to_string(e.scheme) + "/" + to_string(e.objective);
      o.detail << tag << " rate " << fmt("%.4f", rate[s][obj]) << " final RE " << fmt("%.2e", h.epochs.back().re)
               << "; ";
      o.require(enough, tag + " ran 50 epochs");
      o.require(rate[s][obj] < 0.90, tag + " rate < 0.90");
    }
  for (int obj = 0; obj < 2; ++obj)
    o.require(rate[0][obj] <= rate[1][obj], std::string(obj ? "poisson" : "gaussian") + " full-rank <= rank-one");
}

// ---------------------------------------------------------------- 5

void criterion5(Outcome& o) {
  Experiment base{full_profile ? 256 : 128, full_profile ? 60 : 32, full_profile ? 30 : 16};
  base.epochs = 100;
  for (double target : {0.02, 0.05, 0.10, 0.20}) {
    Experiment e = base;
    e.nsr_target = target;
    auto r = run_experiment(e);
    const double ratio = r.history.epochs.back().re / r.measured_nsr;
    o.detail << "nsr " << fmt("%.3f", r.measured_nsr) << " RE/NSR " << fmt("%.2f", ratio) << "; ";
    o.require(ratio >= 0.2 && ratio <= 3.0, "RE/NSR in [0.2, 3] at " + fmt("%.2f", target));
  }
  Experiment e = base;
  e.nsr_target = 0.35;
  const double rg = run_experiment(e).history.epochs.back().re;
  e.objective = Objective::poisson;
  const double rp = run_experiment(e).history.epochs.back().re;
  o.detail << "at 35%: gaussian " << fmt("%.3f", rg) << " poisson " << fmt("%.3f", rp);
  o.require(rp > rg, "poisson RE > gaussian RE at 35%");
}

// ---------------------------------------------------------------- 6

void criterion6(Outcome& o) {
  Experiment base{full_profile ? 256 : 128, full_profile ? 60 : 32, full_profile ? 30 : 16};

  // (a) enforced vs unenforced, same seeds
  for (auto kind : {BoundaryKind::dark, BoundaryKind::bright}) {
    double rate[2];
    for (int enforce = 0; enforce < 2; ++enforce) {
      Experiment e = base;
      e.bc = BoundaryCondition{kind, kind == BoundaryKind::bright ? cplx(255.0) : cplx(0.0), enforce == 1};
      e.max_inner = 30;
      rate[enforce] = fit_rate(run_experiment(e).history, HistoryMetric::re, 5, 50);
    }
    const std::string tag = to_string(kind);
    o.detail << "(a) " << tag << " rate enforced " << fmt("%.4f", rate[1]) << " vs " << fmt("%.4f", rate[0]) << "; ";
    o.require(rate[1] <= rate[0], "(a) " + tag + " enforced rate <= unenforced");
  }

  // (b) and (c): PPC with a half-integer ramp
  Experiment ramped = base;
  ramped.ramp = {-0.5, 0.5};
  ramped.epochs = 80;
  int hit[2];
  double value_of[2] = {255.0, 100.0};
  for (int i = 0; i < 2; ++i) {
    Experiment e = ramped;
    e.bc = BoundaryCondition{BoundaryKind::bright, cplx(value_of[i]), true};
    auto h = run_experiment(e).history;
    hit[i] = epochs_to_re2(h, 1e-2);
    o.detail << "bright " << value_of[i] << " RE2 < 1e-2 at epoch " << hit[i] << " (final "
             << fmt("%.2e", h.epochs.back().re2) << "); ";
  }
  o.require(hit[0] > 0, "(b) bright 255 drives RE2 below 1e-2");

  Experiment periodic = ramped;
  auto hp = run_experiment(periodic).history;
  const double re = hp.epochs.back().re, re2 = hp.epochs.back().re2;
  o.detail << "periodic RE " << fmt("%.2e", re) << " RE2 " << fmt("%.2e", re2) << "; ";
  o.require(re < 1e-2, "(b) periodic RE < 1e-2");
  o.require(re2 > 0.1, "(b) periodic RE2 > 0.1");

  o.require(hit[0] > 0 && (hit[1] < 0 || hit[0] < hit[1]), "(c) value 255 converges in fewer epochs than 100");
}

// ---------------------------------------------------------------- 7

void criterion7(Outcome& o) {
  st::SuiteConfig cfg;
  auto p = st::tiny_problem(cfg);
  BoundaryCondition bc;
  ForwardGeometry geom(p.plan, cfg.m, reconstruction_grid(p.plan, cfg.m, cfg.n, bc), cfg.pad);
  auto inst = st::build_dense(geom, p.probe, p.object, 1.0);
  const std::vector<double> rhos{0.0, 0.5, 1.0, 2.0, 10.0};
  auto solution = st::verify_solution_stability(inst, rhos);
  auto jac = st::jacobian_checks(inst, cfg.seed);
  auto blocks = st::block_spectrum_check(inst, rhos);
  for (const auto* r : {&solution, &jac, &blocks}) report_failures(*r, o);

  double worst_norm = 0.0;
  for (const auto& c : solution.checks)
    if (c.name.rfind("norm_J[", 0) == 0 || c.name.rfind("norm_J(rho", 0) == 0) worst_norm = std::max(worst_norm, c.measured);
  o.detail << "checks " << solution.checks.size() + jac.checks.size() + blocks.checks.size();
  if (worst_norm > 0) o.detail << ", max |J| " << fmt("%.12f", worst_norm);
  for (const auto& c : blocks.checks)
    if (!c.hard) o.detail << "; " << c.name << ": " << c.detail;
}

// ---------------------------------------------------------------- 8

void criterion8(Outcome& o) {
  auto r = st::poisson_gaussian_limit({1e2, 1e3, 1e4, 1e5});
  report_failures(r, o);
  for (const auto& c : r.checks)
    if (c.name == "tv_decay_exponent") o.detail << "TV exponent " << fmt("%.3f", c.measured);
}

// ---------------------------------------------------------------- 9

ComplexField2D ambiguous(const ComplexField2D& f, double kx, double ky, cplx alpha) {
  ComplexField2D g = f;
  const double n = static_cast<double>(f.rows());
  for (std::size_t r = 0; r < f.rows(); ++r)
    for (std::size_t c = 0; c < f.cols(); ++c)
      g(r, c) = alpha * f(r, c) * std::polar(1.0, oracle::two_pi * (kx * c + ky * r) / n);
  return g;
}

void criterion9(Outcome& o) {
  Rng rng(90);
  double worst_re = 0.0, worst_re2 = 0.0;
  int ordered = 0;
  auto cib = make_cib(synthetic_cib_image(64, 0), synthetic_cib_image(64, 1)).field;
  for (int i = 0; i < 20; ++i) {
    const auto& f = i == 0 ? cib : oracle::random_field(32, 32, rng);
    const cplx alpha = std::polar(rng.uniform(0.2, 4.0), rng.uniform(-std::numbers::pi, std::numbers::pi));
    const double kx = rng.uniform_int(-4, 4), ky = rng.uniform_int(-4, 4);
    worst_re = std::max(worst_re, relative_error(f, ambiguous(f, kx, ky, alpha)).re);
    worst_re2 = std::max(worst_re2, relative_error(f, ambiguous(f, 0, 0, alpha)).re2);
  }
  for (int i = 0; i < 100; ++i) {
    auto f = oracle::random_field(16, 16, rng);
    auto g = i % 2 ? ambiguous(f, rng.uniform_int(-2, 2), rng.uniform_int(-2, 2), cplx(0.7, -0.3))
                   : oracle::random_field(16, 16, rng);
    for (auto& z : g) z += 0.05 * cplx(rng.normal(), rng.normal());
    auto m = relative_error(f, g);
    if (m.re <= m.re2 + 1e-12) ++ordered;
  }
  o.detail << "max RE under scale+phase+ramp " << fmt("%.2e", worst_re) << ", max RE2 under scale+phase "
           << fmt("%.2e", worst_re2) << ", RE <= RE2 in " << ordered << "/100";
  o.require(worst_re <= 1e-4, "RE = 0 modulo ramps");
  o.require(worst_re2 <= 1e-4, "RE2 = 0 modulo scaling");
  o.require(ordered == 100, "RE <= RE2");
}

struct Criterion {
  int id;
  const char* title;
  double budget_seconds;  // reduced-profile runtime limit
  std::function<void(Outcome&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (!std::strcmp(argv[i], "--only") && i + 1 < argc) only = std::atoi(argv[++i]);
    else if (!std::strcmp(argv[i], "--profile") && i + 1 < argc) full_profile = !std::strcmp(argv[++i], "full");
    else {
      std::fprintf(stderr, "usage: %s [--profile reduced|full] [--only N]\n", argv[0]);
      return 2;
    }
  }

  const std::vector<Criterion> criteria{
      {1, "oracle equivalence", 10, criterion1},
      {2, "fixed-point suite", 10, criterion2},
      {3, "prox optimality", 5, criterion3},
      {4, "geometric RE decay and scan ordering", 300, criterion4},
      {5, "noise sweep", 45 * 60, criterion5},
      {6, "boundary-condition effects", 20 * 60, criterion6},
      {7, "stability lab", 60, criterion7},
      {8, "Poisson-Gaussian asymptotics", 10, criterion8},
      {9, "metric correctness", 30, criterion9},
  };

  bool all = true;
  for (const auto& c : criteria) {
    if (only && c.id != only) continue;
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    // The full profile targets a faster machine; only the reduced budgets are enforced.
    if (!full_profile) o.require(secs <= c.budget_seconds, "runtime budget " + fmt("%.0f s", c.budget_seconds));
    std::printf("[%s] criterion %d (%s, %.1f s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.title, secs,
                o.detail.str().c_str());
    std::fflush(stdout);
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
