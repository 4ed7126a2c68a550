#include "doctest.h"
#include "oracles.hpp"
#include "ptycho/drs.hpp"
#include "ptycho/forward_model.hpp"
#include "ptycho/probe.hpp"

using namespace ptycho;

namespace {

double gaussian_cost(cplx z, cplx w, double b, double rho) {
  const double d = std::abs(z) - b;
  return 0.5 * d * d + 0.5 * rho * std::norm(z - w);
}

double poisson_cost(cplx z, cplx w, double b, double rho) {
  const double r2 = std::norm(z);
  return r2 - b * b * std::log(r2) + 0.5 * rho * std::norm(z - w);
}

struct Instance {
  int n, m;
  ScanPlan plan;
  BoundaryCondition bc;
  ReconstructionGrid grid;
  ForwardGeometry geom;
  ComplexField2D probe, object;
  AmplitudeFrames b;
  ComplexFrames u0;

  Instance(int n_, int m_, int tau, std::uint64_t seed)
      : n(n_), m(m_), plan(make_full_rank(n_ / tau, n_ / tau, tau, 1, seed)), grid(reconstruction_grid(plan, m, n, bc)),
        geom(plan, m, grid, 2) {
    Rng rng(seed + 100);
    probe = iid_probe(m, seed).field;
    object = oracle::random_field(static_cast<std::size_t>(n), static_cast<std::size_t>(n), rng);
    u0 = exit_spectra(geom, probe, object);
    b = modulus(u0);
  }
};

double frames_diff(const ComplexFrames& a, const ComplexFrames& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

}  // namespace

TEST_CASE("Gaussian prox examples") {
  CHECK(std::abs(prox_gaussian({2.0, 0.0}, 4.0, 1.0) - cplx(3.0, 0.0)) < 1e-15);
  CHECK(std::abs(prox_gaussian({0.0, 0.0}, 1.0, 1.0) - cplx(0.5, 0.0)) < 1e-15);
  const cplx w = std::polar(2.5, 1.1);
  CHECK(std::abs(prox_gaussian(w, 2.5, 0.7) - w) < 1e-15);
}

TEST_CASE("Poisson prox examples and the root equation") {
  const double r = std::abs(prox_poisson({1.0, 0.0}, 2.0, 1.0));
  CHECK(std::abs(r - (1.0 + std::sqrt(97.0)) / 6.0) < 1e-14);
  const cplx w = std::polar(1.7, -2.0);
  CHECK(std::abs(std::abs(prox_poisson(w, 1.7, 3.0)) - 1.7) < 1e-14);
  // b = 0: argmin |z|^2 + rho/2 |z - w|^2 is rho w / (2 + rho).
  CHECK(std::abs(prox_poisson(w, 0.0, 2.0) - 2.0 * w / 4.0) < 1e-15);
}

TEST_CASE("prox points beat a brute-force scalar search") {
  Rng rng(44);
  for (int i = 0; i < 30; ++i) {
    const cplx w = std::polar(3.0 * rng.uniform01(), rng.uniform(-3.0, 3.0));
    const double b = 3.0 * rng.uniform01(), rho = rng.uniform(0.1, 5.0);
    auto g = [&](cplx z) { return gaussian_cost(z, w, b, rho); };
    auto p = [&](cplx z) { return std::norm(z) > 0 ? poisson_cost(z, w, b, rho) : 1e300; };
    const cplx zg = prox_gaussian(w, b, rho), zp = prox_poisson(w, b, rho);
    CHECK(g(zg) <= g(oracle::brute_argmin(g, zg, 1.0)) + 1e-12);
    CHECK(p(zp) <= p(oracle::brute_argmin(p, zp, 0.5 * std::abs(zp) + 0.1)) + 1e-12);
  }
}

TEST_CASE("prox optimality against 100 perturbations, 1000 cases per objective") {
  Rng rng(7);
  int g_fail = 0, p_fail = 0;
  double worst_root = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const cplx w = std::polar(5.0 * rng.uniform01(), rng.uniform(-3.2, 3.2));
    const double b = 5.0 * rng.uniform01();
    const double rho_g = rng.uniform(0.0, 10.0), rho_p = rng.uniform(0.01, 10.0);
    const cplx zg = prox_gaussian(w, b, rho_g), zp = prox_poisson(w, b, rho_p);
    const double cg = gaussian_cost(zg, w, b, rho_g), cp = poisson_cost(zp, w, b, rho_p);
    for (int j = 0; j < 100; ++j) {
      const cplx d = std::polar(1e-3, rng.uniform(-3.2, 3.2));
      if (gaussian_cost(zg + d, w, b, rho_g) < cg) ++g_fail;
      if (poisson_cost(zp + d, w, b, rho_p) < cp) ++p_fail;
    }
    const double r = std::abs(zp);
    worst_root = std::max(worst_root, std::abs((2 + rho_p) * r * r - rho_p * std::abs(w) * r - 2 * b * b));
  }
  CHECK(g_fail == 0);
  CHECK(p_fail == 0);
  CHECK(worst_root < 1e-10);
}

TEST_CASE("noiseless solution is a fixed point of both updates for every rho") {
  Instance t(16, 8, 4, 3);
  ObjectOperator a(t.geom, t.probe);
  for (double rho : {0.0, 0.1, 0.5, 1.0, 2.0, 10.0}) {
    CHECK(frames_diff(gaussian_drs_step(t.u0, t.b, a, rho), t.u0) < 1e-12);
    if (rho > 0.0) CHECK(frames_diff(poisson_drs_step(t.u0, t.b, a, rho), t.u0) < 1e-12);
  }
}

TEST_CASE("updates match the three-line DRS oracle y = Pu, z = prox(2y - u), u' = u + z - y") {
  Instance t(6, 3, 3, 2);
  ObjectOperator a(t.geom, t.probe);
  Rng rng(5);
  auto u = oracle::random_frames(t.geom.frames(), 6, rng);
  auto y = a.project(u);
  for (double rho : {0.0, 0.5, 1.0, 4.0}) {
    ComplexFrames ref_g(u.frames(), 6, 6), ref_p(u.frames(), 6, 6);
    for (std::size_t i = 0; i < u.size(); ++i) {
      const cplx w = 2.0 * y[i] - u[i];
      ref_g[i] = u[i] + prox_gaussian(w, t.b[i], rho) - y[i];
      if (rho > 0.0) ref_p[i] = u[i] + prox_poisson(w, t.b[i], rho) - y[i];
    }
    CHECK(frames_diff(gaussian_drs_step(u, t.b, a, rho), ref_g) < 1e-12);
    if (rho > 0.0) CHECK(frames_diff(poisson_drs_step(u, t.b, a, rho), ref_p) < 1e-12);
  }
}

TEST_CASE("rho = 0 Gaussian step is the classical Douglas-Rachford update u - Pu + b sgn(Ru)") {
  Instance t(6, 3, 3, 4);
  ObjectOperator a(t.geom, t.probe);
  Rng rng(6);
  auto u = oracle::random_frames(t.geom.frames(), 6, rng);
  auto pu = a.project(u);
  ComplexFrames ref(u.frames(), 6, 6);
  for (std::size_t i = 0; i < u.size(); ++i) ref[i] = u[i] - pu[i] + t.b[i] * sgn(2.0 * pu[i] - u[i]);
  CHECK(frames_diff(gaussian_drs_step(u, t.b, a, 0.0), ref) < 1e-12);
}

TEST_CASE("run_inner: stops immediately at the solution; honours the cap exactly") {
  Instance t(16, 8, 4, 7);
  ObjectOperator a(t.geom, t.probe);
  DrsConfig cfg;
  auto st = run_inner(t.u0, t.b, a, cfg);
  CHECK(st.iterations_run == 1);
  CHECK(frames_diff(st.u, t.u0) < 1e-12);

  Rng rng(1);
  cfg.max_inner = 80;
  cfg.rel_tol = 1e-5;
  ComplexFrames far(t.geom.frames(), 16, 16);
  for (std::size_t i = 0; i < far.size(); ++i) far[i] = t.b[i] * std::polar(1.0, rng.uniform(-3.0, 3.0));
  auto capped = run_inner(far, t.b, a, cfg);
  CHECK(capped.iterations_run <= 80);
  CHECK(capped.residual_history.size() == static_cast<std::size_t>(capped.iterations_run) + 1);
  cfg.max_inner = 3;
  CHECK(run_inner(far, t.b, a, cfg).iterations_run == 3);
}

TEST_CASE("run_inner decreases the residual on most steps of a random noiseless instance") {
  Instance t(16, 8, 4, 11);
  ObjectOperator a(t.geom, t.probe);
  Rng rng(2);
  ComplexFrames u(t.geom.frames(), 16, 16);
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = t.b[i] * std::polar(1.0, rng.uniform(-3.0, 3.0));
  DrsConfig cfg;
  cfg.max_inner = 100;
  cfg.rel_tol = 1e-12;
  auto st = run_inner(u, t.b, a, cfg);
  int down = 0;
  for (std::size_t i = 1; i < st.residual_history.size(); ++i)
    down += st.residual_history[i] <= st.residual_history[i - 1];
  CHECK(st.iterations_run >= 10);
  CHECK(down >= 0.9 * st.iterations_run);
}

TEST_CASE("DRS configuration and shape validation") {
  Instance t(6, 3, 3, 1);
  ObjectOperator a(t.geom, t.probe);
  DrsConfig cfg;
  cfg.objective = Objective::poisson;
  cfg.rho = 0.0;
  CHECK_THROWS_AS(run_inner(t.u0, t.b, a, cfg), Error);
  cfg.rho = -1.0;
  cfg.objective = Objective::gaussian;
  CHECK_THROWS_AS(validate(cfg), Error);
  CHECK_THROWS_AS(gaussian_drs_update(t.u0, t.u0, AmplitudeFrames(1, 6, 6), 1.0), Error);
  CHECK_THROWS_AS(objective_from_string("laplace"), Error);
  CHECK(objective_from_string("poisson") == Objective::poisson);
}
