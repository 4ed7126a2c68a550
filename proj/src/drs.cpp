#include "ptycho/drs.hpp"

#include <cmath>
#include <limits>

namespace ptycho {
namespace {

void check_shapes(const ComplexFrames& u, const ComplexFrames& pu, const AmplitudeFrames& b) {
  require(u.same_shape(pu) && u.same_shape(b), ErrorCode::shape_mismatch,
          "DRS step: iterate, projection and data shapes differ");
}

}  // namespace

std::string to_string(Objective o) { return o == Objective::gaussian ? "gaussian" : "poisson"; }

Objective objective_from_string(const std::string& s) {
  if (s == "gaussian") return Objective::gaussian;
  if (s == "poisson") return Objective::poisson;
  fail(ErrorCode::invalid_argument, "unknown objective '" + s + "'");
}

void validate(const DrsConfig& cfg) {
  require(std::isfinite(cfg.rho) && cfg.rho >= 0.0, ErrorCode::invalid_argument, "rho must be >= 0");
  require(cfg.objective != Objective::poisson || cfg.rho > 0.0, ErrorCode::invalid_argument,
          "the Poisson prox needs rho > 0");
  require(cfg.max_inner >= 1, ErrorCode::invalid_argument, "max_inner must be >= 1");
  require(cfg.rel_tol > 0.0, ErrorCode::invalid_argument, "rel_tol must be > 0");
}

cplx prox_gaussian(cplx w, double b, double rho) {
  return (b / (rho + 1.0)) * sgn(w) + (rho / (rho + 1.0)) * w;
}

cplx prox_poisson(cplx w, double b, double rho) {
  require(rho > 0.0, ErrorCode::invalid_argument, "the Poisson prox needs rho > 0");
  const double a = std::abs(w);
  const double r = (rho * a + std::sqrt(rho * rho * a * a + 8.0 * (2.0 + rho) * b * b)) /
                   (2.0 * (2.0 + rho));
  return r * sgn(w);
}

ComplexFrames gaussian_drs_update(const ComplexFrames& u, const ComplexFrames& pu,
                                  const AmplitudeFrames& b, double rho) {
  check_shapes(u, pu, b);
  ComplexFrames out(u.frames(), u.frame_rows(), u.frame_cols());
  const double cu = 1.0 / (rho + 1.0);
  const double cp = (rho - 1.0) / (rho + 1.0);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const cplx ru = 2.0 * pu[i] - u[i];
    out[i] = cu * u[i] + cp * pu[i] + cu * b[i] * sgn(ru);
  }
  return out;
}

ComplexFrames poisson_drs_update(const ComplexFrames& u, const ComplexFrames& pu,
                                 const AmplitudeFrames& b, double rho) {
  check_shapes(u, pu, b);
  require(rho > 0.0, ErrorCode::invalid_argument, "Poisson DRS needs rho > 0");
  ComplexFrames out(u.frames(), u.frame_rows(), u.frame_cols());
  const double c1 = 1.0 / (rho + 2.0);
  const double c2 = 1.0 / (2.0 * (2.0 + rho));
  const double k = 8.0 * (2.0 + rho);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const cplx ru = 2.0 * pu[i] - u[i];
    const double a = std::abs(ru);
    out[i] = 0.5 * u[i] - c1 * ru + c2 * std::sqrt(rho * rho * a * a + k * b[i] * b[i]) * sgn(ru);
  }
  return out;
}

ComplexFrames gaussian_drs_step(const ComplexFrames& u, const AmplitudeFrames& b,
                                const FrameProjector& proj, double rho) {
  return gaussian_drs_update(u, proj.project(u), b, rho);
}

ComplexFrames poisson_drs_step(const ComplexFrames& u, const AmplitudeFrames& b,
                               const FrameProjector& proj, double rho) {
  return poisson_drs_update(u, proj.project(u), b, rho);
}

InnerState run_inner(ComplexFrames u_init, const AmplitudeFrames& b, const FrameProjector& proj,
                     const DrsConfig& cfg) {
  validate(cfg);
  require(u_init.same_shape(b), ErrorCode::shape_mismatch, "run_inner: iterate and data shapes differ");
  InnerState st{std::move(u_init), {}, 0};
  auto y = proj.project(st.u);
  st.residual_history.push_back(amplitude_residual(y.values(), b.values()));
  // Below this the residual is rounding noise and its relative change means nothing.
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() * norm2(b.values());
  for (int l = 0; l < cfg.max_inner; ++l) {
    st.u = cfg.objective == Objective::gaussian ? gaussian_drs_update(st.u, y, b, cfg.rho)
                                                : poisson_drs_update(st.u, y, b, cfg.rho);
    y = proj.project(st.u);
    const double prev = st.residual_history.back();
    const double cur = amplitude_residual(y.values(), b.values());
    st.residual_history.push_back(cur);
    ++st.iterations_run;
    if (!std::isfinite(cur)) break;
    if (prev <= floor || cur <= floor) break;
    const double decrease = (prev - cur) / prev;
    if (decrease >= 0.0 && decrease <= cfg.rel_tol) break;
  }
  return st;
}

}  // namespace ptycho
