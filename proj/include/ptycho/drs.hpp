#pragma once

#include <string>
#include <vector>

#include "ptycho/field.hpp"
#include "ptycho/forward_model.hpp"

namespace ptycho {

enum class Objective { gaussian, poisson };

std::string to_string(Objective o);
Objective objective_from_string(const std::string& s);

struct DrsConfig {
  double rho = 1.0;
  int max_inner = 60;
  double rel_tol = 1e-4;
  Objective objective = Objective::gaussian;
};

void validate(const DrsConfig& cfg);

// argmin_z 1/2 (|z| - b)^2 + rho/2 |z - w|^2
cplx prox_gaussian(cplx w, double b, double rho);

// argmin_z |z|^2 - b^2 ln|z|^2 + rho/2 |z - w|^2, rho > 0
cplx prox_poisson(cplx w, double b, double rho);

// One DRS update from u and its projection Pu (both pixelwise maps after P).
ComplexFrames gaussian_drs_update(const ComplexFrames& u, const ComplexFrames& pu,
                                  const AmplitudeFrames& b, double rho);
ComplexFrames poisson_drs_update(const ComplexFrames& u, const ComplexFrames& pu,
                                 const AmplitudeFrames& b, double rho);

ComplexFrames gaussian_drs_step(const ComplexFrames& u, const AmplitudeFrames& b,
                                const FrameProjector& proj, double rho);
ComplexFrames poisson_drs_step(const ComplexFrames& u, const AmplitudeFrames& b,
                               const FrameProjector& proj, double rho);

struct InnerState {
  ComplexFrames u;
  std::vector<double> residual_history;  // ||P u^l| - b||, l = 0..iterations_run
  int iterations_run = 0;
};

// Iterate until the relative residual decrease drops to rel_tol, the residual
// reaches rounding level, or max_inner steps have run. A residual increase does
// not stop the loop.
InnerState run_inner(ComplexFrames u_init, const AmplitudeFrames& b, const FrameProjector& proj,
                     const DrsConfig& cfg);

}  // namespace ptycho
