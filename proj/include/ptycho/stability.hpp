#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ptycho/forward_model.hpp"

namespace ptycho::stability {

// One verified quantity. Soft checks are reported but never fail a report.
struct Check {
  std::string name;
  double tolerance = 0.0;
  double measured = 0.0;
  bool pass = false;
  bool hard = true;
  std::string detail;
};

struct Report {
  std::string name;
  std::vector<Check> checks;

  // measured <= tolerance
  Check& bound(std::string check, double measured, double tolerance, bool hard = true);
  Check& status(std::string check, bool ok, std::string detail, double measured = 0.0);
  bool pass() const;
};

std::string to_json(const std::vector<Report>& reports);
bool all_pass(const std::vector<Report>& reports);

// Columns are the operator applied to unit basis fields, flattened frame-major.
Eigen::MatrixXcd dense_matrix(const ObjectOperator& a);
Eigen::MatrixXcd dense_matrix(const ProbeOperator& b);

// Moore-Penrose pseudoinverse by SVD, singular values below rel_tol * max dropped.
Eigen::MatrixXcd svd_pinv(const Eigen::MatrixXcd& m, double rel_tol = 1e-12);

Eigen::VectorXcd to_vector(const ComplexFrames& u);
ComplexFrames to_frames(const Eigen::VectorXcd& v, std::size_t frames, std::size_t side);

// Gaussian-DRS fixed-point data for the object subproblem with A frozen.
struct DenseInstance {
  Eigen::MatrixXcd a;      // N x |M|
  Eigen::VectorXd b;       // data amplitudes
  Eigen::VectorXcd u;      // evaluation iterate
  Eigen::MatrixXcd p;      // A A^+
  Eigen::VectorXcd x;      // R u = (2P - I) u
  Eigen::VectorXcd omega;  // sgn(x)
  Eigen::MatrixXcd g;      // orthonormal basis of range(C), C = diag(omega)^* A
  int rank = 0;
  double rho = 1.0;
  std::size_t frames = 0;
  std::size_t side = 0;

  std::size_t dim() const { return static_cast<std::size_t>(b.size()); }
  double c() const { return 1.0 / (1.0 + rho); }
};

// Dense instance at the noiseless solution u = A f, b = |A f|.
// Size guard: object side n <= 8, probe side m <= 4, N <= 4096.
DenseInstance build_dense(const ForwardGeometry& geom, const ComplexField2D& probe,
                          const ComplexField2D& object_on_m, double rho);

// Dense instance at an arbitrary iterate u. Rejects |x| < 1e-12 anywhere.
DenseInstance dense_at(Eigen::MatrixXcd a, Eigen::VectorXd b, Eigen::VectorXcd u, double rho,
                       std::size_t frames, std::size_t side);

// CC^+ eta - c [Re(2CC^+ eta - eta) + i (1 - b/|x|) Im(2CC^+ eta - eta)], c = 1/(1+rho).
Eigen::VectorXcd jacobian_apply(const DenseInstance& inst, const Eigen::VectorXcd& eta);
// Reduced form valid at a solution: CC^+ eta + c Re(eta - 2CC^+ eta).
Eigen::VectorXcd jacobian_apply_solution(const DenseInstance& inst, const Eigen::VectorXcd& eta);

// One Gaussian-DRS step on the dense instance, through the production update.
Eigen::VectorXcd gaussian_drs_map(const DenseInstance& inst, const Eigen::VectorXcd& u);

using RealLinearOperator = std::function<Eigen::VectorXcd(const Eigen::VectorXcd&)>;

// 2N x 2N real matrix acting on (Re eta, Im eta).
Eigen::MatrixXd real_embedding(const RealLinearOperator& op, std::size_t n);
Eigen::MatrixXd jacobian_matrix(const DenseInstance& inst);

struct NormEstimate {
  double svd = 0.0;    // largest singular value from a full decomposition
  double power = 0.0;  // power iteration on M^T M
  int iterations = 0;
};
NormEstimate operator_norm(const Eigen::MatrixXd& m, std::uint64_t seed = 1,
                           int max_iterations = 20000);

// Eigenvalues of one 2x2 block in closed form, and the block itself.
std::array<std::complex<double>, 2> block_eigenvalues(double lambda, double rho);
// Same with 1 - lambda^2 written as the squared partner singular value, which
// stays accurate where the radical is ill-conditioned (rho -> 0, lambda -> 1).
std::array<std::complex<double>, 2> block_eigenvalues(double lambda, double lambda_partner, double rho);
Eigen::Matrix2d block_matrix(double lambda, double lambda_partner, double rho);

// Dense-factor sanity: A*A diagonal with the coverage weights, GG* a Hermitian
// idempotent, and A agreeing with apply_A on random fields.
Report dense_checks(const ObjectOperator& a, const DenseInstance& inst, std::uint64_t seed);

Report verify_solution_stability(const DenseInstance& at_solution, const std::vector<double>& rhos);
Report jacobian_checks(const DenseInstance& inst, std::uint64_t seed);
Report block_spectrum_check(const DenseInstance& at_solution, const std::vector<double>& rhos);

// Fixed-point equations at a noiseless solution on the production operators:
// one Gaussian/Poisson step, the object and probe fixed-point residuals, and
// x = A f = b sgn(x) = B mu.
Report fixed_point_residuals(const ForwardGeometry& geom, const ComplexField2D& probe,
                             const ComplexField2D& object_on_m, const std::vector<double>& rhos);

// Builds a non-solution fixed point of Gaussian DRS (rho = 1) from noisy data on
// a dense instance, checks the fixed-point identities there and searches the
// family eta = i(alpha|x| + beta b) for an expanding direction.
Report non_solution_instability(const DenseInstance& clean_solution, double noise_level,
                                std::uint64_t seed, int restarts = 1000);

// Poisson vs Gaussian asymptotics: total-variation decay, prox agreement with
// matched curvature, and the surrogate cost comparison.
Report poisson_gaussian_limit(const std::vector<double>& lambdas, std::uint64_t seed = 1);
double poisson_gaussian_tv(double lambda);

struct SuiteConfig {
  int n = 6;
  int m = 3;
  int tau = 2;
  int pad = 2;
  std::uint64_t seed = 1;
  std::vector<double> rhos{0.0, 0.5, 1.0, 2.0, 10.0};
  std::vector<double> lambdas{1e2, 1e3, 1e4, 1e5};
  double noise_level = 0.05;
};

// The tiny periodic instance used by the suite: plain raster, i.i.d. probe,
// complex Gaussian object.
struct TinyProblem {
  ScanPlan plan;
  ComplexField2D probe;
  ComplexField2D object;
};
TinyProblem tiny_problem(const SuiteConfig& cfg);

std::vector<Report> run_suite(const SuiteConfig& cfg);

}  // namespace ptycho::stability
