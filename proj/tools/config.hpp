#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ptycho_cli {

// Invalid or unreadable configuration; maps to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ObjectSpec {
  std::string kind = "cib";  // cib | rpp | custom
  int n = 256;
  std::uint64_t seed = 0;
  std::string image_a;  // PGM paths for cib; empty selects the synthetic stand-ins
  std::string image_b;
  std::string path;  // CPXF interior for custom
};

struct ProbeSpec {
  std::string kind = "iid";  // iid | correlated
  int m = 60;
  double c = 0.5;
  std::uint64_t seed = 0;
};

struct ScanSpec {
  std::string scheme = "full_rank";
  int tau = 0;
  int jitter = 4;
  int grid = 0;
  int start_index = 0;
  std::uint64_t seed = 0;
};

struct BcSpec {
  std::string kind = "periodic";
  double value = 255.0;
  double value_im = 0.0;
  bool enforce = false;
};

struct NoiseSpec {
  double photon_scale = 0.0;  // 0: noiseless
  double target_nsr = 0.0;    // > 0: calibrate photon_scale to this NSR instead
  std::uint64_t seed = 0;
};

struct SolverSpec {
  std::string objective = "poisson";
  double rho = 1.0;
  int max_inner = 60;
  double inner_tol = 1e-4;
  int max_epochs = 100;
  double outer_tol = 1e-6;
  int stagnation_window = 5;
  double rr_tol = 1e-12;
  std::string start = "warm";
  std::string object_init = "zero";
  double eps_rel = 1e-12;
  int pad = 2;
  bool timing = false;
  std::uint64_t seed = 0;
};

struct InitSpec {
  double kx = 0.0;
  double ky = 0.0;
  double delta = 0.5;
  std::uint64_t seed = 0;
};

struct SweepSpec {
  std::vector<double> nsr{0.02, 0.05, 0.1, 0.2, 0.35};
  int max_epochs = 100;
};

struct StabilitySpec {
  int n = 6;
  int m = 3;
  int tau = 2;
  int pad = 2;
  std::uint64_t seed = 0;
  std::vector<double> rhos{0.0, 0.5, 1.0, 2.0, 10.0};
  std::vector<double> lambdas{1e2, 1e3, 1e4, 1e5};
  double noise_level = 0.05;
};

struct MetricsSpec {
  std::string truth;     // n x n interior CPXF; empty: truth_interior.cpxf in the data dir
  std::string estimate;  // CPXF on M or n x n; empty: object_final.cpxf in the output dir
};

struct OutputSpec {
  bool pgm = true;
};

// Every default is resolved at load time, so the canonical JSON is the full
// experiment description.
struct ExperimentConfig {
  std::uint64_t seed = 1;
  ObjectSpec object;
  ProbeSpec probe;
  ScanSpec scan;
  BcSpec bc;
  NoiseSpec noise;
  SolverSpec solver;
  InitSpec init;
  SweepSpec sweep;
  StabilitySpec stability;
  MetricsSpec metrics;
  OutputSpec output;
};

// path may be empty (all defaults). overrides are "dotted.key=value" with the
// value parsed as a TOML value, falling back to a bare string. seed_override,
// when set, replaces the master seed before derived seeds are filled in.
ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides,
                             const std::uint64_t* seed_override);

std::string canonical_json(const ExperimentConfig& cfg);

// FNV-1a 64 of the canonical JSON, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

// Hash of the sections that determine the simulated data (object, probe,
// scan, boundary, noise, padding): reconstruct refuses data from another one.
std::string data_hash(const ExperimentConfig& cfg);

std::string fnv1a_hex(const std::string& bytes);

}  // namespace ptycho_cli
