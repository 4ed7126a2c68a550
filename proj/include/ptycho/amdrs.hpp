#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ptycho/boundary.hpp"
#include "ptycho/drs.hpp"
#include "ptycho/forward_model.hpp"

namespace ptycho {

enum class ObjectInit { random_phase, zero, custom };
enum class StartMode { warm, cold };

std::string to_string(ObjectInit o);
ObjectInit object_init_from_string(const std::string& s);
std::string to_string(StartMode s);
StartMode start_mode_from_string(const std::string& s);

struct AmdrsConfig {
  DrsConfig drs;
  int max_epochs = 100;
  double outer_tol = 1e-6;     // RR stagnation: relative change over the window
  int stagnation_window = 5;
  double rr_tol = 1e-12;       // stop once the data are fit to this level
  ObjectInit object_init = ObjectInit::zero;
  StartMode start = StartMode::warm;
  std::uint64_t seed = 0;
  double eps_rel = 1e-12;
  bool record_timing = true;
};

void validate(const AmdrsConfig& cfg);

struct EpochRecord {
  int epoch = 0;
  double re = 0.0;
  double re2 = 0.0;
  double rr = 0.0;
  int inner_obj = 0;
  int inner_probe = 0;
  double seconds = 0.0;
  double data_residual = 0.0;  // ||A_k f_k| - b|| at the epoch's start
};

struct RunHistory {
  std::vector<EpochRecord> epochs;
  ComplexField2D object;  // final f on M
  ComplexField2D probe;   // final mu
  std::string stop_reason;
};

struct AmdrsInputs {
  const AmplitudeFrames* b = nullptr;
  const ForwardGeometry* geometry = nullptr;
  BoundaryCondition bc;
  ComplexField2D probe_init;
  std::optional<ComplexField2D> object_init;  // on M; required for ObjectInit::custom
  std::optional<ComplexField2D> truth;        // n x n interior, enables RE/RE2
};

RunHistory amdrs(const AmdrsInputs& in, const AmdrsConfig& cfg);

enum class HistoryMetric { re, re2, rr };

// exp(least-squares slope of log(metric) against epoch) over epochs [first, last].
double fit_rate(const RunHistory& history, HistoryMetric metric, int first_epoch, int last_epoch);
double fit_rate(const std::vector<double>& values, const std::vector<double>& epochs);

std::string history_csv(const RunHistory& history);

}  // namespace ptycho
