#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "config.hpp"
#include "json.hpp"
#include "ptycho/ptycho.h"

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;
using namespace ptycho_cli;

namespace {

enum Exit { exit_ok = 0, exit_config = 1, exit_numerical = 2, exit_verification = 3 };

// A failed C API call, carrying its status.
struct ApiError : std::runtime_error {
  ptycho_status status;
  ApiError(ptycho_status s, const std::string& what) : std::runtime_error(what), status(s) {}
};

void check(ptycho_status s, const std::string& context) {
  if (s != PTYCHO_OK) throw ApiError(s, context + ": " + ptycho_last_error());
}

int exit_code(ptycho_status s) {
  switch (s) {
    case PTYCHO_ERR_NUMERICAL:
    case PTYCHO_ERR_INTERNAL: return exit_numerical;
    case PTYCHO_ERR_VERIFICATION: return exit_verification;
    default: return exit_config;
  }
}

template <auto Free>
struct Deleter {
  template <typename T>
  void operator()(T* p) const { Free(p); }
};
using Field = std::unique_ptr<ptycho_field, Deleter<ptycho_field_free>>;
using Frames = std::unique_ptr<ptycho_frames, Deleter<ptycho_frames_free>>;
using Plan = std::unique_ptr<ptycho_plan, Deleter<ptycho_plan_free>>;
using Geometry = std::unique_ptr<ptycho_geometry, Deleter<ptycho_geometry_free>>;
using History = std::unique_ptr<ptycho_history, Deleter<ptycho_history_free>>;

std::string take(char* s) {
  std::string out(s ? s : "");
  ptycho_string_free(s);
  return out;
}

// Every file goes through here: plain names inside the output directory only,
// each recorded in manifest.json together with the config hash.
class Output {
 public:
  Output(fs::path dir, std::string command, const ExperimentConfig& cfg)
      : dir_(std::move(dir)), command_(std::move(command)), hash_(config_hash(cfg)), data_hash_(data_hash(cfg)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec || !fs::is_directory(dir_)) throw ConfigError("cannot create output directory '" + dir_.string() + "'");
    write_text("config_" + command_ + ".json", canonical_json(cfg));
  }

  const std::string& hash() const { return hash_; }
  const fs::path& dir() const { return dir_; }

  fs::path path(const std::string& name) {
    if (name.empty() || name.find('/') != std::string::npos || name.find('\\') != std::string::npos ||
        name == "." || name == "..")
      throw ConfigError("refusing to write '" + name + "' outside the output directory");
    files_.push_back(name);
    return dir_ / name;
  }

  void write_text(const std::string& name, const std::string& body) {
    std::ofstream out(path(name), std::ios::binary);
    out << body;
    if (!out) throw ApiError(PTYCHO_ERR_IO, "cannot write " + (dir_ / name).string());
  }

  void write_csv(const std::string& name, const std::string& body) {
    write_text(name, "# config_hash=" + hash_ + "\n" + body);
  }

  void write_json(const std::string& name, Json body) {
    Json j;
    j["config_hash"] = hash_;
    for (auto& [k, v] : body.items()) j[k] = v;
    write_text(name, j.dump(2) + "\n");
  }

  // Binary formats have no room for the hash, so each gets a <name>.meta.json.
  void save_field(const std::string& name, const ptycho_field* f) {
    check(ptycho_field_save_cpxf(f, path(name).c_str()), "save " + name);
    sidecar(name, {{"rows", ptycho_field_rows(f)}, {"cols", ptycho_field_cols(f)}});
  }
  void save_frames(const std::string& name, const ptycho_frames* b) {
    check(ptycho_frames_save_ampf(b, path(name).c_str()), "save " + name);
    sidecar(name, {{"frames", ptycho_frames_count(b)}, {"side", ptycho_frames_side(b)}});
  }
  void render(const std::string& stem, const ptycho_field* f) {
    for (const char* what : {"mag", "phase"}) {
      const std::string name = stem + "_" + what + ".pgm";
      const auto p = path(name);
      check(what[0] == 'm' ? ptycho_field_save_magnitude_pgm(f, p.c_str()) : ptycho_field_save_phase_pgm(f, p.c_str()),
            "render " + stem);
      sidecar(name, {{"rows", ptycho_field_rows(f)}, {"cols", ptycho_field_cols(f)}, {"render", what}});
    }
  }
  void sidecar(const std::string& name, Json info) {
    Json j;
    j["file"] = name;
    j["data_hash"] = data_hash_;
    for (auto& [k, v] : info.items()) j[k] = v;
    write_json(name + ".meta.json", j);
  }

  // Merges this command's entry into manifest.json; keeps other commands' entries.
  void finish(Json extra = Json::object()) {
    const fs::path mpath = dir_ / "manifest.json";
    Json manifest = Json::object();
    if (std::ifstream in(mpath); in) {
      try {
        in >> manifest;
      } catch (const std::exception&) {
        manifest = Json::object();
      }
    }
    if (!manifest.contains("commands")) manifest["commands"] = Json::object();
    Json entry;
    entry["config_hash"] = hash_;
    entry["data_hash"] = data_hash_;
    std::vector<std::string> files = files_;
    std::sort(files.begin(), files.end());
    files.erase(std::unique(files.begin(), files.end()), files.end());
    entry["files"] = files;
    for (auto& [k, v] : extra.items()) entry[k] = v;
    manifest["commands"][command_] = entry;
    std::ofstream out(mpath, std::ios::binary);
    out << manifest.dump(2) << "\n";
    if (!out) throw ApiError(PTYCHO_ERR_IO, "cannot write " + mpath.string());
  }

 private:
  fs::path dir_;
  std::string command_;
  std::string hash_;
  std::string data_hash_;
  std::vector<std::string> files_;
};

// ---------------------------------------------------------------- experiment assembly

ptycho_bc make_bc(const ExperimentConfig& c) {
  ptycho_bc bc{PTYCHO_BC_PERIODIC, c.bc.value, c.bc.value_im, c.bc.enforce ? 1 : 0};
  check(ptycho_bc_kind_from_string(c.bc.kind.c_str(), &bc.kind), "bc.kind");
  return bc;
}

Plan make_plan(const ExperimentConfig& c) {
  ptycho_scheme scheme;
  check(ptycho_scheme_from_string(c.scan.scheme.c_str(), &scheme), "scan.scheme");
  ptycho_plan* p = nullptr;
  check(ptycho_plan_create(scheme, c.scan.grid, c.scan.grid, c.scan.tau, c.scan.jitter, c.scan.seed,
                           c.scan.start_index, &p),
        "scan");
  return Plan(p);
}

Geometry make_geometry(const ExperimentConfig& c, const ptycho_plan* plan) {
  ptycho_geometry* g = nullptr;
  check(ptycho_geometry_create(plan, c.probe.m, c.object.n, make_bc(c), c.solver.pad, &g), "geometry");
  return Geometry(g);
}

Field make_object(const ExperimentConfig& c) {
  ptycho_field* f = nullptr;
  if (c.object.kind == "rpp") {
    check(ptycho_make_rpp(c.object.n, c.object.seed, &f), "object");
  } else if (c.object.kind == "custom") {
    check(ptycho_field_load_cpxf(c.object.path.c_str(), &f), "object.path");
  } else {
    ptycho_field *a = nullptr, *b = nullptr;
    if (c.object.image_a.empty()) {
      check(ptycho_synthetic_cib_image(c.object.n, 0, &a), "object");
      Field ga(a);
      check(ptycho_synthetic_cib_image(c.object.n, 1, &b), "object");
      Field gb(b);
      check(ptycho_make_cib(ga.get(), gb.get(), &f), "object");
    } else {
      check(ptycho_field_load_pgm(c.object.image_a.c_str(), &a), "object.image_a");
      Field ga(a);
      check(ptycho_field_load_pgm(c.object.image_b.c_str(), &b), "object.image_b");
      Field gb(b);
      check(ptycho_make_cib(ga.get(), gb.get(), &f), "object");
    }
  }
  Field out(f);
  if (ptycho_field_rows(f) != static_cast<size_t>(c.object.n) || ptycho_field_cols(f) != static_cast<size_t>(c.object.n))
    throw ConfigError("object is " + std::to_string(ptycho_field_rows(f)) + "x" + std::to_string(ptycho_field_cols(f)) +
                      " but object.n = " + std::to_string(c.object.n));
  return out;
}

Field make_probe(const ExperimentConfig& c) {
  ptycho_field* f = nullptr;
  if (c.probe.kind == "correlated")
    check(ptycho_correlated_probe(c.probe.m, c.probe.c, c.probe.seed, &f), "probe");
  else
    check(ptycho_iid_probe(c.probe.m, c.probe.seed, &f), "probe");
  return Field(f);
}

ptycho_amdrs_config solver_config(const ExperimentConfig& c) {
  ptycho_amdrs_config s;
  ptycho_amdrs_config_default(&s);
  check(ptycho_objective_from_string(c.solver.objective.c_str(), &s.objective), "solver.objective");
  check(ptycho_start_from_string(c.solver.start.c_str(), &s.start), "solver.start");
  check(ptycho_object_init_from_string(c.solver.object_init.c_str(), &s.object_init), "solver.object_init");
  s.rho = c.solver.rho;
  s.max_inner = c.solver.max_inner;
  s.inner_tol = c.solver.inner_tol;
  s.max_epochs = c.solver.max_epochs;
  s.outer_tol = c.solver.outer_tol;
  s.stagnation_window = c.solver.stagnation_window;
  s.rr_tol = c.solver.rr_tol;
  s.seed = c.solver.seed;
  s.eps_rel = c.solver.eps_rel;
  s.record_timing = c.solver.timing ? 1 : 0;
  return s;
}

Field ppc_probe(const ExperimentConfig& c, const ptycho_field* truth) {
  ptycho_field* f = nullptr;
  int guaranteed = 0;
  check(ptycho_ppc_init(truth, c.init.kx, c.init.ky, c.init.delta, c.object.n, c.init.seed, &f, &guaranteed), "init");
  return Field(f);
}

struct Simulated {
  Plan plan;
  Geometry geom;
  Field object;      // n x n
  Field object_m;    // on M
  Field probe;
  Frames clean;
  Frames data;       // clean or noisy
  double photon_scale = 0.0;
  double nsr = 0.0;
};

Simulated simulate(const ExperimentConfig& c) {
  Simulated s;
  s.plan = make_plan(c);
  s.geom = make_geometry(c, s.plan.get());
  s.object = make_object(c);
  s.probe = make_probe(c);
  ptycho_field* fm = nullptr;
  check(ptycho_extend_truth(s.geom.get(), s.object.get(), &fm), "extend_truth");
  s.object_m.reset(fm);
  ptycho_frames* b = nullptr;
  check(ptycho_measure(s.geom.get(), s.probe.get(), s.object_m.get(), &b), "measure");
  s.clean.reset(b);
  s.photon_scale = c.noise.photon_scale;
  if (c.noise.target_nsr > 0.0)
    check(ptycho_calibrate_photon_scale(s.clean.get(), c.noise.target_nsr, c.noise.seed, &s.photon_scale),
          "noise.target_nsr");
  if (s.photon_scale > 0.0) {
    ptycho_frames* nb = nullptr;
    check(ptycho_poissonize(s.clean.get(), s.photon_scale, c.noise.seed, &nb), "poissonize");
    s.data.reset(nb);
    check(ptycho_nsr(s.data.get(), s.clean.get(), &s.nsr), "nsr");
  }
  return s;
}

Json num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json history_summary(const ptycho_history* h) {
  Json j;
  const size_t n = ptycho_history_epochs(h);
  j["epochs"] = n;
  j["stop_reason"] = ptycho_history_stop_reason(h);
  if (n > 0) {
    ptycho_epoch e;
    check(ptycho_history_epoch(h, n - 1, &e), "history");
    j["final"] = {{"re", num(e.re)}, {"re2", num(e.re2)}, {"rr", num(e.rr)}};
  }
  double rate = NAN;
  if (n >= 50 && ptycho_fit_rate(h, PTYCHO_METRIC_RE, 5, 50, &rate) == PTYCHO_OK)
    j["re_rate_5_50"] = num(rate);
  else
    j["re_rate_5_50"] = nullptr;
  return j;
}

// ---------------------------------------------------------------- subcommands

struct Common {
  std::string config;
  std::string out = "out";
  std::string data;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::vector<std::string> sets;
};

ExperimentConfig load(const Common& o) {
  const std::uint64_t seed = o.seed.value_or(0);
  return load_config(o.config, o.sets, o.seed ? &seed : nullptr);
}

int cmd_simulate(const Common& o) {
  const auto cfg = load(o);
  Output out(o.out, "simulate", cfg);
  auto s = simulate(cfg);
  const ptycho_frames* data = s.data ? s.data.get() : s.clean.get();
  out.save_frames("data.ampf", data);
  if (s.data) out.save_frames("data_clean.ampf", s.clean.get());
  out.save_field("object_truth.cpxf", s.object_m.get());
  out.save_field("truth_interior.cpxf", s.object.get());
  out.save_field("probe_truth.cpxf", s.probe.get());
  out.write_csv("plan.csv", take([&] { char* x = nullptr; check(ptycho_plan_csv(s.plan.get(), &x), "plan"); return x; }()));
  out.write_text("plan.json", take([&] { char* x = nullptr; check(ptycho_plan_json(s.plan.get(), &x), "plan"); return x; }()));
  if (cfg.output.pgm) {
    out.render("object_truth", s.object_m.get());
    out.render("probe_truth", s.probe.get());
  }
  int r0 = 0, c0 = 0;
  ptycho_geometry_grid_origin(s.geom.get(), &r0, &c0);
  Json summary;
  summary["frames"] = ptycho_geometry_frames(s.geom.get());
  summary["frame_side"] = ptycho_geometry_frame_side(s.geom.get());
  summary["grid"] = {{"rows", ptycho_geometry_grid_rows(s.geom.get())},
                     {"cols", ptycho_geometry_grid_cols(s.geom.get())},
                     {"origin_row", r0},
                     {"origin_col", c0},
                     {"margin_pixels", ptycho_geometry_margin_pixels(s.geom.get())}};
  summary["photon_scale"] = s.photon_scale;
  summary["nsr"] = s.nsr;
  out.write_json("simulate.json", summary);
  out.finish();
  return exit_ok;
}

std::string data_dir(const Common& o) { return o.data.empty() ? o.out : o.data; }

void check_data_hash(const fs::path& dir, const ExperimentConfig& cfg) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw ConfigError("missing " + (dir / "manifest.json").string() + "; run simulate first");
  Json m;
  try {
    in >> m;
  } catch (const std::exception& e) {
    throw ConfigError((dir / "manifest.json").string() + ": " + e.what());
  }
  const auto& entry = m["commands"]["simulate"];
  if (!entry.is_object()) throw ConfigError("no simulate outputs recorded in " + (dir / "manifest.json").string());
  const std::string want = data_hash(cfg);
  if (entry.value("data_hash", std::string()) != want)
    throw ConfigError("data in " + dir.string() + " were simulated from a different object/probe/scan/bc/noise "
                      "configuration (data_hash " + entry.value("data_hash", std::string("?")) + " != " + want + ")");
}

Field load_field(const fs::path& p) {
  if (!fs::exists(p)) throw ConfigError("missing input " + p.string());
  ptycho_field* f = nullptr;
  check(ptycho_field_load_cpxf(p.c_str(), &f), p.string());
  return Field(f);
}

int cmd_reconstruct(const Common& o) {
  const auto cfg = load(o);
  const fs::path in = data_dir(o);
  check_data_hash(in, cfg);
  for (const char* f : {"data.ampf", "plan.csv", "plan.json", "probe_truth.cpxf", "truth_interior.cpxf"})
    if (!fs::exists(in / f)) throw ConfigError("missing input " + (in / f).string());
  ptycho_plan* p = nullptr;
  check(ptycho_plan_load((in / "plan.csv").c_str(), (in / "plan.json").c_str(), &p), "plan");
  Plan plan(p);
  Geometry geom = make_geometry(cfg, plan.get());
  ptycho_frames* b = nullptr;
  check(ptycho_frames_load_ampf((in / "data.ampf").c_str(), &b), "data.ampf");
  Frames data(b);
  if (ptycho_frames_count(b) != ptycho_geometry_frames(geom.get()) ||
      static_cast<int>(ptycho_frames_side(b)) != ptycho_geometry_frame_side(geom.get()))
    throw ConfigError("data.ampf has " + std::to_string(ptycho_frames_count(b)) + " frames of side " +
                      std::to_string(ptycho_frames_side(b)) + " but the configuration implies " +
                      std::to_string(ptycho_geometry_frames(geom.get())) + " of side " +
                      std::to_string(ptycho_geometry_frame_side(geom.get())));
  Field probe_truth = load_field(in / "probe_truth.cpxf");
  Field truth = load_field(in / "truth_interior.cpxf");

  Output out(o.out, "reconstruct", cfg);
  Field init = ppc_probe(cfg, probe_truth.get());
  const auto scfg = solver_config(cfg);
  ptycho_history* h = nullptr;
  check(ptycho_reconstruct(geom.get(), data.get(), init.get(), nullptr, truth.get(), &scfg, &h), "reconstruct");
  History hist(h);

  char* csv = nullptr;
  check(ptycho_history_csv(h, &csv), "history");
  out.write_csv("history.csv", take(csv));
  ptycho_field *fo = nullptr, *po = nullptr;
  check(ptycho_history_object(h, &fo), "history");
  Field obj(fo);
  check(ptycho_history_probe(h, &po), "history");
  Field prb(po);
  out.save_field("object_final.cpxf", obj.get());
  out.save_field("probe_final.cpxf", prb.get());
  if (cfg.output.pgm) {
    out.render("object_final", obj.get());
    out.render("probe_final", prb.get());
  }
  out.write_json("reconstruct.json", history_summary(h));
  out.finish();
  return exit_ok;
}

int cmd_sweep_noise(const Common& o) {
  const auto cfg = load(o);
  Output out(o.out, "sweep-noise", cfg);
  auto s = simulate(cfg);
  const auto& targets = cfg.sweep.nsr;

  struct Point {
    double target = 0, scale = 0, nsr = 0;
    double re[2] = {NAN, NAN};
    std::string stop[2];
    Frames data;
  };
  std::vector<Point> pts(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    auto& p = pts[i];
    p.target = targets[i];
    if (p.target > 0.0) {
      check(ptycho_calibrate_photon_scale(s.clean.get(), p.target, cfg.noise.seed, &p.scale),
            "sweep.nsr = " + std::to_string(p.target));
      ptycho_frames* nb = nullptr;
      check(ptycho_poissonize(s.clean.get(), p.scale, cfg.noise.seed, &nb), "poissonize");
      p.data.reset(nb);
      check(ptycho_nsr(nb, s.clean.get(), &p.nsr), "nsr");
    }
  }

  Field init = ppc_probe(cfg, s.probe.get());
  auto base = solver_config(cfg);
  base.max_epochs = cfg.sweep.max_epochs;

  // Independent (point, objective) runs spread over --jobs workers.
  const int total = static_cast<int>(pts.size()) * 2;
  const int jobs = std::max(1, std::min(o.jobs, total));
  if (jobs > 1) ptycho_set_thread_cap(std::max(1, ptycho_worker_threads() / jobs));
  std::atomic<int> next{0};
  std::mutex err_mu;
  std::optional<ApiError> first_error;
  auto worker = [&] {
    for (int t; (t = next.fetch_add(1)) < total;) {
      auto& p = pts[static_cast<std::size_t>(t / 2)];
      auto scfg = base;
      scfg.objective = t % 2 == 0 ? PTYCHO_GAUSSIAN : PTYCHO_POISSON;
      const ptycho_frames* b = p.data ? p.data.get() : s.clean.get();
      ptycho_history* h = nullptr;
      const auto st = ptycho_reconstruct(s.geom.get(), b, init.get(), nullptr, s.object.get(), &scfg, &h);
      if (st != PTYCHO_OK) {
        std::lock_guard lock(err_mu);
        if (!first_error) first_error.emplace(st, std::string("sweep point: ") + ptycho_last_error());
        continue;
      }
      History hist(h);
      ptycho_epoch e;
      if (ptycho_history_epoch(h, ptycho_history_epochs(h) - 1, &e) == PTYCHO_OK) p.re[t % 2] = e.re;
      p.stop[t % 2] = ptycho_history_stop_reason(h);
    }
  };
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (first_error) throw *first_error;

  std::ostringstream csv;
  csv << "nsr,re_gaussian,re_poisson\n";
  Json points = Json::array();
  for (const auto& p : pts) {
    char line[128];
    std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g\n", p.nsr, p.re[0], p.re[1]);
    csv << line;
    points.push_back({{"target_nsr", p.target},
                      {"nsr", p.nsr},
                      {"photon_scale", p.scale},
                      {"re_gaussian", num(p.re[0])},
                      {"re_poisson", num(p.re[1])},
                      {"stop_gaussian", p.stop[0]},
                      {"stop_poisson", p.stop[1]}});
  }
  out.write_csv("sweep_noise.csv", csv.str());
  out.write_json("sweep_noise.json", Json{{"points", points}});
  out.finish();
  return exit_ok;
}

int cmd_stability(const Common& o) {
  const auto cfg = load(o);
  Output out(o.out, "stability", cfg);
  ptycho_stability_config sc;
  ptycho_stability_config_default(&sc);
  sc.n = cfg.stability.n;
  sc.m = cfg.stability.m;
  sc.tau = cfg.stability.tau;
  sc.pad = cfg.stability.pad;
  sc.seed = cfg.stability.seed;
  sc.rhos = cfg.stability.rhos.data();
  sc.rho_count = cfg.stability.rhos.size();
  sc.lambdas = cfg.stability.lambdas.data();
  sc.lambda_count = cfg.stability.lambdas.size();
  sc.noise_level = cfg.stability.noise_level;
  char* json = nullptr;
  int pass = 0;
  check(ptycho_stability_run(&sc, &json, &pass), "stability");
  Json reports = Json::parse(take(json));
  out.write_json("stability.json", Json{{"all_pass", pass != 0}, {"reports", reports}});
  out.finish(Json{{"all_pass", pass != 0}});
  for (const auto& r : reports)
    for (const auto& c : r["checks"])
      if (!c["pass"].get<bool>() && c["hard"].get<bool>())
        std::cerr << "FAIL " << r["name"].get<std::string>() << " / " << c["name"].get<std::string>()
                  << ": measured " << c["measured"] << ", tolerance " << c["tolerance"] << "\n";
  return pass ? exit_ok : exit_verification;
}

int cmd_metrics(const Common& o) {
  const auto cfg = load(o);
  const fs::path in = data_dir(o);
  const fs::path truth_path = cfg.metrics.truth.empty() ? in / "truth_interior.cpxf" : fs::path(cfg.metrics.truth);
  const fs::path est_path = cfg.metrics.estimate.empty() ? fs::path(o.out) / "object_final.cpxf"
                                                         : fs::path(cfg.metrics.estimate);
  Field truth = load_field(truth_path);
  Field est = load_field(est_path);
  Plan plan = make_plan(cfg);
  if (fs::exists(in / "plan.csv") && fs::exists(in / "plan.json")) {
    ptycho_plan* p = nullptr;
    check(ptycho_plan_load((in / "plan.csv").c_str(), (in / "plan.json").c_str(), &p), "plan");
    plan.reset(p);
  }
  Geometry geom = make_geometry(cfg, plan.get());
  Field interior;
  if (ptycho_field_rows(est.get()) == ptycho_field_rows(truth.get()) &&
      ptycho_field_cols(est.get()) == ptycho_field_cols(truth.get())) {
    interior = std::move(est);
  } else {
    ptycho_field* f = nullptr;
    check(ptycho_interior(geom.get(), est.get(), &f), "estimate");
    interior.reset(f);
  }
  ptycho_metrics m;
  check(ptycho_relative_error(truth.get(), interior.get(), 1, &m), "relative_error");
  Json j;
  j["truth"] = truth_path.string();
  j["estimate"] = est_path.string();
  j["re"] = num(m.re);
  j["re2"] = num(m.re2);
  j["alpha"] = {m.alpha_re, m.alpha_im};
  j["k_hat"] = {m.kx, m.ky};
  const fs::path probe_path = fs::path(o.out) / "probe_final.cpxf";
  if (cfg.metrics.estimate.empty() && fs::exists(probe_path) && fs::exists(in / "data.ampf")) {
    Field probe = load_field(probe_path);
    Field obj_m = load_field(est_path);
    ptycho_frames* b = nullptr;
    check(ptycho_frames_load_ampf((in / "data.ampf").c_str(), &b), "data.ampf");
    Frames data(b);
    double rr = NAN;
    check(ptycho_relative_residual(geom.get(), data.get(), probe.get(), obj_m.get(), &rr), "relative_residual");
    j["rr"] = num(rr);
  }
  Output out(o.out, "metrics", cfg);
  out.write_json("metrics.json", j);
  out.finish();
  std::printf("re=%.6e re2=%.6e\n", m.re, m.re2);
  return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Blind ptychography with alternating-minimization Douglas-Rachford splitting"};
  app.require_subcommand(1);
  Common o;
  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "TOML experiment config");
    sub->add_option("--out", o.out, "output directory")->capture_default_str();
    sub->add_option("--seed", seed, "master seed (replaces the config's)");
    sub->add_option("--jobs", o.jobs, "parallel sweep points")->check(CLI::PositiveNumber);
    sub->add_option("--set", o.sets, "override key=value (repeatable)")->allow_extra_args(false);
  };
  auto* sim = app.add_subcommand("simulate", "simulate data, truth fields and the scan plan");
  auto* rec = app.add_subcommand("reconstruct", "run AMDRS on simulated data");
  auto* sweep = app.add_subcommand("sweep-noise", "RE against NSR for both objectives");
  auto* stab = app.add_subcommand("stability", "tiny-instance fixed-point stability suite");
  auto* met = app.add_subcommand("metrics", "RE/RE2/RR of an estimate against the truth");
  for (auto* sub : {sim, rec, sweep, stab, met}) add_common(sub);
  for (auto* sub : {rec, met}) sub->add_option("--data", o.data, "simulate output dir (default: --out)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? exit_ok : exit_config;
  }
  for (auto* sub : {sim, rec, sweep, stab, met})
    if (sub->count("--seed")) o.seed = seed;

  try {
    if (*sim) return cmd_simulate(o);
    if (*rec) return cmd_reconstruct(o);
    if (*sweep) return cmd_sweep_noise(o);
    if (*stab) return cmd_stability(o);
    if (*met) return cmd_metrics(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return exit_config;
  } catch (const ApiError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.status);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_numerical;
  }
  return exit_config;
}
