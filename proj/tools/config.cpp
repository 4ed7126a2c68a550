#include "config.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "ptycho/ptycho.h"
#include "toml.hpp"

namespace ptycho_cli {
namespace {

using Json = nlohmann::ordered_json;

// Seed streams for the per-component defaults.
enum Stream : std::uint64_t { s_object = 1, s_probe, s_scan, s_noise, s_init, s_solver, s_stability };

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s{
      {"object", {"kind", "n", "seed", "image_a", "image_b", "path"}},
      {"probe", {"kind", "m", "c", "seed"}},
      {"scan", {"scheme", "tau", "jitter", "grid", "start_index", "seed"}},
      {"bc", {"kind", "value", "value_im", "enforce"}},
      {"noise", {"photon_scale", "target_nsr", "seed"}},
      {"solver",
       {"objective", "rho", "max_inner", "inner_tol", "max_epochs", "outer_tol", "stagnation_window", "rr_tol",
        "start", "object_init", "eps_rel", "pad", "timing", "seed"}},
      {"init", {"kx", "ky", "delta", "seed"}},
      {"sweep", {"nsr", "max_epochs"}},
      {"stability", {"n", "m", "tau", "pad", "seed", "rhos", "lambdas", "noise_level"}},
      {"metrics", {"truth", "estimate"}},
      {"output", {"pgm"}},
  };
  return s;
}

std::string where(const toml::node& node, const std::string& key) {
  const auto& src = node.source();
  if (src.begin.line == 0) return "'" + key + "'";
  return "'" + key + "' (line " + std::to_string(src.begin.line) + ")";
}

// One section of the merged table, with typed reads that remember which keys
// were supplied.
class Section {
 public:
  Section(const toml::table* t, std::string name) : t_(t), name_(std::move(name)) {}

  bool has(const std::string& key) const { return t_ && t_->contains(key); }

  template <typename T>
  void read(const std::string& key, T& out) const {
    if (!has(key)) return;
    const toml::node& node = *t_->get(key);
    const std::string full = name_.empty() ? key : name_ + "." + key;
    if constexpr (std::is_same_v<T, bool>) {
      if (auto v = node.value_exact<bool>()) return void(out = *v);
      throw ConfigError("field " + where(node, full) + ": expected a boolean");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (auto v = node.value_exact<std::string>()) return void(out = *v);
      throw ConfigError("field " + where(node, full) + ": expected a string");
    } else if constexpr (std::is_same_v<T, double>) {
      if (auto v = node.value<double>(); v && (node.is_floating_point() || node.is_integer()))
        return void(out = *v);
      throw ConfigError("field " + where(node, full) + ": expected a number");
    } else if constexpr (std::is_same_v<T, int>) {
      if (auto v = node.value_exact<std::int64_t>();
          v && *v >= std::numeric_limits<int>::min() && *v <= std::numeric_limits<int>::max())
        return void(out = static_cast<int>(*v));
      throw ConfigError("field " + where(node, full) + ": expected an integer");
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      if (auto v = node.value_exact<std::int64_t>(); v && *v >= 0) return void(out = static_cast<std::uint64_t>(*v));
      throw ConfigError("field " + where(node, full) + ": expected a non-negative integer");
    } else if constexpr (std::is_same_v<T, std::vector<double>>) {
      const auto* arr = node.as_array();
      if (!arr) throw ConfigError("field " + where(node, full) + ": expected an array of numbers");
      std::vector<double> vals;
      for (const auto& el : *arr) {
        auto v = el.value<double>();
        if (!v || !(el.is_floating_point() || el.is_integer()))
          throw ConfigError("field " + where(node, full) + ": expected an array of numbers");
        vals.push_back(*v);
      }
      out = std::move(vals);
    }
  }

 private:
  const toml::table* t_;
  std::string name_;
};

Section section(const toml::table& root, const std::string& name) {
  const toml::node* n = root.get(name);
  return Section(n ? n->as_table() : nullptr, name);
}

void check_keys(const toml::table& root) {
  for (const auto& [k, v] : root) {
    const std::string key(k.str());
    if (key == "seed") continue;
    auto it = schema().find(key);
    if (it == schema().end()) throw ConfigError("unknown key " + where(v, key));
    const auto* t = v.as_table();
    if (!t) throw ConfigError("field " + where(v, key) + ": expected a table");
    for (const auto& [kk, vv] : *t) {
      const std::string sub(kk.str());
      if (!it->second.count(sub)) throw ConfigError("unknown key " + where(vv, key + "." + sub));
    }
  }
}

void apply_override(toml::table& root, const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + kv + "'");
  const std::string key = kv.substr(0, eq);
  const std::string raw = kv.substr(eq + 1);
  std::vector<std::string> parts;
  std::stringstream ss(key);
  for (std::string p; std::getline(ss, p, '.');) {
    if (p.empty()) throw ConfigError("--set: malformed key '" + key + "'");
    parts.push_back(p);
  }
  if (parts.size() > 2) throw ConfigError("--set: key '" + key + "' is nested too deeply");
  const bool known = parts.size() == 1 ? parts[0] == "seed"
                                       : schema().count(parts[0]) && schema().at(parts[0]).count(parts[1]);
  if (!known) throw ConfigError("--set: unknown key '" + key + "'");

  toml::table parsed;
  try {
    parsed = toml::parse("v = " + raw);
  } catch (const toml::parse_error&) {
    parsed = toml::table{{"v", raw}};
  }
  toml::node* value = parsed.get("v");
  toml::table* target = &root;
  if (parts.size() == 2) {
    if (!root.contains(parts[0])) root.insert(parts[0], toml::table{});
    target = root.get(parts[0])->as_table();
    if (!target) throw ConfigError("--set: '" + parts[0] + "' is not a table");
  }
  target->insert_or_assign(parts.back(), std::move(*value));
}

std::uint64_t seed_or(const Section& s, std::uint64_t master, Stream stream) {
  std::uint64_t v = ptycho_derive_seed(master, stream);
  s.read("seed", v);
  return v;
}

void validate(ExperimentConfig& c) {
  auto bad = [](const std::string& msg) { throw ConfigError(msg); };
  const std::set<std::string> objects{"cib", "rpp", "custom"};
  if (!objects.count(c.object.kind)) bad("object.kind must be cib, rpp or custom");
  if (c.object.n < 1) bad("object.n must be >= 1");
  if (c.object.kind == "custom" && c.object.path.empty()) bad("object.kind = custom needs object.path");
  if (c.object.kind == "cib" && (c.object.image_a.empty() != c.object.image_b.empty()))
    bad("object.image_a and object.image_b must be given together");
  if (c.probe.kind != "iid" && c.probe.kind != "correlated") bad("probe.kind must be iid or correlated");
  if (c.probe.m < 1) bad("probe.m must be >= 1");
  if (c.probe.c < 0.0) bad("probe.c must be >= 0");
  ptycho_scheme scheme;
  if (ptycho_scheme_from_string(c.scan.scheme.c_str(), &scheme) != PTYCHO_OK)
    bad("scan.scheme must be plain_raster, rank_one or full_rank");
  if (c.scan.tau < 1) bad("scan.tau must be >= 1");
  if (c.scan.jitter < 0) bad("scan.jitter must be >= 0");
  if (c.scan.grid < 1) bad("scan.grid must be >= 1");
  ptycho_bc_kind kind;
  if (ptycho_bc_kind_from_string(c.bc.kind.c_str(), &kind) != PTYCHO_OK) bad("bc.kind must be periodic, dark or bright");
  if (kind == PTYCHO_BC_BRIGHT && c.bc.value == 0.0 && c.bc.value_im == 0.0) bad("bright bc needs a nonzero bc.value");
  if (c.noise.photon_scale < 0.0) bad("noise.photon_scale must be >= 0");
  if (c.noise.target_nsr < 0.0) bad("noise.target_nsr must be >= 0");
  if (c.noise.photon_scale > 0.0 && c.noise.target_nsr > 0.0)
    bad("noise.photon_scale and noise.target_nsr are mutually exclusive");
  ptycho_objective obj;
  if (ptycho_objective_from_string(c.solver.objective.c_str(), &obj) != PTYCHO_OK)
    bad("solver.objective must be gaussian or poisson");
  ptycho_start start;
  if (ptycho_start_from_string(c.solver.start.c_str(), &start) != PTYCHO_OK) bad("solver.start must be warm or cold");
  if (c.solver.object_init != "zero" && c.solver.object_init != "random_phase")
    bad("solver.object_init must be zero or random_phase");
  if (!(c.solver.rho >= 0.0)) bad("solver.rho must be >= 0");
  if (obj == PTYCHO_POISSON && !(c.solver.rho > 0.0)) bad("solver.rho must be > 0 for the poisson objective");
  if (c.solver.max_inner < 1) bad("solver.max_inner must be >= 1");
  if (!(c.solver.inner_tol > 0.0)) bad("solver.inner_tol must be > 0");
  if (c.solver.max_epochs < 1) bad("solver.max_epochs must be >= 1");
  if (c.solver.outer_tol < 0.0 || c.solver.rr_tol < 0.0) bad("solver tolerances must be >= 0");
  if (c.solver.stagnation_window < 1) bad("solver.stagnation_window must be >= 1");
  if (!(c.solver.eps_rel > 0.0)) bad("solver.eps_rel must be > 0");
  if (c.solver.pad < 1) bad("solver.pad must be >= 1");
  if (!(c.init.delta >= 0.0)) bad("init.delta must be >= 0");
  if (c.sweep.nsr.empty()) bad("sweep.nsr must not be empty");
  for (double v : c.sweep.nsr)
    if (v < 0.0) bad("sweep.nsr entries must be >= 0");
  if (c.sweep.max_epochs < 1) bad("sweep.max_epochs must be >= 1");
  if (c.stability.rhos.empty() || c.stability.lambdas.size() < 2)
    bad("stability needs at least one rho and two lambdas");
}

Json to_json(const ExperimentConfig& c) {
  Json j;
  j["seed"] = c.seed;
  j["object"] = {{"kind", c.object.kind}, {"n", c.object.n}, {"seed", c.object.seed},
                 {"image_a", c.object.image_a}, {"image_b", c.object.image_b}, {"path", c.object.path}};
  j["probe"] = {{"kind", c.probe.kind}, {"m", c.probe.m}, {"c", c.probe.c}, {"seed", c.probe.seed}};
  j["scan"] = {{"scheme", c.scan.scheme}, {"tau", c.scan.tau},         {"jitter", c.scan.jitter},
               {"grid", c.scan.grid},     {"start_index", c.scan.start_index}, {"seed", c.scan.seed}};
  j["bc"] = {{"kind", c.bc.kind}, {"value", c.bc.value}, {"value_im", c.bc.value_im}, {"enforce", c.bc.enforce}};
  j["noise"] = {{"photon_scale", c.noise.photon_scale}, {"target_nsr", c.noise.target_nsr}, {"seed", c.noise.seed}};
  j["solver"] = {{"objective", c.solver.objective},
                 {"rho", c.solver.rho},
                 {"max_inner", c.solver.max_inner},
                 {"inner_tol", c.solver.inner_tol},
                 {"max_epochs", c.solver.max_epochs},
                 {"outer_tol", c.solver.outer_tol},
                 {"stagnation_window", c.solver.stagnation_window},
                 {"rr_tol", c.solver.rr_tol},
                 {"start", c.solver.start},
                 {"object_init", c.solver.object_init},
                 {"eps_rel", c.solver.eps_rel},
                 {"pad", c.solver.pad},
                 {"timing", c.solver.timing},
                 {"seed", c.solver.seed}};
  j["init"] = {{"kx", c.init.kx}, {"ky", c.init.ky}, {"delta", c.init.delta}, {"seed", c.init.seed}};
  j["sweep"] = {{"nsr", c.sweep.nsr}, {"max_epochs", c.sweep.max_epochs}};
  j["stability"] = {{"n", c.stability.n},       {"m", c.stability.m},         {"tau", c.stability.tau},
                    {"pad", c.stability.pad},   {"seed", c.stability.seed},   {"rhos", c.stability.rhos},
                    {"lambdas", c.stability.lambdas}, {"noise_level", c.stability.noise_level}};
  j["metrics"] = {{"truth", c.metrics.truth}, {"estimate", c.metrics.estimate}};
  j["output"] = {{"pgm", c.output.pgm}};
  return j;
}

}  // namespace

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides,
                             const std::uint64_t* seed_override) {
  toml::table root;
  if (!path.empty()) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    try {
      root = toml::parse(buf.str(), path);
    } catch (const toml::parse_error& e) {
      std::ostringstream os;
      os << path << ":" << e.source().begin.line << ":" << e.source().begin.column << ": " << e.description();
      throw ConfigError(os.str());
    }
  }
  for (const auto& kv : overrides) apply_override(root, kv);
  check_keys(root);

  ExperimentConfig c;
  Section(&root, "").read("seed", c.seed);
  if (seed_override) c.seed = *seed_override;

  const auto obj = section(root, "object");
  obj.read("kind", c.object.kind);
  obj.read("n", c.object.n);
  obj.read("image_a", c.object.image_a);
  obj.read("image_b", c.object.image_b);
  obj.read("path", c.object.path);
  c.object.seed = seed_or(obj, c.seed, s_object);

  const auto prb = section(root, "probe");
  prb.read("kind", c.probe.kind);
  prb.read("m", c.probe.m);
  prb.read("c", c.probe.c);
  c.probe.seed = seed_or(prb, c.seed, s_probe);

  const auto bc = section(root, "bc");
  bc.read("kind", c.bc.kind);
  bc.read("value", c.bc.value);
  bc.read("value_im", c.bc.value_im);
  bc.read("enforce", c.bc.enforce);

  // tau defaults to m/2 (50% overlap); the raster covers the object, and for
  // dark and bright grids starts one step early so the low edge stays lit.
  const auto scan = section(root, "scan");
  scan.read("scheme", c.scan.scheme);
  c.scan.tau = std::max(1, c.probe.m / 2);
  scan.read("tau", c.scan.tau);
  scan.read("jitter", c.scan.jitter);
  const bool periodic = c.bc.kind == "periodic";
  if (c.scan.tau >= 1) {
    const int cover = (c.object.n + c.scan.tau - 1) / c.scan.tau;
    c.scan.grid = periodic ? cover : cover + 1;
  }
  c.scan.start_index = periodic ? 0 : -1;
  scan.read("grid", c.scan.grid);
  scan.read("start_index", c.scan.start_index);
  c.scan.seed = seed_or(scan, c.seed, s_scan);

  const auto noise = section(root, "noise");
  noise.read("photon_scale", c.noise.photon_scale);
  noise.read("target_nsr", c.noise.target_nsr);
  c.noise.seed = seed_or(noise, c.seed, s_noise);

  const auto sol = section(root, "solver");
  sol.read("objective", c.solver.objective);
  sol.read("rho", c.solver.rho);
  sol.read("max_inner", c.solver.max_inner);
  sol.read("inner_tol", c.solver.inner_tol);
  sol.read("max_epochs", c.solver.max_epochs);
  sol.read("outer_tol", c.solver.outer_tol);
  sol.read("stagnation_window", c.solver.stagnation_window);
  sol.read("rr_tol", c.solver.rr_tol);
  sol.read("start", c.solver.start);
  sol.read("object_init", c.solver.object_init);
  sol.read("eps_rel", c.solver.eps_rel);
  sol.read("pad", c.solver.pad);
  sol.read("timing", c.solver.timing);
  c.solver.seed = seed_or(sol, c.seed, s_solver);

  const auto ini = section(root, "init");
  ini.read("kx", c.init.kx);
  ini.read("ky", c.init.ky);
  ini.read("delta", c.init.delta);
  c.init.seed = seed_or(ini, c.seed, s_init);

  const auto sw = section(root, "sweep");
  sw.read("nsr", c.sweep.nsr);
  sw.read("max_epochs", c.sweep.max_epochs);

  const auto st = section(root, "stability");
  st.read("n", c.stability.n);
  st.read("m", c.stability.m);
  st.read("tau", c.stability.tau);
  st.read("pad", c.stability.pad);
  st.read("rhos", c.stability.rhos);
  st.read("lambdas", c.stability.lambdas);
  st.read("noise_level", c.stability.noise_level);
  c.stability.seed = seed_or(st, c.seed, s_stability);

  const auto met = section(root, "metrics");
  met.read("truth", c.metrics.truth);
  met.read("estimate", c.metrics.estimate);

  section(root, "output").read("pgm", c.output.pgm);

  validate(c);
  return c;
}

std::string canonical_json(const ExperimentConfig& cfg) { return to_json(cfg).dump(2) + "\n"; }

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

std::string config_hash(const ExperimentConfig& cfg) { return fnv1a_hex(to_json(cfg).dump()); }

std::string data_hash(const ExperimentConfig& cfg) {
  const Json j = to_json(cfg);
  Json d;
  for (const char* k : {"object", "probe", "scan", "bc", "noise"}) d[k] = j[k];
  d["pad"] = cfg.solver.pad;
  return fnv1a_hex(d.dump());
}

}  // namespace ptycho_cli
