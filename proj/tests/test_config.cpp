#include <filesystem>
#include <fstream>

#include "config.hpp"
#include "doctest.h"
#include "ptycho/ptycho.h"

using namespace ptycho_cli;
namespace fs = std::filesystem;

namespace {

fs::path write_config(const std::string& name, const std::string& body) {
  auto dir = fs::temp_directory_path() / "ptycho_config_test";
  fs::create_directories(dir);
  std::ofstream(dir / name) << body;
  return dir / name;
}

std::string error_of(const std::string& path, const std::vector<std::string>& sets = {}) {
  try {
    load_config(path, sets, nullptr);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("defaults describe the desk-scale experiment") {
  auto c = load_config("", {}, nullptr);
  CHECK(c.object.n == 256);
  CHECK(c.probe.m == 60);
  CHECK(c.scan.tau == 30);
  CHECK(c.scan.jitter == 4);
  CHECK(c.scan.grid == 9);  // ceil(256 / 30) for periodic
  CHECK(c.scan.start_index == 0);
  CHECK(c.scan.scheme == "full_rank");
  CHECK(c.bc.kind == "periodic");
  CHECK(c.solver.objective == "poisson");
  CHECK(c.probe.kind == "iid");
  CHECK(c.init.delta == 0.5);
  CHECK(c.object.seed == ptycho_derive_seed(1, 1));
  CHECK(c.solver.seed == ptycho_derive_seed(1, 6));
}

TEST_CASE("non-periodic grids gain one raster step on each side") {
  auto c = load_config("", {"bc.kind=\"dark\"", "object.n=128", "probe.m=32"}, nullptr);
  CHECK(c.scan.tau == 16);
  CHECK(c.scan.grid == 9);
  CHECK(c.scan.start_index == -1);
}

TEST_CASE("TOML file, overrides and the seed override") {
  auto p = write_config("a.toml", "seed = 5\n[object]\nn = 64\nseed = 99\n[probe]\nm = 16\n[solver]\nrho = 0.5\n");
  auto c = load_config(p.string(), {"solver.rho=2", "bc.kind=bright", "bc.value=100"}, nullptr);
  CHECK(c.seed == 5);
  CHECK(c.object.n == 64);
  CHECK(c.object.seed == 99);
  CHECK(c.probe.seed == ptycho_derive_seed(5, 2));
  CHECK(c.solver.rho == 2.0);
  CHECK(c.bc.kind == "bright");  // bare string fallback
  CHECK(c.bc.value == 100.0);
  const std::uint64_t s = 42;
  auto d = load_config(p.string(), {}, &s);
  CHECK(d.seed == 42);
  CHECK(d.object.seed == 99);
  CHECK(d.probe.seed == ptycho_derive_seed(42, 2));
}

TEST_CASE("diagnostics carry line numbers and field names") {
  auto bad_key = write_config("b.toml", "[object]\nn = 64\ncolour = 3\n");
  CHECK(error_of(bad_key.string()).find("object.colour") != std::string::npos);
  CHECK(error_of(bad_key.string()).find("line 3") != std::string::npos);

  auto syntax = write_config("c.toml", "[object]\nn = = 3\n");
  CHECK(error_of(syntax.string()).find(":2:") != std::string::npos);

  auto type = write_config("d.toml", "[solver]\nrho = \"fast\"\n");
  CHECK(error_of(type.string()).find("solver.rho") != std::string::npos);

  CHECK(error_of("", {"solver.rho=-1"}).find("rho") != std::string::npos);
  CHECK(error_of("", {"scan.tauu=3"}).find("--set") != std::string::npos);
  CHECK(error_of("", {"noequals"}).find("key=value") != std::string::npos);
  CHECK(error_of("", {"bc.kind=bright", "bc.value=0"}).find("bright") != std::string::npos);
  CHECK(error_of("", {"object.kind=custom"}).find("object.path") != std::string::npos);
  CHECK(error_of("/nonexistent/cfg.toml").size() > 0);
}

TEST_CASE("hashes: stable, sensitive, and data hash ignores the solver") {
  auto a = load_config("", {}, nullptr), b = load_config("", {}, nullptr);
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);
  auto c = load_config("", {"solver.rho=2"}, nullptr);
  CHECK(config_hash(a) != config_hash(c));
  CHECK(data_hash(a) == data_hash(c));
  auto d = load_config("", {"noise.target_nsr=0.05"}, nullptr);
  CHECK(data_hash(a) != data_hash(d));
  CHECK(canonical_json(a).find("\"solver\"") != std::string::npos);
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
}

TEST_CASE("shipped sample configs load and validate") {
  for (const auto& e : fs::directory_iterator(fs::path(PTYCHO_SOURCE_DIR) / "configs")) {
    INFO(e.path().string());
    CHECK_NOTHROW(load_config(e.path().string(), {}, nullptr));
  }
  auto bright = load_config((fs::path(PTYCHO_SOURCE_DIR) / "configs" / "bright255.toml").string(), {}, nullptr);
  CHECK(bright.scan.grid == 9);
  CHECK(bright.scan.start_index == -1);
  CHECK(bright.bc.enforce);
}
