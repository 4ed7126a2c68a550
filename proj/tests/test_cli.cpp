#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "ptycho/boundary.hpp"
#include "ptycho/io.hpp"

namespace fs = std::filesystem;

#ifndef PTYCHO_DRS_BINARY
#error "PTYCHO_DRS_BINARY must name the CLI executable"
#endif

namespace {

const fs::path root = fs::temp_directory_path() / "ptycho_cli_test";

int run(const std::string& args) {
  const std::string cmd = std::string(PTYCHO_DRS_BINARY) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path small_config() {
  fs::create_directories(root);
  const auto p = root / "small.toml";
  std::ofstream(p) << "seed = 3\n"
                      "[object]\nn = 48\n"
                      "[probe]\nm = 16\n"
                      "[scan]\ntau = 8\n"
                      "[solver]\nmax_epochs = 25\nobjective = \"gaussian\"\n"
                      "[sweep]\nnsr = [0.0, 0.05]\nmax_epochs = 25\n";
  return p;
}

std::string cfg_arg() { return "--config " + small_config().string(); }

}  // namespace

TEST_CASE("simulate is byte-reproducible and tags every file with the config hash") {
  const auto a = root / "sim_a", b = root / "sim_b";
  fs::remove_all(a);
  fs::remove_all(b);
  REQUIRE(run("simulate " + cfg_arg() + " --out " + a.string()) == 0);
  REQUIRE(run("simulate " + cfg_arg() + " --out " + b.string()) == 0);
  for (const auto& e : fs::directory_iterator(a)) {
    INFO(e.path().filename().string());
    CHECK(slurp(e.path()) == slurp(b / e.path().filename()));
  }
  auto manifest = nlohmann::json::parse(slurp(a / "manifest.json"));
  const std::string hash = manifest["commands"]["simulate"]["config_hash"];
  for (const auto& e : fs::directory_iterator(a)) {
    const auto name = e.path().filename().string();
    const auto ext = e.path().extension().string();
    INFO(name);
    if (ext == ".csv") CHECK(slurp(e.path()).rfind("# config_hash=" + hash + "\n", 0) == 0);
    else if (name == "plan.json") CHECK(slurp(e.path()).find("\"scheme\"") != std::string::npos);
    else if (ext == ".json" && name != "manifest.json" && name.rfind("config_", 0) != 0)
      CHECK(nlohmann::json::parse(slurp(e.path()))["config_hash"] == hash);
    else if (ext == ".cpxf" || ext == ".ampf" || ext == ".pgm")
      CHECK(nlohmann::json::parse(slurp(fs::path(e.path().string() + ".meta.json")))["config_hash"] == hash);
  }
}

TEST_CASE("bright boundary value 255: the truth dump margin is exactly 255") {
  const auto out = root / "bright";
  fs::remove_all(out);
  REQUIRE(run("simulate " + cfg_arg() + " --out " + out.string() + " --set bc.kind=bright --set bc.value=255") == 0);
  auto truth = ptycho::io::load_cpxf(out / "object_truth.cpxf");
  auto interior = ptycho::io::load_cpxf(out / "truth_interior.cpxf");
  auto meta = nlohmann::json::parse(slurp(out / "simulate.json"));
  const int r0 = meta["grid"]["origin_row"], c0 = meta["grid"]["origin_col"];
  REQUIRE(truth.rows() > interior.rows());
  std::size_t margin = 0;
  for (std::size_t r = 0; r < truth.rows(); ++r)
    for (std::size_t c = 0; c < truth.cols(); ++c) {
      const int gr = static_cast<int>(r) + r0, gc = static_cast<int>(c) + c0;
      const bool inside = gr >= 0 && gc >= 0 && gr < 48 && gc < 48;
      if (!inside) {
        ++margin;
        CHECK(truth(r, c) == ptycho::cplx(255.0, 0.0));
      } else {
        CHECK(truth(r, c) == interior(static_cast<std::size_t>(gr), static_cast<std::size_t>(gc)));
      }
    }
  CHECK(margin == meta["grid"]["margin_pixels"].get<std::size_t>());
}

TEST_CASE("CiB components imported from the shipped PGMs match the built-in stand-ins") {
  const auto a = root / "pgm_builtin", b = root / "pgm_files";
  fs::remove_all(a);
  fs::remove_all(b);
  const std::string data = PTYCHO_DATA_DIR;
  const std::string cfg = "--set object.n=128 --set probe.m=32 --set solver.max_epochs=1";
  REQUIRE(run("simulate " + cfg + " --out " + a.string()) == 0);
  REQUIRE(run("simulate " + cfg + " --set object.image_a=\"" + data + "/cib_a_128.pgm\" --set object.image_b=\"" +
              data + "/cib_b_128.pgm\" --out " + b.string()) == 0);
  CHECK(slurp(a / "truth_interior.cpxf") == slurp(b / "truth_interior.cpxf"));
  CHECK(slurp(a / "data.ampf") == slurp(b / "data.ampf"));
}

TEST_CASE("reconstruct, metrics and the reproducible history") {
  const auto out = root / "rec";
  fs::remove_all(out);
  REQUIRE(run("simulate " + cfg_arg() + " --out " + out.string()) == 0);
  REQUIRE(run("reconstruct " + cfg_arg() + " --out " + out.string()) == 0);
  const auto first = slurp(out / "history.csv");
  REQUIRE(run("reconstruct " + cfg_arg() + " --out " + out.string()) == 0);
  CHECK(slurp(out / "history.csv") == first);
  auto summary = nlohmann::json::parse(slurp(out / "reconstruct.json"));
  CHECK(summary["final"]["re"].get<double>() < 0.05);
  REQUIRE(run("metrics " + cfg_arg() + " --out " + out.string()) == 0);
  auto m = nlohmann::json::parse(slurp(out / "metrics.json"));
  CHECK(std::abs(m["re"].get<double>() - summary["final"]["re"].get<double>()) < 1e-12);
  CHECK(m["rr"].get<double>() < 0.05);
  auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
  CHECK(manifest["commands"].contains("simulate"));
  CHECK(manifest["commands"].contains("reconstruct"));
  CHECK(manifest["commands"].contains("metrics"));
}

TEST_CASE("reconstruct refuses data from another configuration and missing inputs") {
  const auto out = root / "mismatch";
  fs::remove_all(out);
  REQUIRE(run("simulate " + cfg_arg() + " --out " + out.string()) == 0);
  CHECK(run("reconstruct " + cfg_arg() + " --out " + out.string() + " --set object.n=40") == 1);
  CHECK(run("reconstruct " + cfg_arg() + " --out " + (root / "empty").string()) == 1);
  // A solver change is fine: it does not alter the data.
  CHECK(run("reconstruct " + cfg_arg() + " --out " + out.string() + " --set solver.max_epochs=2") == 0);
}

TEST_CASE("sweep-noise writes nsr,re_gaussian,re_poisson; the noiseless point is accurate") {
  const auto out = root / "sweep";
  fs::remove_all(out);
  REQUIRE(run("sweep-noise " + cfg_arg() + " --out " + out.string() + " --jobs 2") == 0);
  std::istringstream csv(slurp(out / "sweep_noise.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line.rfind("# config_hash=", 0) == 0);
  std::getline(csv, line);
  CHECK(line == "nsr,re_gaussian,re_poisson");
  std::getline(csv, line);
  double nsr, rg, rp;
  char c1, c2;
  std::istringstream(line) >> nsr >> c1 >> rg >> c2 >> rp;
  CHECK(nsr == 0.0);
  CHECK(rg < 1e-2);
  CHECK(rp < 1e-2);
  std::getline(csv, line);
  std::istringstream(line) >> nsr >> c1 >> rg >> c2 >> rp;
  CHECK(std::abs(nsr - 0.05) < 0.01);
  CHECK(rg / nsr < 3.0);

  // --jobs does not change results.
  const auto serial = root / "sweep1";
  fs::remove_all(serial);
  REQUIRE(run("sweep-noise " + cfg_arg() + " --out " + serial.string() + " --jobs 1") == 0);
  CHECK(slurp(serial / "sweep_noise.csv") == slurp(out / "sweep_noise.csv"));
  CHECK(run("sweep-noise " + cfg_arg() + " --out " + out.string() + " --set sweep.nsr=[2.0]") == 1);
}

TEST_CASE("stability exits 0 on the default tiny instance and writes its report") {
  const auto out = root / "stab";
  fs::remove_all(out);
  REQUIRE(run("stability --out " + out.string()) == 0);
  auto j = nlohmann::json::parse(slurp(out / "stability.json"));
  CHECK(j["all_pass"] == true);
  CHECK(j["reports"].size() >= 5);
  CHECK(run("stability --out " + out.string() + " --set stability.n=40") == 1);
}

TEST_CASE("usage and configuration errors exit 1") {
  CHECK(run("") == 1);
  CHECK(run("bogus") == 1);
  CHECK(run("simulate --config /nonexistent.toml --out " + (root / "x").string()) == 1);
  CHECK(run("simulate --out " + (root / "x").string() + " --set solver.rho=-3") == 1);
  CHECK(run("simulate --out " + (root / "x").string() + " --set object.kind=custom --set object.path=/nope.cpxf") == 1);
  CHECK(run("--help") == 0);
}
