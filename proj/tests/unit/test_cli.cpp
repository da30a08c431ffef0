#include "resinv/cli.hpp"

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

const fs::path tiny = fs::path(RESINV_CONFIG_DIR) / "tiny.yaml";

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "resinv");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = resinv::dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "resinv_cli_tests" / name;
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

nlohmann::json manifest(const fs::path& dir) { return nlohmann::json::parse(slurp(dir / "manifest.json")); }

}  // namespace

TEST_CASE("usage errors exit with 1") {
  CHECK(run({}).code == 1);
  CHECK(run({"frobnicate", "-c", tiny.string()}).code == 1);
  CHECK(run({"simulate"}).code == 1);
  CHECK(run({"simulate", "-c", tiny.string(), "--threads", "many"}).code == 1);
  CHECK(run({"--help"}).code == 0);

  const fs::path dir = fresh("missing");
  const Outcome o = run({"simulate", "-c", "/nonexistent/case.yaml", "-o", dir.string()});
  CHECK(o.code == 1);
  CHECK(o.err.find("cannot open") != std::string::npos);
  const auto m = manifest(dir);
  CHECK(m["status"] == "failed");
  CHECK(m["exit_code"] == 1);
}

TEST_CASE("simulate writes observations and a manifest") {
  const fs::path dir = fresh("simulate");
  const Outcome o = run({"simulate", "-c", tiny.string(), "-o", dir.string()});
  REQUIRE(o.code == 0);
  CHECK(fs::exists(dir / "observations.csv"));
  CHECK(fs::exists(dir / "wells.csv"));
  const auto m = manifest(dir);
  CHECK(m["verb"] == "simulate");
  CHECK(m["status"] == "ok");
  CHECK(m["exit_code"] == 0);
  CHECK(m["seeds"]["truth"] == 7);
  CHECK(m["seeds"]["noise"] == 8);
  CHECK(m["config_hash"].get<std::string>().rfind("fnv1a64:", 0) == 0);
  CHECK(m["artifacts"].size() == 2);
  CHECK(m["diagnostics"]["max_water_imbalance"].get<double>() <= 1e-10);
}

TEST_CASE("seed flag overrides both seeds") {
  const fs::path dir = fresh("seeded");
  REQUIRE(run({"sample-truth", "-c", tiny.string(), "-o", dir.string(), "--seed", "100"}).code == 0);
  const auto m = manifest(dir);
  CHECK(m["seeds"]["truth"] == 100);
  CHECK(m["seeds"]["noise"] == 101);
  CHECK(m["artifacts"][0]["path"] == "truth.csv");
  CHECK(m["artifacts"][0]["seed"] == 100);

  const fs::path other = fresh("seeded_other");
  REQUIRE(run({"sample-truth", "-c", tiny.string(), "-o", other.string(), "--seed", "200"}).code == 0);
  CHECK(slurp(dir / "truth.csv") != slurp(other / "truth.csv"));
}

TEST_CASE("repeated runs are byte identical") {
  for (const std::string verb : {"synth-data", "invert-reglm", "invert-stdlm"}) {
    CAPTURE(verb);
    const fs::path a = fresh(verb + "_a");
    const fs::path b = fresh(verb + "_b");
    REQUIRE(run({verb, "-c", tiny.string(), "-o", a.string()}).code == 0);
    REQUIRE(run({verb, "-c", tiny.string(), "-o", b.string()}).code == 0);
    int compared = 0;
    for (const auto& e : fs::directory_iterator(a)) {
      const auto name = e.path().filename().string();
      if (e.path().extension() != ".csv" || name == "timing.csv") continue;
      CAPTURE(name);
      CHECK(slurp(e.path()) == slurp(b / name));
      ++compared;
    }
    CHECK(compared >= 2);
  }
}

TEST_CASE("check verb passes on the tiny case") {
  const Outcome o = run({"check", "-c", tiny.string(), "-o", fresh("check").string()});
  CHECK(o.code == 0);
  CHECK(o.out.find("FAIL") == std::string::npos);
  CHECK(o.out.find("PASS adjoint identity") != std::string::npos);
}

TEST_CASE("study without a study section is a usage error") {
  CHECK(run({"study", "-c", tiny.string(), "-o", fresh("nostudy").string()}).code == 1);
}
