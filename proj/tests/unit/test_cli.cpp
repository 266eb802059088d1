#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "omk/cli.hpp"
#include "omk/io.hpp"

using namespace omk;
namespace fs = std::filesystem;

namespace {
struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("omk_cli_" + name);
  fs::remove_all(p);
  return p;
}
}  // namespace

TEST_CASE("chern command") {
  const auto dir = scratch("chern");
  const auto r = run({"chern", "--grid", "24", "--output-dir", dir.string()});
  REQUIRE(r.code == 0);
  const auto j = read_json(dir / "chern.json");
  REQUIRE(j.at("C").size() == 6);
  CHECK(j.at("C")[0] == 1);
  CHECK(j.at("sum") == 0);
  CHECK(fs::exists(dir / "manifest.json"));
  const auto m = read_json(dir / "manifest.json");
  CHECK(m.at("command") == "chern");
  CHECK(m.contains("code_version"));
  fs::remove_all(dir);
}

TEST_CASE("invalid input exits with 2 and writes nothing") {
  const auto dir = scratch("bad");
  const fs::path cfg = fs::temp_directory_path() / "omk_cli_bad.json";
  std::ofstream(cfg) << "{ \"command\": \"chern\", \"params\": { \"G\": \"x\" } }";
  CHECK(run({"--config", cfg.string(), "--output-dir", dir.string()}).code == 2);
  CHECK_FALSE(fs::exists(dir));
  std::ofstream(cfg) << "{ not json";
  CHECK(run({"--config", cfg.string(), "--output-dir", dir.string()}).code == 2);
  CHECK_FALSE(fs::exists(dir));
  CHECK(run({"chern", "--grid", "0", "--output-dir", dir.string()}).code == 2);
  CHECK(run({"chern", "--G", "abc", "--output-dir", dir.string()}).code == 2);
  CHECK(run({"disorder", "--output-dir", dir.string()}).code == 2);  // seed required
  CHECK(run({"nonsense"}).code != 0);
  CHECK_FALSE(fs::exists(dir));
  fs::remove(cfg);
}

TEST_CASE("numerical failure exits with 3") {
  const auto dir = scratch("degenerate");
  CHECK(run({"chern", "--G", "0", "--grid", "24", "--output-dir", dir.string()}).code == 3);
  CHECK_FALSE(fs::exists(dir));
}

TEST_CASE("config file and flags agree; reruns reproduce outputs") {
  const auto a = scratch("a"), b = scratch("b");
  const fs::path cfg = fs::temp_directory_path() / "omk_cli_cfg.json";
  std::ofstream(cfg) << R"({"command": "gapmap", "params": {"J": 200},
                            "gapmap": {"G_grid": "1:3:3", "delta_grid": "2:4:3", "grid": 24}})";
  REQUIRE(run({"--config", cfg.string(), "--output-dir", a.string()}).code == 0);
  REQUIRE(run({"gapmap", "--g-grid", "1:3:3", "--delta-grid", "2:4:3", "--grid", "24",
               "--output-dir", b.string()})
              .code == 0);
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p);
    return std::string((std::istreambuf_iterator<char>(in)), {});
  };
  CHECK(slurp(a / "gapmap.csv") == slurp(b / "gapmap.csv"));
  CHECK(slurp(a / "gapmap.csv").find("G,delta_OM,valid") == 0);
  fs::remove_all(a);
  fs::remove_all(b);
  fs::remove(cfg);
}

TEST_CASE("gap map marks invalid cells") {
  const auto dir = scratch("gapmap");
  REQUIRE(run({"gapmap", "--g-grid", "0:2:2", "--delta-grid=-1,3", "--grid", "24",
               "--output-dir", dir.string()})
              .code == 0);
  std::ifstream in(dir / "gapmap.csv");
  std::string line;
  std::getline(in, line);
  int invalid = 0, rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    if (line.find(",0,nan") != std::string::npos) ++invalid;
  }
  CHECK(rows == 4);
  CHECK(invalid >= 2);
  fs::remove_all(dir);
}

TEST_CASE("stability command") {
  const auto dir = scratch("stab");
  REQUIRE(run({"stability", "--output-dir", dir.string()}).code == 0);
  const auto j = read_json(dir / "stability.json");
  CHECK(j.dump().find("stable") != std::string::npos);
  fs::remove_all(dir);
}
