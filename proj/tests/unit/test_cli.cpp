#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qecdm/cli.hpp"
#include "qecdm/config.hpp"

using namespace qecdm;
namespace fs = std::filesystem;

namespace {

fs::path tmp_dir(const std::string& name) {
  fs::path p = fs::path(QECDM_TEST_TMP) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "run.cfg";
  std::ofstream(p) << text;
  return p;
}

struct Invocation {
  int code;
  std::string out, err;
};

Invocation cli(std::vector<std::string> args) {
  args.insert(args.begin(), "qecdm");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("config parsing") {
  auto cfg = parse_config(
      "# bit-flip memory\n"
      "code = bit-flip-3\n"
      "protocol = B   # trailing comment\n"
      "level = maximal\n"
      "gamma1 = 1e-3\n"
      "\n"
      "n_steps = 5\n");
  CHECK(cfg.protocol == Protocol::B);
  CHECK(cfg.level == Parallelism::Maximal);
  CHECK(cfg.gamma1 == 1e-3);
  CHECK(cfg.n_steps == 5);
  CHECK_NOTHROW(cfg.validate());

  CHECK_THROWS_AS(parse_config("colour = red\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("gamma1 = 1\ngamma1 = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("gamma1 = fast\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("protocol = C\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("just words\n"), ConfigError);
}

TEST_CASE("config validation rejects inconsistent combinations") {
  CHECK_THROWS_AS(parse_config("gamma0 = 1e-3\n").validate(), ConfigError);
  CHECK_NOTHROW(parse_config("gamma0 = 1e-3\nallow_gamma0_bitflip = true\n").validate());
  CHECK_THROWS_AS(parse_config("noise = z\nsweep_start = 1e-3\nsweep_stop = 1e-1\nsweep_points = 5\n").validate(),
                  ConfigError);
  CHECK_NOTHROW(parse_config("code = five-qubit\nnoise = z\nsweep_start = 1e-3\nsweep_stop = 1e-1\nsweep_points = 5\n")
                    .validate());
  CHECK_THROWS_AS(parse_config("n_steps = 2\n").validate(), ConfigError);
  CHECK_THROWS_AS(parse_config("stop_at = 0.5\n").validate(), ConfigError);
  CHECK_THROWS_AS(parse_config("bath = collective\nintegrator = exact\n").validate(), ConfigError);
  CHECK_THROWS_AS(parse_config("code = toric\n").validate(), ConfigError);
  CHECK_THROWS_AS(parse_config("povm_eta = 0.7\n").validate(), ConfigError);
}

TEST_CASE("version and parse errors") {
  auto v = cli({"--version"});
  CHECK(v.code == 0);
  CHECK(v.out.find(version_string()) != std::string::npos);
  CHECK(version_string().find("model revision") != std::string::npos);
  CHECK(cli({"bogus"}).code == 2);
  CHECK(cli({"run"}).code == 2);
  CHECK(cli({"run", "/nonexistent/file.cfg"}).code == 2);
}

TEST_CASE("validate-config") {
  auto dir = tmp_dir("validate");
  auto ok = write_config(dir, "gamma1 = 1e-3\n");
  auto r = cli({"validate-config", ok.string()});
  CHECK(r.code == 0);
  CHECK(r.out == "config ok\n");

  auto bad = write_config(dir, "gamma1 = 1e-3\nmystery = 4\n");
  r = cli({"validate-config", bad.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("unknown key 'mystery'") != std::string::npos);

  auto z = write_config(dir, "gamma0 = 1e-3\n");
  CHECK(cli({"validate-config", z.string()}).code == 2);
  CHECK(cli({"validate-config", ok.string(), "--steps", "2"}).code == 2);
}

TEST_CASE("noiseless run writes an all-zero series") {
  auto dir = tmp_dir("zero");
  auto cfg = write_config(dir, "gamma1 = 0\nn_steps = 4\noutput_dir = " + (dir / "out").string() + "\n");
  auto r = cli({"run", cfg.string()});
  REQUIRE(r.code == 0);
  std::istringstream csv(slurp(dir / "out" / "series.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "gamma0,gamma1,n,t,P_c");
  int rows = 0;
  while (std::getline(csv, line)) {
    ++rows;
    CHECK(line.substr(line.rfind(',') + 1) == "0.00000000e+00");
  }
  CHECK(rows == 4);
  auto manifest = nlohmann::json::parse(slurp(dir / "out" / "manifest.json"));
  CHECK(manifest["exit_code"] == 0);
  CHECK(manifest["config"]["n_steps"] == 4);
  CHECK(manifest["version"].get<std::string>().size() > 0);
  CHECK(fs::exists(dir / "out" / "fit.json"));
  CHECK_FALSE(fs::exists(dir / "out" / "series.csv.tmp"));
}

TEST_CASE("reruns are byte-identical") {
  auto dir = tmp_dir("rerun");
  const std::string body =
      "sweep_start = 1e-3\nsweep_stop = 3e-2\nsweep_points = 3\nn_steps = 4\nworkers = 2\n";
  auto a = write_config(dir, body);
  REQUIRE(cli({"run", a.string(), "--out", (dir / "a").string()}).code == 0);
  REQUIRE(cli({"run", a.string(), "--out", (dir / "b").string()}).code == 0);
  for (const char* f : {"series.csv", "fit.json"}) CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
}

TEST_CASE("threshold with no crossing exits 3 and still writes the curve") {
  auto dir = tmp_dir("nocross");
  auto cfg = write_config(dir, "sweep_start = 1e-4\nsweep_stop = 1e-3\nsweep_points = 5\nn_steps = 3\noutput_dir = " +
                                   (dir / "out").string() + "\n");
  auto r = cli({"threshold", cfg.string()});
  CHECK(r.code == 3);
  CHECK(r.err.find("no crossing bracketed") != std::string::npos);
  CHECK(fs::exists(dir / "out" / "curve.csv"));
  auto j = nlohmann::json::parse(slurp(dir / "out" / "threshold.json"));
  CHECK(j["gamma_star"].is_null());
  CHECK(j["grid"].size() == 5);
}

TEST_CASE("threshold over a bracketing grid") {
  auto dir = tmp_dir("cross");
  auto cfg = write_config(dir, "sweep_start = 3e-3\nsweep_stop = 1e-1\nsweep_points = 6\nn_steps = 5\noutput_dir = " +
                                   (dir / "out").string() + "\n");
  auto r = cli({"threshold", cfg.string()});
  REQUIRE(r.code == 0);
  auto j = nlohmann::json::parse(slurp(dir / "out" / "threshold.json"));
  const double g = j["gamma_star"].get<double>();
  CHECK(g > j["bracket"][0].get<double>() * (1 - 1e-12));
  CHECK(g < j["bracket"][1].get<double>() * (1 + 1e-12));
  std::istringstream csv(slurp(dir / "out" / "curve.csv"));
  std::string header;
  std::getline(csv, header);
  CHECK(header == "gamma,Gamma_n,Gamma_t,residual,branch_count");
  CHECK(fs::exists(dir / "out" / "baseline.csv"));
}

TEST_CASE("compare over protocols labels both curves") {
  auto dir = tmp_dir("compare");
  auto cfg = write_config(dir, "sweep_start = 1e-3\nsweep_stop = 1e-2\nsweep_points = 3\nn_steps = 3\noutput_dir = " +
                                   (dir / "out").string() + "\n");
  auto r = cli({"compare", cfg.string(), "--axis", "protocol"});
  REQUIRE(r.code == 0);
  std::istringstream csv(slurp(dir / "out" / "compare.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "label,gamma,Gamma_n,Gamma_t,residual,branch_count");
  int a = 0, b = 0;
  while (std::getline(csv, line)) {
    if (line.rfind("A,", 0) == 0) ++a;
    if (line.rfind("B,", 0) == 0) ++b;
  }
  CHECK(a == 3);
  CHECK(b == 3);
  CHECK(cli({"compare", cfg.string(), "--axis", "colour"}).code == 2);
}

TEST_CASE("five-qubit single point records bounded branch counts") {
  auto dir = tmp_dir("five");
  auto cfg = write_config(dir, "code = five-qubit\ngamma1 = 1e-4\nprotocol = B\nn_steps = 3\noutput_dir = " +
                                   (dir / "out").string() + "\n");
  auto r = cli({"run", cfg.string()});
  REQUIRE(r.code == 0);
  auto m = nlohmann::json::parse(slurp(dir / "out" / "manifest.json"));
  REQUIRE(m["points"].size() == 1);
  const int bc = m["points"][0]["max_branch_count"].get<int>();
  CHECK(bc >= 1);
  CHECK(bc <= 16);
}
