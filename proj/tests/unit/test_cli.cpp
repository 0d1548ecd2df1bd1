#include <doctest.h>

#include "occ/app.hpp"
#include "occ/io.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <unistd.h>

using namespace occ;
namespace fs = std::filesystem;

namespace {

struct Sandbox
{
  fs::path root;

  Sandbox()
  {
    static int counter = 0;
    root = fs::temp_directory_path() / ("occ_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~Sandbox() { fs::remove_all(root); }

  std::string config(std::string const &name, std::string const &body) const
  {
    fs::path p = root / name;
    std::ofstream(p) << body;
    return p.string();
  }
};

struct Outcome
{
  int         code;
  std::string out, log;
};

Outcome cli(std::vector<std::string> args)
{
  args.insert(args.begin(), "occfluct");
  std::vector<char const *> argv;
  for (auto const &a : args) argv.push_back(a.c_str());
  std::ostringstream out, log;
  int const          code = run_cli(static_cast<int>(argv.size()), argv.data(), out, log);
  return {code, out.str(), log.str()};
}

std::string slurp(fs::path const &p)
{
  std::ifstream      f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::vector<std::string> lines(std::string const &text)
{
  std::vector<std::string> out;
  std::istringstream       s(text);
  for (std::string l; std::getline(s, l);) out.push_back(l);
  return out;
}

size_t columns(std::string const &line) { return static_cast<size_t>(std::count(line.begin(), line.end(), ',')) + 1; }

std::string const small_sim = R"({
  "params": {"d": 1, "alpha": 0.75, "V": 1},
  "start": {"type": "poisson", "L": 40},
  "phi": {"sigma": 1},
  "T": [2, 4],
  "grid": {"points": 4, "steps": 64},
  "replicas": 96,
  "records": true,
  "seed": 11
})";

} // namespace

TEST_SUITE("cli")
{
  TEST_CASE("missing required field names its path")
  {
    Sandbox     box;
    std::string cfg = box.config("c.json", R"({"params": {"d": 3, "V": 1}, "T": [1], "start": {"L": 10}})");
    Outcome     r = cli({"simulate", "--config", cfg, "--out", (box.root / "o").string()});
    CHECK(r.code == 2);
    CHECK(r.log.find("params.alpha") != std::string::npos);
  }

  TEST_CASE("unknown fields and bad values are config errors")
  {
    Sandbox box;
    auto    o = (box.root / "o").string();
    Outcome r = cli({"simulate", "--config",
                     box.config("a.json", R"({"params": {"d": 1, "alpha": 1, "V": 1, "beta": 2}, "T": [1]})"), "--out",
                     o});
    CHECK(r.code == 2);
    CHECK(r.log.find("params.beta") != std::string::npos);

    r = cli({"simulate", "--config", box.config("b.json", R"({"params": {"d": 1, "alpha": 2.5, "V": 1}})"), "--out", o});
    CHECK(r.code == 2);

    r = cli({"simulate", "--config", box.config("c.json", "{not json"), "--out", o});
    CHECK(r.code == 2);

    r = cli({"simulate", "--config", (box.root / "absent.json").string()});
    CHECK(r.code == 2);
  }

  TEST_CASE("unknown subcommand and zero replicas")
  {
    Sandbox box;
    CHECK(cli({"simulat"}).code == 2);
    CHECK(cli({"verify-constants", "--bogus"}).code == 2);

    std::string cfg = box.config("c.json", R"({"params": {"d": 1, "alpha": 0.75, "V": 1},
      "start": {"L": 10}, "T": [1], "replicas": 0})");
    CHECK(cli({"simulate", "--config", cfg, "--out", (box.root / "o").string()}).code == 2);
  }

  TEST_CASE("oracle-only run writes the constants table")
  {
    Sandbox     box;
    std::string cfg = box.config("c.json", R"({"params": {"d": 3, "alpha": 2, "V": 1},
      "start": {"L": 10}, "T": [1], "oracles": {"constants": true}})");
    Outcome     r = cli({"simulate", "--config", cfg, "--out", (box.root / "o").string()});
    REQUIRE(r.code == 0);
    auto rows = lines(slurp(box.root / "o" / "constants.csv"));
    CHECK(rows[0].rfind("# config_hash=", 0) == 0);
    CHECK(rows[0].find("version=" OCC_VERSION) != std::string::npos);
    double K1 = -1.0;
    for (auto const &l : rows)
      if (l.rfind("K1,", 0) == 0) K1 = std::stod(l.substr(3));
    CHECK(std::abs(K1 - 1.0 / (3.0 * std::pow(std::numbers::pi, 1.5))) < 1e-15);
    CHECK(std::abs(K1 - 0.0598624) < 5e-8);
    CHECK(!fs::exists(box.root / "o" / "occupation_cov.csv"));
  }

  TEST_CASE("oracle toggles enforce intermediate dimensions")
  {
    Sandbox     box;
    std::string cfg = box.config("c.json", R"({"params": {"d": 1, "alpha": 2, "V": 1},
      "start": {"L": 10}, "T": [1], "oracles": {"constants": true}})");
    CHECK(cli({"simulate", "--config", cfg, "--out", (box.root / "o").string()}).code == 2);
  }

  TEST_CASE("verify-constants on defaults")
  {
    Sandbox box;
    Outcome r = cli({"verify-constants", "--out", box.root.string()});
    CHECK(r.code == 0);
    CHECK(r.out.find("FAIL") == std::string::npos);
    CHECK(r.out.find("PASS H_eq_dual_route") != std::string::npos);
    CHECK(r.out.find("PASS fbm_identity") != std::string::npos);
    CHECK(r.out.find("PASS decay_slope_B_zero") != std::string::npos);
  }

  TEST_CASE("limit-sample shape")
  {
    Sandbox     box;
    std::string cfg = box.config("c.json", R"({"limit": {"h": 1.5, "A": 1, "B": 0.5, "points": 200}, "seed": 5})");
    Outcome     r = cli({"limit-sample", "--config", cfg, "--out", box.root.string()});
    REQUIRE(r.code == 0);
    auto rows = lines(slurp(box.root / "limit_paths.csv"));
    REQUIRE(rows.size() == 2 + 201);
    for (size_t i = 1; i < rows.size(); ++i) CHECK(columns(rows[i]) == 201);
    // t = 0 is pinned
    CHECK(rows[2].find_first_not_of("0,") == std::string::npos);
    CHECK(rows[3].rfind("0.005,", 0) == 0);
  }

  TEST_CASE("simulate output is byte-identical across reruns and worker counts")
  {
    Sandbox     box;
    std::string cfg = box.config("c.json", small_sim);
    std::vector<std::string> const files{"occupation_cov.csv", "occupation_mean.csv", "occupation_report.json",
                                         "records.csv"};
    std::vector<std::string> first;
    for (int w : {1, 4, 1}) {
      fs::path const o = box.root / ("w" + std::to_string(w) + "_" + std::to_string(first.size()));
      Outcome        r = cli({"simulate", "--config", cfg, "--workers", std::to_string(w), "--out", o.string()});
      REQUIRE(r.code == 0);
      std::vector<std::string> now;
      for (auto const &f : files) now.push_back(slurp(o / f));
      if (first.empty()) first = now;
      else
        for (size_t i = 0; i < files.size(); ++i) CHECK_MESSAGE(now[i] == first[i], files[i]);
    }
    auto rows = lines(first[0]);
    CHECK(rows.size() == 2 + 2 * 25);
    CHECK(lines(first[3]).size() == 2 + 2 * 96 * 5);
    CHECK(first[2].find("runtime") == std::string::npos);

    // a different seed moves both the hash and the numbers
    fs::path const o = box.root / "seeded";
    REQUIRE(cli({"simulate", "--config", cfg, "--seed", "12", "--out", o.string()}).code == 0);
    std::string const other = slurp(o / "occupation_cov.csv");
    CHECK(lines(other)[0] != rows[0]);
    CHECK(lines(other).back() != rows.back());
  }

  TEST_CASE("environment overrides sit between the flags and the config")
  {
    Sandbox     box;
    std::string cfg = box.config("c.json", R"({"limit": {"points": 4, "paths": 3}, "output_dir": "unused"})");
    ::setenv("OUTPUT_DIR", (box.root / "env").string().c_str(), 1);
    Outcome r = cli({"limit-sample", "--config", cfg});
    CHECK(r.code == 0);
    CHECK(fs::exists(box.root / "env" / "limit_paths.csv"));
    r = cli({"limit-sample", "--config", cfg, "--out", (box.root / "flag").string()});
    CHECK(fs::exists(box.root / "flag" / "limit_paths.csv"));
    ::unsetenv("OUTPUT_DIR");

    ::setenv("WORKER_COUNT", "two", 1);
    CHECK(cli({"limit-sample", "--config", cfg, "--out", box.root.string()}).code == 2);
    CHECK(cli({"limit-sample", "--config", cfg, "--out", box.root.string(), "--workers", "2"}).code == 0);
    ::unsetenv("WORKER_COUNT");
  }

  TEST_CASE("unwritable output is a resource failure")
  {
    Sandbox box;
    std::ofstream(box.root / "file") << "x";
    Outcome r = cli({"verify-constants"});
    REQUIRE(r.code == 0);
    std::string cfg = box.config("c.json", R"({"limit": {"points": 4, "paths": 3}})");
    r = cli({"limit-sample", "--config", cfg, "--out", (box.root / "file" / "sub").string()});
    CHECK(r.code == 4);
  }

  TEST_CASE("exact-variance and solve-v tables")
  {
    Sandbox     box;
    std::string cfg = box.config("c.json", R"({"params": {"d": 1, "alpha": 0.75, "V": 1},
      "T": [5, 10], "windows": [[0, 1], [0.5, 1]],
      "solve": {"T": 2, "n": 256, "L": 64, "steps_per_unit": 32}})");
    Outcome     r = cli({"exact-variance", "--config", cfg, "--out", box.root.string()});
    REQUIRE(r.code == 0);
    auto rows = lines(slurp(box.root / "exact_variance.csv"));
    REQUIRE(rows.size() == 2 + 4);
    CHECK(columns(rows[2]) == 11);

    r = cli({"solve-v", "--config", cfg, "--out", box.root.string()});
    REQUIRE(r.code == 0);
    CHECK(lines(slurp(box.root / "solve_v.csv")).size() == 2 + 256);
    CHECK(slurp(box.root / "solve_v.json").find("\"iterations\"") != std::string::npos);
  }

  TEST_CASE("estimate-h writes both curves")
  {
    Sandbox     box;
    std::string cfg = box.config("c.json", R"({"params": {"d": 3, "alpha": 2, "V": 1},
      "clans": {"kind": "equilibrium", "tau_max": 20, "count": 200, "t_grid": [1, 4], "r_grid": [1, 2]}})");
    Outcome     r = cli({"estimate-h", "--config", cfg, "--out", box.root.string()});
    REQUIRE(r.code == 0);
    CHECK(lines(slurp(box.root / "h_palm.csv")).size() == 4);
    CHECK(lines(slurp(box.root / "h_ball.csv")).size() == 4);
    CHECK(slurp(box.root / "h_report.json").find("\"H_eq\"") != std::string::npos);
  }
}
