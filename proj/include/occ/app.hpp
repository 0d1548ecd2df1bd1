#pragma once

#include "model_params.hpp"
#include "test_function.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace occ {

enum ExitCode : int
{
  exit_ok = 0,
  exit_internal = 1,
  exit_config = 2,
  exit_numeric = 3,
  exit_resource = 4,
};

struct StartConfig
{
  std::string type = "poisson"; // poisson | compound | burnin | single
  double      L = 0.0;
  double      intensity = 1.0;
  double      t0 = 0.0;
  double      margin_factor = 5.0;
  std::string law = "thinned_pairs"; // singleton | thinned_pairs
  double      radius = 1.0;
  Point       x;
};

struct ExperimentConfig
{
  std::string command;
  ModelParams params;
  StartConfig start;
  TestFunction phi;
  std::vector<double> T;
  int          grid_points = 8;
  int          steps = 2048; // time steps per horizon
  std::int64_t replicas = 0;
  int          batches = 32;
  std::uint64_t seed = 0;
  int          workers = 0;
  std::string  output_dir = "out";
  bool         write_records = false;
  double       kill_radius = 0.0;
  std::int64_t cap = 10'000'000;

  bool oracle_exact_L = false;
  bool oracle_constants = false;
  bool oracle_limit = false;

  std::vector<std::pair<double, double>> windows{{0.0, 1.0}};

  struct Limit
  {
    double h = 1.5, A = 1.0, B = 0.5;
    int    points = 200, paths = 200;
  } limit;

  struct Clans
  {
    std::string         kind = "equilibrium"; // poisson | compound | equilibrium
    double              tau_max = 100.0;
    std::int64_t        count = 1000;
    std::vector<double> t_grid{1.0, 10.0, 100.0};
    std::vector<double> r_grid{1.0, 2.0, 4.0};
  } clans;

  struct Solve
  {
    double t1 = 0.0, t2 = 1.0, T = 1.0;
    int    n = 1024;
    double L = 256.0;
    double steps_per_unit = 64.0;
    double tol = 1e-10;
    int    max_iter = 50;
  } solve;

  std::string canonical; // normalized JSON used for the hash
  std::string hash;
};

struct RunOptions
{
  std::string                  command; // empty: taken from the config
  std::string                  config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int>           workers;
  std::optional<std::string>   out_dir;
};

// Parses a JSON document; throws ConfigError naming the offending field.
ExperimentConfig parse_config(std::string const &text, RunOptions const &opts);

int run(RunOptions const &opts, std::ostream &out, std::ostream &log);
int run_cli(int argc, char const *const *argv, std::ostream &out, std::ostream &log);

} // namespace occ
