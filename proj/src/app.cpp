#include "occ/app.hpp"

#include "occ/analytic.hpp"
#include "occ/branching_sim.hpp"
#include "occ/estimators.hpp"
#include "occ/initial_measures.hpp"
#include "occ/io.hpp"
#include "occ/limit_gaussian.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace occ {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::set<std::string> const commands{"simulate",       "limit-sample",     "estimate-h",
                                     "exact-variance", "verify-constants", "solve-v"};

// Walks one JSON object, remembers which keys were read and rejects the rest.
class Reader
{
public:
  Reader(json const *node, std::string path) : node_(node), path_(std::move(path))
  {
    if (node_ && !node_->is_object()) throw ConfigError(where() + " must be an object");
  }

  bool present() const { return node_ != nullptr; }
  bool has(std::string const &key) const { return node_ && node_->contains(key); }

  std::string field(std::string const &key) const { return path_.empty() ? key : path_ + "." + key; }

  json const &require(std::string const &key)
  {
    if (!has(key)) throw ConfigError("missing required field '" + field(key) + "'");
    seen_.insert(key);
    return node_->at(key);
  }

  double number(std::string const &key) { return as_number(require(key), key); }
  double number(std::string const &key, double def) { return has(key) ? number(key) : def; }

  std::int64_t integer(std::string const &key) { return as_integer(require(key), key); }
  std::int64_t integer(std::string const &key, std::int64_t def) { return has(key) ? integer(key) : def; }

  std::uint64_t unsigned_integer(std::string const &key, std::uint64_t def)
  {
    if (!has(key)) return def;
    json const &v = require(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    throw ConfigError("field '" + field(key) + "' must be a non-negative integer");
  }

  bool boolean(std::string const &key, bool def)
  {
    if (!has(key)) return def;
    json const &v = require(key);
    if (!v.is_boolean()) throw ConfigError("field '" + field(key) + "' must be true or false");
    return v.get<bool>();
  }

  std::string string(std::string const &key, std::string def)
  {
    if (!has(key)) return def;
    json const &v = require(key);
    if (!v.is_string()) throw ConfigError("field '" + field(key) + "' must be a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(std::string const &key)
  {
    json const &v = require(key);
    if (!v.is_array()) throw ConfigError("field '" + field(key) + "' must be an array of numbers");
    std::vector<double> out;
    for (size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], key + "[" + std::to_string(i) + "]"));
    return out;
  }
  std::vector<double> numbers(std::string const &key, std::vector<double> def)
  {
    return has(key) ? numbers(key) : std::move(def);
  }

  Reader child(std::string const &key)
  {
    if (!has(key)) return Reader(nullptr, field(key));
    return Reader(&require(key), field(key));
  }

  void finish() const
  {
    if (!node_) return;
    for (auto const &[k, v] : node_->items())
      if (!seen_.count(k)) throw ConfigError("unknown field '" + field(k) + "'");
  }

private:
  std::string where() const { return path_.empty() ? "config" : "field '" + path_ + "'"; }

  double as_number(json const &v, std::string const &key) const
  {
    if (!v.is_number()) throw ConfigError("field '" + field(key) + "' must be a number");
    return v.get<double>();
  }
  std::int64_t as_integer(json const &v, std::string const &key) const
  {
    if (!v.is_number_integer()) throw ConfigError("field '" + field(key) + "' must be an integer");
    return v.get<std::int64_t>();
  }

  json const           *node_;
  std::string           path_;
  std::set<std::string> seen_;
};

void check(bool ok, std::string const &msg)
{
  if (!ok) throw ConfigError(msg);
}

json to_json(Vector const &v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json to_json(Matrix const &m)
{
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(to_json(Vector(m.row(i).transpose())));
  return rows;
}

json to_json(EstimateReport const &r)
{
  return {{"x", to_json(r.x)},
          {"estimate", to_json(r.estimate)},
          {"std_error", to_json(r.std_error)},
          {"count", r.count},
          {"batches", r.batches},
          {"flags", r.flags}};
}

json canonical(ExperimentConfig const &c)
{
  json j;
  j["command"] = c.command;
  j["params"] = {{"d", c.params.d}, {"alpha", c.params.alpha}, {"V", c.params.V}};
  j["start"] = {{"type", c.start.type},   {"L", c.start.L},     {"intensity", c.start.intensity},
                {"t0", c.start.t0},       {"margin_factor", c.start.margin_factor},
                {"law", c.start.law},     {"radius", c.start.radius}, {"x", to_json(Vector(c.start.x))}};
  j["phi"] = {{"sigma", c.phi.sigma}, {"amplitude", c.phi.amplitude}, {"center", to_json(Vector(c.phi.center))}};
  j["T"] = c.T;
  j["grid"] = {{"points", c.grid_points}, {"steps", c.steps}};
  j["replicas"] = c.replicas;
  j["batches"] = c.batches;
  j["seed"] = c.seed;
  j["records"] = c.write_records;
  j["kill_radius"] = c.kill_radius;
  j["cap"] = c.cap;
  j["oracles"] = {{"exact_L", c.oracle_exact_L}, {"constants", c.oracle_constants}, {"limit", c.oracle_limit}};
  json w = json::array();
  for (auto [a, b] : c.windows) w.push_back({a, b});
  j["windows"] = w;
  j["limit"] = {{"h", c.limit.h}, {"A", c.limit.A}, {"B", c.limit.B}, {"points", c.limit.points},
                {"paths", c.limit.paths}};
  j["clans"] = {{"kind", c.clans.kind},     {"tau_max", c.clans.tau_max}, {"count", c.clans.count},
                {"t_grid", c.clans.t_grid}, {"r_grid", c.clans.r_grid}};
  j["solve"] = {{"t1", c.solve.t1},   {"t2", c.solve.t2},
                {"T", c.solve.T},     {"n", c.solve.n},
                {"L", c.solve.L},     {"steps_per_unit", c.solve.steps_per_unit},
                {"tol", c.solve.tol}, {"max_iter", c.solve.max_iter}};
  return j;
}

Point read_point(Reader &r, std::string const &key, int d)
{
  if (!r.has(key)) return Point::Zero(d);
  std::vector<double> v = r.numbers(key);
  check(static_cast<int>(v.size()) == d, "field '" + r.field(key) + "' must have " + std::to_string(d) + " entries");
  Point p(d);
  for (int i = 0; i < d; ++i) p[i] = v[static_cast<size_t>(i)];
  return p;
}

bool needs_params(std::string const &cmd) { return cmd != "limit-sample" && cmd != "verify-constants"; }

} // namespace

ExperimentConfig parse_config(std::string const &text, RunOptions const &opts)
{
  json doc;
  try {
    doc = json::parse(text);
  } catch (json::parse_error const &e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  Reader           root(&doc, "");
  ExperimentConfig c;

  c.command = root.string("command", "");
  if (!opts.command.empty()) c.command = opts.command;
  check(!c.command.empty(), "no subcommand given and config has no 'command'");
  check(commands.count(c.command) > 0, "unknown subcommand '" + c.command + "'");

  {
    Reader p = root.child("params");
    if (!p.present() && !needs_params(c.command)) {
      c.params = ModelParams(3, 2.0, 1.0);
    } else {
      if (!p.present()) throw ConfigError("missing required field 'params'");
      auto const d = p.integer("d");
      double const alpha = p.number("alpha");
      double const V = p.number("V");
      check(d >= 1 && d <= 3, "field 'params.d' must be 1, 2 or 3");
      c.params = ModelParams(static_cast<int>(d), alpha, V);
    }
    p.finish();
  }
  int const d = c.params.d;

  {
    Reader s = root.child("start");
    c.start.type = s.string("type", "poisson");
    check(c.start.type == "poisson" || c.start.type == "compound" || c.start.type == "burnin" ||
              c.start.type == "single",
          "field 'start.type' must be poisson, compound, burnin or single");
    bool const windowed = c.start.type != "single";
    c.start.L = (windowed && c.command == "simulate") ? s.number("L") : s.number("L", 0.0);
    c.start.intensity = s.number("intensity", 1.0);
    c.start.t0 = s.number("t0", 0.0);
    c.start.margin_factor = s.number("margin_factor", 5.0);
    c.start.law = s.string("law", "thinned_pairs");
    c.start.radius = s.number("radius", 1.0);
    c.start.x = read_point(s, "x", d);
    check(!windowed || c.command != "simulate" || c.start.L > 0.0, "field 'start.L' must be > 0");
    check(c.start.intensity > 0.0, "field 'start.intensity' must be > 0");
    check(c.start.t0 >= 0.0, "field 'start.t0' must be >= 0");
    check(c.start.law == "singleton" || c.start.law == "thinned_pairs",
          "field 'start.law' must be singleton or thinned_pairs");
    s.finish();
  }
  {
    Reader f = root.child("phi");
    double const sigma = f.number("sigma", 1.0);
    double const amp = f.number("amplitude", 1.0);
    c.phi = TestFunction(read_point(f, "center", d), sigma, amp);
    f.finish();
  }

  bool const need_T = c.command == "simulate" || c.command == "exact-variance";
  c.T = need_T ? root.numbers("T") : root.numbers("T", {});
  for (double T : c.T) check(T > 0.0, "field 'T' entries must be > 0");
  check(!need_T || !c.T.empty(), "field 'T' must not be empty");

  {
    Reader g = root.child("grid");
    c.grid_points = static_cast<int>(g.integer("points", 8));
    c.steps = static_cast<int>(g.integer("steps", 2048));
    check(c.grid_points >= 1, "field 'grid.points' must be >= 1");
    check(c.steps >= 1 && c.steps % c.grid_points == 0, "field 'grid.steps' must be a positive multiple of grid.points");
    g.finish();
  }

  c.replicas = root.integer("replicas", 0);
  if (root.has("replicas")) check(c.replicas >= 1, "field 'replicas' must be >= 1");
  c.batches = static_cast<int>(root.integer("batches", 32));
  check(c.batches >= 30, "field 'batches' must be >= 30");
  c.seed = root.unsigned_integer("seed", 0);
  c.workers = static_cast<int>(root.integer("workers", 0));
  check(c.workers >= 0, "field 'workers' must be >= 0");
  c.output_dir = root.string("output_dir", "out");
  c.write_records = root.boolean("records", false);
  c.kill_radius = root.number("kill_radius", 0.0);
  check(c.kill_radius >= 0.0, "field 'kill_radius' must be >= 0");
  c.cap = root.integer("cap", 10'000'000);
  check(c.cap >= 1, "field 'cap' must be >= 1");

  {
    Reader o = root.child("oracles");
    c.oracle_exact_L = o.boolean("exact_L", false);
    c.oracle_constants = o.boolean("constants", false);
    c.oracle_limit = o.boolean("limit", false);
    o.finish();
  }
  if (root.has("windows")) {
    json const &w = root.require("windows");
    check(w.is_array() && !w.empty(), "field 'windows' must be a non-empty array of [t1, t2] pairs");
    c.windows.clear();
    for (size_t i = 0; i < w.size(); ++i) {
      std::string const f = "windows[" + std::to_string(i) + "]";
      check(w[i].is_array() && w[i].size() == 2 && w[i][0].is_number() && w[i][1].is_number(),
            "field '" + f + "' must be a pair of numbers");
      double const a = w[i][0].get<double>(), b = w[i][1].get<double>();
      check(0.0 <= a && a <= b && b <= 1.0, "field '" + f + "' must satisfy 0 <= t1 <= t2 <= 1");
      c.windows.emplace_back(a, b);
    }
  }
  {
    Reader l = root.child("limit");
    c.limit.h = l.number("h", 1.5);
    c.limit.A = l.number("A", 1.0);
    c.limit.B = l.number("B", 0.5);
    c.limit.points = static_cast<int>(l.integer("points", 200));
    c.limit.paths = static_cast<int>(l.integer("paths", 200));
    check(c.limit.points >= 1, "field 'limit.points' must be >= 1");
    check(c.limit.paths >= 1, "field 'limit.paths' must be >= 1");
    l.finish();
  }
  {
    Reader k = root.child("clans");
    c.clans.kind = k.string("kind", "equilibrium");
    check(c.clans.kind == "poisson" || c.clans.kind == "compound" || c.clans.kind == "equilibrium",
          "field 'clans.kind' must be poisson, compound or equilibrium");
    c.clans.tau_max = k.number("tau_max", 100.0);
    c.clans.count = k.integer("count", 1000);
    c.clans.t_grid = k.numbers("t_grid", c.clans.t_grid);
    c.clans.r_grid = k.numbers("r_grid", c.clans.r_grid);
    check(c.clans.count >= 1, "field 'clans.count' must be >= 1");
    check(c.clans.tau_max > 0.0, "field 'clans.tau_max' must be > 0");
    k.finish();
  }
  {
    Reader s = root.child("solve");
    c.solve.t1 = s.number("t1", 0.0);
    c.solve.t2 = s.number("t2", 1.0);
    c.solve.T = s.number("T", 1.0);
    c.solve.n = static_cast<int>(s.integer("n", 1024));
    c.solve.L = s.number("L", 256.0);
    c.solve.steps_per_unit = s.number("steps_per_unit", 64.0);
    c.solve.tol = s.number("tol", 1e-10);
    c.solve.max_iter = static_cast<int>(s.integer("max_iter", 50));
    check(c.solve.n >= 4, "field 'solve.n' must be >= 4");
    check(c.solve.L > 0.0 && c.solve.steps_per_unit > 0.0, "fields 'solve.L' and 'solve.steps_per_unit' must be > 0");
    s.finish();
  }
  root.finish();

  if (opts.seed) c.seed = *opts.seed;
  if (c.oracle_exact_L || c.oracle_constants || c.oracle_limit)
    ModelParams::intermediate(c.params.d, c.params.alpha, c.params.V);

  c.canonical = canonical(c).dump();
  c.hash = io::hex64(io::fnv1a(c.canonical));
  return c;
}

namespace {

struct Context
{
  ExperimentConfig const &cfg;
  fs::path                out_dir;
  int                     workers;
  std::ostream           &out;
  std::ostream           &log;

  void write(std::string const &name, std::string const &content) const
  {
    fs::path const p = out_dir / name;
    io::write_file(p, content);
    log << "event=write path=" << p.string() << '\n';
  }
  void write_json(std::string const &name, json body) const
  {
    body["config_hash"] = cfg.hash;
    body["version"] = OCC_VERSION;
    body["seed"] = cfg.seed;
    write(name, body.dump(2) + "\n");
  }
};

Vector rescaled_grid(int points)
{
  Vector t(points + 1);
  for (int i = 0; i <= points; ++i) t[i] = static_cast<double>(i) / points;
  return t;
}

PointConfiguration make_start(ExperimentConfig const &c, Rng &rng)
{
  auto const &s = c.start;
  int const   d = c.params.d;
  if (s.type == "poisson") return sample_poisson(d, s.L, s.intensity, rng);
  if (s.type == "compound") {
    ClanLaw const law = s.law == "singleton" ? ClanLaw::singleton(d) : ClanLaw::thinned_pairs(d, s.radius);
    return sample_compound_clans(s.L, law, rng);
  }
  if (s.type == "burnin") return sample_equilibrium_burnin(d, s.L, s.t0, c.params, rng, s.margin_factor, c.cap);
  return PointConfiguration::single(s.x, s.L);
}

Lambda0 lambda0_of(ExperimentConfig const &c)
{
  if (c.start.type == "poisson") return Lambda0::poisson;
  if (c.start.type == "burnin") return Lambda0::equilibrium;
  throw ConfigError("exact variance needs start.type poisson or burnin");
}

// <lambda, phi>^2 (K1 C_h + K2 H c_h) for the increment over [t1, t2]
double limit_increment(ExperimentConfig const &c, Lambda0 lam, double t1, double t2)
{
  Constants const k = constants(c.params);
  double const    h = c.params.h();
  double const    H = lam == Lambda0::equilibrium ? k.H_eq_closed : 0.0;
  auto            inc = [&](auto f) { return f(t2, t2, h) - 2.0 * f(t1, t2, h) + f(t1, t1, h); };
  double const    m = c.phi.mass();
  return m * m * (k.K1 * inc(cov_subfbm<double>) + k.K2 * H * inc(cov_ch<double>));
}

void write_constants(Context const &ctx)
{
  Constants const k = constants(ctx.cfg.params);
  io::Csv         csv({"name", "value"}, ctx.cfg.hash);
  auto            add = [&](std::string n, double v) { csv.row({std::move(n), io::format(v)}); };
  add("h", ctx.cfg.params.h());
  add("K1", k.K1);
  add("K2", k.K2);
  add("c_alpha_d", k.c_alpha_d);
  add("H_eq_closed", k.H_eq_closed);
  add("H_eq_quadrature", k.H_eq_quadrature);
  add("c_alpha", k.c_alpha);
  add("ball_constant", k.ball_constant);
  ctx.write("constants.csv", csv.str());
}

void cmd_simulate(Context const &ctx)
{
  ExperimentConfig const &c = ctx.cfg;
  bool const              mc = c.replicas > 0;
  check(mc || c.oracle_exact_L || c.oracle_constants || c.oracle_limit,
        "simulate needs 'replicas' or at least one oracle toggle");
  if (c.oracle_exact_L) {
    check(c.start.intensity == 1.0, "oracles.exact_L needs start.intensity = 1");
    lambda0_of(c);
  }

  Vector const grid = rescaled_grid(c.grid_points);
  SimOptions   sim;
  sim.cap = c.cap;
  sim.kill_radius = c.kill_radius;

  io::Csv cov({"T", "t_i", "t_j", "estimate", "stderr"}, c.hash);
  io::Csv mean({"T", "t", "estimate", "stderr"}, c.hash);
  io::Csv records({"T", "replica", "t", "value"}, c.hash);
  io::Csv exact({"T", "t", "L", "J1", "J2", "J3", "J1_fstar", "limit", "mc", "mc_stderr"}, c.hash);
  json    reports = json::array();

  for (size_t ti = 0; ti < c.T.size(); ++ti) {
    double const T = c.T[ti];
    double const dt = T / c.steps;
    Matrix       surface, surface_se;

    if (mc) {
      std::vector<Vector> kept(c.write_records ? static_cast<size_t>(c.replicas) : 0);
      auto                replica = [&](std::int64_t i) -> Vector {
        std::uint64_t const key = (static_cast<std::uint64_t>(ti) << 40) | static_cast<std::uint64_t>(i);
        Rng                 srng = make_stream(c.seed, key, StreamTag::start);
        PointConfiguration  start = make_start(c, srng);
        Rng                 rng = make_stream(c.seed, key, StreamTag::replica);
        MassPath const      path = simulate_mass_path(start, c.params, T, c.phi, dt, rng, sim);
        Vector              v = occupation_fluctuation(path, c.params, T, c.phi, grid).values;
        if (c.write_records) kept[static_cast<size_t>(i)] = v;
        return v;
      };
      auto const     acc = run_batched(c.replicas, c.batches, ctx.workers, grid, replica);
      EstimateReport rc = estimate_cov_surface(acc);
      EstimateReport rm = estimate_mean_curve(acc);
      rc.meta.config_hash = rm.meta.config_hash = c.hash;
      rc.meta.seed = rm.meta.seed = c.seed;

      for (Eigen::Index i = 0; i < grid.size(); ++i) {
        mean.row({T, grid[i], rm.estimate(i, 0), rm.std_error(i, 0)});
        for (Eigen::Index j = 0; j < grid.size(); ++j)
          cov.row({T, grid[i], grid[j], rc.estimate(i, j), rc.std_error(i, j)});
      }
      for (std::int64_t r = 0; r < static_cast<std::int64_t>(kept.size()); ++r)
        for (Eigen::Index i = 0; i < grid.size(); ++i)
          records.row({io::format(T), io::format(r), io::format(grid[i]), io::format(kept[r][i])});
      surface = rc.estimate;
      surface_se = rc.std_error;
      reports.push_back({{"T", T}, {"covariance", to_json(rc)}, {"mean", to_json(rm)}});
    }

    if (c.oracle_exact_L) {
      Lambda0 const lam = lambda0_of(c);
      for (Eigen::Index i = 1; i < grid.size(); ++i) {
        ExactL const e = exact_L(0.0, grid[i], T, c.phi, lam, c.params);
        std::vector<std::string> row{io::format(T),  io::format(grid[i]), io::format(e.L),
                                     io::format(e.J1), io::format(e.J2),  io::format(e.J3),
                                     io::format(e.J1_fstar), io::format(limit_increment(c, lam, 0.0, grid[i]))};
        row.push_back(mc ? io::format(surface(i, i)) : "");
        row.push_back(mc ? io::format(surface_se(i, i)) : "");
        exact.row(std::move(row));
      }
    }
  }

  if (mc) {
    ctx.write("occupation_cov.csv", cov.str());
    ctx.write("occupation_mean.csv", mean.str());
    ctx.write_json("occupation_report.json",
                   {{"replicas", c.replicas}, {"start", c.start.type}, {"t0", c.start.t0}, {"reports", reports}});
    if (c.write_records) ctx.write("records.csv", records.str());
  }
  if (c.oracle_exact_L) ctx.write("exact_L.csv", exact.str());
  if (c.oracle_constants) write_constants(ctx);
  if (c.oracle_limit) {
    Lambda0 const lam = c.start.type == "burnin" ? Lambda0::equilibrium : Lambda0::poisson;
    io::Csv       lim({"t_i", "t_j", "limit"}, c.hash);
    Constants const k = constants(c.params);
    double const    h = c.params.h(), m2 = c.phi.mass() * c.phi.mass();
    double const    H = lam == Lambda0::equilibrium ? k.H_eq_closed : 0.0;
    for (Eigen::Index i = 0; i < grid.size(); ++i)
      for (Eigen::Index j = 0; j < grid.size(); ++j)
        lim.row({grid[i], grid[j],
                 m2 * (k.K1 * cov_subfbm(grid[i], grid[j], h) + k.K2 * H * cov_ch(grid[i], grid[j], h))});
    ctx.write("limit_cov.csv", lim.str());
  }
}

void cmd_limit_sample(Context const &ctx)
{
  ExperimentConfig const &c = ctx.cfg;
  CovarianceSpec          spec{c.limit.h, c.limit.A, c.limit.B, rescaled_grid(c.limit.points)};
  spec.validate();
  int const           chunk = 64;
  int const           chunks = (c.limit.paths + chunk - 1) / chunk;
  std::vector<Matrix> parts(static_cast<size_t>(chunks));
  std::vector<double> jitter(static_cast<size_t>(chunks));
  parallel_for(chunks, ctx.workers, [&](std::int64_t k) {
    int const  n = std::min(chunk, c.limit.paths - static_cast<int>(k) * chunk);
    Rng        rng = make_stream(c.seed, static_cast<std::uint64_t>(k), StreamTag::gaussian);
    PathSample s = sample_paths(spec, n, rng);
    parts[k] = std::move(s.paths);
    jitter[k] = s.jitter;
  });

  std::vector<std::string> cols{"t"};
  for (int p = 0; p < c.limit.paths; ++p) cols.push_back("path_" + std::to_string(p));
  io::Csv csv(cols, c.hash);
  for (Eigen::Index i = 0; i < spec.grid.size(); ++i) {
    std::vector<double> row{spec.grid[i]};
    for (auto const &m : parts)
      for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    csv.row(row);
  }
  ctx.write("limit_paths.csv", csv.str());
  ctx.write_json("limit_paths.json", {{"h", c.limit.h},
                                      {"A", c.limit.A},
                                      {"B", c.limit.B},
                                      {"points", c.limit.points},
                                      {"paths", c.limit.paths},
                                      {"jitter", *std::max_element(jitter.begin(), jitter.end())}});
}

void write_h(Context const &ctx, std::string const &name, std::string const &xname, HReport const &r)
{
  io::Csv csv({xname, "estimate", "stderr", "atom", "tail_fraction", "tail_flag"}, ctx.cfg.hash);
  for (Eigen::Index i = 0; i < r.curve.x.size(); ++i)
    csv.row({io::format(r.curve.x[i]), io::format(r.curve.estimate(i, 0)), io::format(r.curve.std_error(i, 0)),
             io::format(r.atom[i]), io::format(r.tail_fraction[i]), r.tail_flag[static_cast<size_t>(i)] ? "1" : "0"});
  ctx.write(name, csv.str());
}

void cmd_estimate_h(Context const &ctx)
{
  ExperimentConfig const &c = ctx.cfg;
  auto const             &k = c.clans;
  std::vector<PalmClanSample> clans(static_cast<size_t>(k.count));
  ClanLaw const law = c.start.law == "singleton" ? ClanLaw::singleton(c.params.d)
                                                 : ClanLaw::thinned_pairs(c.params.d, c.start.radius);
  parallel_for(k.count, ctx.workers, [&](std::int64_t i) {
    Rng rng = make_stream(c.seed, static_cast<std::uint64_t>(i), StreamTag::clan);
    if (k.kind == "equilibrium")
      clans[i] = sample_palm_clan_eq(c.params, k.tau_max, rng, c.cap);
    else if (k.kind == "compound")
      clans[i] = sample_palm_clan_compound(law, rng);
    else
      clans[i] = palm_clan_poisson(c.params.d);
  });

  auto to_vec = [](std::vector<double> const &v) { return Vector(Eigen::Map<Vector const>(v.data(), v.size())); };
  HReport const palm = estimate_H_palm(clans, to_vec(k.t_grid), c.params, c.batches);
  HReport const ball = estimate_H_ball(clans, to_vec(k.r_grid), c.params, c.batches);
  write_h(ctx, "h_palm.csv", "t", palm);
  write_h(ctx, "h_ball.csv", "r", ball);

  json body{{"kind", k.kind},
            {"tau_max", k.kind == "equilibrium" ? k.tau_max : 0.0},
            {"count", k.count},
            {"moment_ratio", palm.moment_ratio},
            {"palm", to_json(palm.curve)},
            {"ball", to_json(ball.curve)}};
  if (c.params.is_intermediate() && c.params.V > 0.0) {
    Constants const kc = constants(c.params);
    body["H_eq"] = kc.H_eq_closed;
    body["ball_constant"] = kc.ball_constant;
  }
  ctx.write_json("h_report.json", body);
}

void cmd_exact_variance(Context const &ctx)
{
  ExperimentConfig const &c = ctx.cfg;
  Lambda0 const           lam = lambda0_of(c);
  check(c.start.intensity == 1.0, "exact variance needs start.intensity = 1");
  bool const limit = c.params.is_intermediate() && c.params.V > 0.0;
  double const m2 = c.phi.mass() * c.phi.mass();
  io::Csv csv({"T", "t1", "t2", "L", "J1", "J2", "J3", "J1_fstar", "F", "limit", "ratio"}, c.hash);
  for (double T : c.T)
    for (auto [t1, t2] : c.windows) {
      ExactL const e = exact_L(t1, t2, T, c.phi, lam, c.params);
      double const lim = limit ? limit_increment(c, lam, t1, t2) : std::nan("");
      csv.row({T, t1, t2, e.L, e.J1, e.J2, e.J3, e.J1_fstar, e.F, lim, e.L / m2});
    }
  ctx.write("exact_variance.csv", csv.str());
  if (c.oracle_constants) write_constants(ctx);
}

struct Verdict
{
  int pass = 0, fail = 0;
  std::ostream &out;

  void operator()(std::string const &name, double value, double target, double tol, bool relative = false)
  {
    double const err = std::abs(value - target) / (relative ? std::abs(target) : 1.0);
    bool const   ok = err <= tol;
    (ok ? pass : fail) += 1;
    out << (ok ? "PASS " : "FAIL ") << name << " value=" << io::format(value) << " target=" << io::format(target)
        << " tol=" << io::format(tol) << '\n';
  }
};

void cmd_verify_constants(Context const &ctx, int &status)
{
  ModelParams const p = ModelParams::intermediate(ctx.cfg.params.d, ctx.cfg.params.alpha, ctx.cfg.params.V);
  Constants const   k = constants(p);
  double const      h = p.h();
  Verdict           v{0, 0, ctx.out};
  double const      pi = std::numbers::pi;

  v("K2", k.K2, 1.0 / (h * (h - 1.0)), 1e-15, true);
  v("H_eq_dual_route", k.H_eq_quadrature, k.H_eq_closed, 1e-6, true);
  v("H_eq_K1_identity", k.H_eq_closed, k.K1 * h * (h - 1.0) / 2.0, 1e-10);
  v("c_alpha_ball_H_eq", k.c_alpha * k.ball_constant, k.H_eq_closed, 1e-6, true);

  double worst = 0.0, zero = 0.0;
  for (int i = 0; i < 50; ++i)
    for (int j = 0; j < 50; ++j) {
      double const s = 0.02 * (i + 1) * 3.0, t = 0.02 * (j + 1) * 3.0;
      double const lhs = cov_subfbm(s, t, h) + 0.5 * cov_ch(s, t, h);
      double const rhs = 0.5 * (std::pow(s, h) + std::pow(t, h) - std::pow(std::abs(s - t), h));
      worst = std::max(worst, std::abs(lhs - rhs));
      zero = std::max({zero, std::abs(cov_subfbm(0.0, t, h)), std::abs(cov_ch(0.0, t, h))});
    }
  v("fbm_identity", worst, 0.0, 1e-12);
  v("zero_time", zero, 0.0, 0.0);

  Vector tau(25), R(25);
  for (double B : {0.5, 0.0}) {
    CovarianceSpec spec{h, 1.0, B, {}};
    for (int i = 0; i < tau.size(); ++i) {
      tau[i] = std::pow(10.0, 2.0 + 2.0 * i / (tau.size() - 1));
      R[i] = std::abs(increment_correlation(0.0, 1.0, 1.0, 2.0, tau[i], spec));
    }
    SlopeFit const fit = fit_decay_exponent(tau, R);
    v(B > 0.0 ? "decay_slope_B_positive" : "decay_slope_B_zero", fit.slope, B > 0.0 ? h - 2.0 : h - 3.0, 0.05);
  }

  for (auto const &row : tauberian_c_alpha_check(Lambda0::equilibrium, p, {1.0, 100.0})) {
    std::string const at = "_t=" + io::format(row.t);
    v("tauberian_palm" + at, row.palm, k.H_eq_closed, 1e-5, true);
    v("tauberian_ball" + at, row.ball, k.ball_constant, 1e-8, true);
  }

  if (p.d == 3 && p.alpha == 2.0) {
    v("K1_closed_form", k.K1, p.V / (3.0 * std::pow(pi, 1.5)), 1e-10);
    v("c_alpha_d_closed_form", k.c_alpha_d, 1.0 / (4.0 * pi), 1e-12);
    v("H_eq_closed_form", k.H_eq_closed, p.V * std::pow(4.0 * pi, -1.5), 1e-10);
  }
  ctx.out << "summary pass=" << v.pass << " fail=" << v.fail << '\n';
  status = v.fail == 0 ? exit_ok : exit_numeric;
}

void cmd_solve_v(Context const &ctx)
{
  ExperimentConfig const &c = ctx.cfg;
  auto const             &s = c.solve;
  TimeWindow              win{s.t1, s.t2, s.T};
  GridSpec                grid;
  grid.n = s.n;
  grid.L = s.L;
  grid.steps_per_unit = s.steps_per_unit;
  SolveReport const    rep = v_psi_solve(c.phi, win, c.params, grid, s.tol, s.max_iter);
  SpaceTimeField const nf = n_psi(c.phi, win, c.params, grid);
  GridField const     &v = rep.field.back();
  GridField const     &n = nf.back();

  // a line through the origin along the first axis
  io::Csv      csv({"x", "v", "n"}, c.hash);
  Eigen::Index stride = 1;
  for (int a = 1; a < v.d; ++a) stride *= v.n;
  Eigen::Index centre = 0;
  for (int a = 1; a < v.d; ++a) centre = centre * v.n + v.n / 2;
  for (int i = 0; i < v.n; ++i) {
    Eigen::Index const f = i * stride + centre;
    csv.row({v.coord(i), v.values[f], n.values[f]});
  }
  ctx.write("solve_v.csv", csv.str());

  Eigen::Index const o = v.flat_index(Point::Zero(v.d));
  std::vector<std::string> warnings = rep.field.warnings;
  warnings.insert(warnings.end(), nf.warnings.begin(), nf.warnings.end());
  ctx.write_json("solve_v.json", {{"iterations", rep.iterations},
                                  {"residual", rep.residual},
                                  {"residual_history", rep.residual_history},
                                  {"v_origin", v.values[o]},
                                  {"n_origin", n.values[o]},
                                  {"v_integral", v.integral()},
                                  {"n_integral", n.integral()},
                                  {"warnings", warnings}});
}

std::string quoted(std::string s)
{
  std::replace(s.begin(), s.end(), '"', '\'');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return '"' + s + '"';
}

int resolve_workers(RunOptions const &opts, ExperimentConfig const &cfg)
{
  if (opts.workers) {
    check(*opts.workers >= 0, "--workers must be >= 0");
    return worker_count(*opts.workers);
  }
  if (char const *env = std::getenv("WORKER_COUNT"); env && *env) {
    char *end = nullptr;
    long  n = std::strtol(env, &end, 10);
    check(*end == '\0' && n >= 0, "WORKER_COUNT must be a non-negative integer");
    return worker_count(static_cast<int>(n));
  }
  return worker_count(cfg.workers);
}

} // namespace

int run(RunOptions const &opts, std::ostream &out, std::ostream &log)
{
  auto const start = std::chrono::steady_clock::now();
  auto fail = [&](int code, char const *kind, std::string const &msg) {
    log << "event=error exit=" << code << " kind=" << kind << " message=" << quoted(msg) << '\n';
    return code;
  };
  try {
    std::string text = "{}";
    if (!opts.config_path.empty()) {
      std::ifstream f(opts.config_path, std::ios::binary);
      if (!f) throw ConfigError("cannot read config file " + opts.config_path);
      std::ostringstream ss;
      ss << f.rdbuf();
      text = ss.str();
    } else if (opts.command.empty() || needs_params(opts.command)) {
      throw ConfigError("missing --config");
    }
    ExperimentConfig const cfg = parse_config(text, opts);

    fs::path dir = cfg.output_dir;
    if (char const *env = std::getenv("OUTPUT_DIR"); env && *env) dir = env;
    if (opts.out_dir) dir = *opts.out_dir;
    int const workers = resolve_workers(opts, cfg);

    log << "event=start command=" << cfg.command << " config_hash=" << cfg.hash << " seed=" << cfg.seed
        << " workers=" << workers << " out=" << dir.string() << " version=" OCC_VERSION "\n";
    Context ctx{cfg, dir, workers, out, log};
    int     status = exit_ok;
    if (cfg.command == "simulate") cmd_simulate(ctx);
    else if (cfg.command == "limit-sample") cmd_limit_sample(ctx);
    else if (cfg.command == "estimate-h") cmd_estimate_h(ctx);
    else if (cfg.command == "exact-variance") cmd_exact_variance(ctx);
    else if (cfg.command == "verify-constants") cmd_verify_constants(ctx, status);
    else cmd_solve_v(ctx);

    double const secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    log << "event=done command=" << cfg.command << " exit=" << status << " runtime_s=" << io::format(secs) << '\n';
    return status;
  } catch (ConfigError const &e) {
    return fail(exit_config, "config", e.what());
  } catch (DomainError const &e) {
    return fail(exit_config, "domain", e.what());
  } catch (NumericError const &e) {
    return fail(exit_numeric, "numeric", e.what());
  } catch (StatisticalError const &e) {
    return fail(exit_numeric, "statistical", e.what());
  } catch (ResourceError const &e) {
    return fail(exit_resource, "resource", e.what());
  } catch (fs::filesystem_error const &e) {
    return fail(exit_resource, "io", e.what());
  } catch (std::exception const &e) {
    return fail(exit_internal, "internal", e.what());
  }
}

int run_cli(int argc, char const *const *argv, std::ostream &out, std::ostream &log)
{
  CLI::App    app{"Occupation-time fluctuations of branching stable particle systems", "occfluct"};
  RunOptions  opts;
  std::string command;
  std::uint64_t seed = 0;
  int           workers = 0;
  std::string   out_dir;
  app.add_option("command", command,
                 "simulate | limit-sample | estimate-h | exact-variance | verify-constants | solve-v")
      ->required();
  app.add_option("--config", opts.config_path, "experiment config (JSON)");
  auto *seed_opt = app.add_option("--seed", seed, "master seed");
  auto *workers_opt = app.add_option("--workers", workers, "worker threads (0 = all cores)");
  auto *out_opt = app.add_option("--out", out_dir, "output directory");
  try {
    app.parse(argc, argv);
  } catch (CLI::CallForHelp const &) {
    out << app.help();
    return exit_ok;
  } catch (CLI::ParseError const &e) {
    log << "event=error exit=2 kind=usage message=" << quoted(e.what()) << '\n';
    return exit_config;
  }
  if (!commands.count(command)) {
    log << "event=error exit=2 kind=usage message=" << quoted("unknown subcommand '" + command + "'") << '\n';
    return exit_config;
  }
  opts.command = command;
  if (*seed_opt) opts.seed = seed;
  if (*workers_opt) opts.workers = workers;
  if (*out_opt) opts.out_dir = out_dir;
  return run(opts, out, log);
}

} // namespace occ
