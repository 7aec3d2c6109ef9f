#include "paraopt/cli.hpp"

#include "paraopt/experiments.hpp"

#include "CLI11.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <set>

namespace paraopt::cli {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError(where + ": unknown key '" + it.key() + "'");
}

template <typename T>
void read(const json& obj, const char* key, T& dst, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    dst = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

void read_axis(const json& obj, const char* key, GridAxis& axis, const std::string& where) {
  if (!obj.contains(key)) return;
  const json& a = obj.at(key);
  const std::string w = where + "." + key;
  check_keys(a, {"min", "max", "points"}, w);
  read(a, "min", axis.min, w);
  read(a, "max", axis.max, w);
  read(a, "points", axis.points, w);
}

json axis_json(const GridAxis& a) { return {{"min", a.min}, {"max", a.max}, {"points", a.points}}; }

bool in(const std::string& v, std::initializer_list<const char*> options) {
  for (const char* o : options)
    if (v == o) return true;
  return false;
}

IeVariant coarse_variant(const std::string& coarse) {
  return coarse == "ie_fdto" ? IeVariant::FDTO : IeVariant::FOTD;
}

}  // namespace

void RunConfig::validate() const {
  if (!in(problem.kind, {"scalar", "heat", "advection_diffusion"}))
    throw ConfigError("problem.kind must be scalar, heat or advection_diffusion");
  if (!(problem.gamma > 0.0)) throw ConfigError("problem.gamma must be positive");
  if (!(problem.T > 0.0)) throw ConfigError("problem.T must be positive");
  if (problem.kind != "scalar" && problem.n < 2) throw ConfigError("problem.n must be >= 2");
  if (!in(objective, {"tracking", "terminal_cost"})) throw ConfigError("objective must be tracking or terminal_cost");
  const bool tracking = objective == "tracking";

  if (decomposition.L < 2) throw ConfigError("decomposition.L must be >= 2");
  if (decomposition.J_coarse < 1 || decomposition.J_fine < decomposition.J_coarse)
    throw ConfigError("decomposition: need J_fine >= J_coarse >= 1");

  if (!in(propagators.fine, {"ie", "exact"})) throw ConfigError("propagators.fine must be ie or exact");
  if (!in(propagators.fine_variant, {"fotd", "fdto"})) throw ConfigError("propagators.fine_variant must be fotd or fdto");
  if (!in(propagators.coarse, {"ie_fotd", "ie_fdto"})) throw ConfigError("propagators.coarse must be ie_fotd or ie_fdto");
  if (tracking && (propagators.coarse == "ie_fdto" || (propagators.fine == "ie" && propagators.fine_variant == "fdto")))
    throw ConfigError("tracking propagators support FOTD only");

  auto unit = [](double v, const char* name) {
    if (!(v > 0.0 && v < 1.0)) throw ConfigError(std::string(name) + " must lie in (0, 1)");
  };
  unit(solver.outer_tol, "solver.outer_tol");
  unit(solver.inner_tol, "solver.inner_tol");
  if (solver.max_outer < 1 || solver.max_inner < 1) throw ConfigError("solver iteration limits must be >= 1");

  if (!in(preconditioner.method, {"auto", "general", "triangular"}))
    throw ConfigError("preconditioner.method must be auto, general or triangular");
  if (!in(preconditioner.small_system, {"explicit", "blackbox"}))
    throw ConfigError("preconditioner.small_system must be explicit or blackbox");
  const PreconditionerMethod method = resolve_method(*this);
  if (method == PreconditionerMethod::Triangular && tracking)
    throw ConfigError("the triangular preconditioner needs a terminal-cost coarse propagator");
  if (preconditioner.alpha) {
    const double a = *preconditioner.alpha;
    if (!(std::isfinite(a) && a != 0.0)) throw ConfigError("preconditioner.alpha must be finite and non-zero");
    if (method == PreconditionerMethod::General && std::abs(std::abs(a) - 1.0) > 1e-12)
      throw ConfigError("the general preconditioner needs |alpha| = 1");
  }

  for (const GridAxis* a : {&bound.sigma_hat, &bound.gamma_hat}) {
    if (!(a->min > 0.0 && a->max >= a->min) || a->points < 1)
      throw ConfigError("bound grids need 0 < min <= max and points >= 1");
  }
  if (!in(bound.fine, {"exact", "ie"})) throw ConfigError("bound.fine must be exact or ie");
  if (!in(bound.coarse, {"ie_fotd", "ie_fdto"})) throw ConfigError("bound.coarse must be ie_fotd or ie_fdto");
  if (bound.J_fine < 1 || bound.J_coarse < 1) throw ConfigError("bound step counts must be >= 1");
  if (tracking && bound.coarse == "ie_fdto") throw ConfigError("tracking propagators support FOTD only");
  if (output.directory.empty()) throw ConfigError("output.directory must not be empty");
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  check_keys(j, {"problem", "objective", "decomposition", "propagators", "solver", "preconditioner", "bound", "output",
                 "seed"},
             "config");
  if (j.contains("problem")) {
    const json& p = j.at("problem");
    check_keys(p, {"kind", "sigma", "n", "gamma", "T", "y_init", "data"}, "problem");
    read(p, "kind", c.problem.kind, "problem");
    read(p, "sigma", c.problem.sigma, "problem");
    read(p, "n", c.problem.n, "problem");
    read(p, "gamma", c.problem.gamma, "problem");
    read(p, "T", c.problem.T, "problem");
    read(p, "y_init", c.problem.y_init, "problem");
    read(p, "data", c.problem.data, "problem");
  }
  read(j, "objective", c.objective, "config");
  if (j.contains("decomposition")) {
    const json& d = j.at("decomposition");
    check_keys(d, {"L", "J_fine", "J_coarse"}, "decomposition");
    read(d, "L", c.decomposition.L, "decomposition");
    read(d, "J_fine", c.decomposition.J_fine, "decomposition");
    read(d, "J_coarse", c.decomposition.J_coarse, "decomposition");
  }
  if (j.contains("propagators")) {
    const json& p = j.at("propagators");
    check_keys(p, {"fine", "fine_variant", "coarse"}, "propagators");
    read(p, "fine", c.propagators.fine, "propagators");
    read(p, "fine_variant", c.propagators.fine_variant, "propagators");
    read(p, "coarse", c.propagators.coarse, "propagators");
  }
  if (j.contains("solver")) {
    const json& s = j.at("solver");
    check_keys(s, {"outer_tol", "inner_tol", "max_outer", "max_inner"}, "solver");
    read(s, "outer_tol", c.solver.outer_tol, "solver");
    read(s, "inner_tol", c.solver.inner_tol, "solver");
    read(s, "max_outer", c.solver.max_outer, "solver");
    read(s, "max_inner", c.solver.max_inner, "solver");
  }
  if (j.contains("preconditioner")) {
    const json& p = j.at("preconditioner");
    check_keys(p, {"enabled", "method", "alpha", "small_system"}, "preconditioner");
    read(p, "enabled", c.preconditioner.enabled, "preconditioner");
    read(p, "method", c.preconditioner.method, "preconditioner");
    if (p.contains("alpha") && !p.at("alpha").is_null()) {
      double a = 0.0;
      read(p, "alpha", a, "preconditioner");
      c.preconditioner.alpha = a;
    }
    read(p, "small_system", c.preconditioner.small_system, "preconditioner");
  }
  if (j.contains("bound")) {
    const json& b = j.at("bound");
    check_keys(b, {"sigma_hat", "gamma_hat", "fine", "J_fine", "coarse", "J_coarse"}, "bound");
    read_axis(b, "sigma_hat", c.bound.sigma_hat, "bound");
    read_axis(b, "gamma_hat", c.bound.gamma_hat, "bound");
    read(b, "fine", c.bound.fine, "bound");
    read(b, "J_fine", c.bound.J_fine, "bound");
    read(b, "coarse", c.bound.coarse, "bound");
    read(b, "J_coarse", c.bound.J_coarse, "bound");
  }
  if (j.contains("output")) {
    const json& o = j.at("output");
    check_keys(o, {"directory", "record_timing"}, "output");
    read(o, "directory", c.output.directory, "output");
    read(o, "record_timing", c.output.record_timing, "output");
  }
  read(j, "seed", c.seed, "config");
  return c;
}

json config_to_json(const RunConfig& c) {
  json j;
  j["problem"] = {{"kind", c.problem.kind}, {"sigma", c.problem.sigma}, {"n", c.problem.n},
                  {"gamma", c.problem.gamma}, {"T", c.problem.T}, {"y_init", c.problem.y_init},
                  {"data", c.problem.data}};
  j["objective"] = c.objective;
  j["decomposition"] = {{"L", c.decomposition.L}, {"J_fine", c.decomposition.J_fine},
                        {"J_coarse", c.decomposition.J_coarse}};
  j["propagators"] = {{"fine", c.propagators.fine}, {"fine_variant", c.propagators.fine_variant},
                      {"coarse", c.propagators.coarse}};
  j["solver"] = {{"outer_tol", c.solver.outer_tol}, {"inner_tol", c.solver.inner_tol},
                 {"max_outer", c.solver.max_outer}, {"max_inner", c.solver.max_inner}};
  j["preconditioner"] = {{"enabled", c.preconditioner.enabled}, {"method", c.preconditioner.method},
                         {"alpha", c.preconditioner.alpha ? json(*c.preconditioner.alpha) : json(nullptr)},
                         {"small_system", c.preconditioner.small_system}};
  j["bound"] = {{"sigma_hat", axis_json(c.bound.sigma_hat)}, {"gamma_hat", axis_json(c.bound.gamma_hat)},
                {"fine", c.bound.fine}, {"J_fine", c.bound.J_fine}, {"coarse", c.bound.coarse},
                {"J_coarse", c.bound.J_coarse}};
  j["output"] = {{"directory", c.output.directory}, {"record_timing", c.output.record_timing}};
  j["seed"] = c.seed;
  return j;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

PreconditionerMethod resolve_method(const RunConfig& cfg) {
  if (cfg.preconditioner.method == "general") return PreconditionerMethod::General;
  if (cfg.preconditioner.method == "triangular") return PreconditionerMethod::Triangular;
  return cfg.objective == "tracking" ? PreconditionerMethod::General : PreconditionerMethod::Triangular;
}

PreparedRun prepare_run(const RunConfig& cfg) {
  cfg.validate();
  const ObjectiveKind obj = objective_from_string(cfg.objective);
  const ProblemConfig& pc = cfg.problem;
  PreparedRun run;
  try {
    if (pc.kind == "scalar") {
      run.problem = make_scalar_problem(pc.sigma, pc.gamma, pc.T, obj, pc.y_init, pc.data);
    } else if (pc.kind == "heat") {
      run.problem = make_heat_problem(pc.n, pc.gamma, pc.T, obj);
    } else {
      run.problem = make_advection_diffusion_problem(pc.n, pc.gamma, pc.T, obj);
    }
    const DecompositionConfig& d = cfg.decomposition;
    run.decomp = TimeDecomposition::make(obj, pc.T, d.L, d.J_fine, d.J_coarse);
    if (cfg.propagators.fine == "exact") {
      run.fine = std::make_shared<AffinePropagator>(build_exact_propagator(run.problem, run.decomp));
    } else {
      const IeVariant v = obj == ObjectiveKind::Tracking ? IeVariant::FOTD : ie_variant_from_string(cfg.propagators.fine_variant);
      run.fine = std::make_shared<AffinePropagator>(build_implicit_euler_propagator(run.problem, run.decomp, d.J_fine, v));
    }
    run.coarse = std::make_shared<AffinePropagator>(
        build_implicit_euler_propagator(run.problem, run.decomp, d.J_coarse, coarse_variant(cfg.propagators.coarse)));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  run.newton.outer_tolerance = cfg.solver.outer_tol;
  run.newton.max_outer = cfg.solver.max_outer;
  run.newton.inner.rel_tolerance = cfg.solver.inner_tol;
  run.newton.inner.max_iterations = cfg.solver.max_inner;
  if (cfg.preconditioner.enabled) {
    const PreconditionerMethod m = resolve_method(cfg);
    const Complex alpha = cfg.preconditioner.alpha ? Complex(*cfg.preconditioner.alpha, 0.0) : default_alpha(m);
    try {
      run.newton.preconditioner = std::make_shared<PreconditionerPlan>(
          build_plan(run.coarse, run.decomp.L_hat, alpha, m, small_system_method_from_string(cfg.preconditioner.small_system)));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  return run;
}

analysis::PropagatorKind bound_fine_kind(const BoundConfig& b) {
  if (b.fine == "exact") return analysis::PropagatorKind::exact();
  return analysis::PropagatorKind::implicit_euler(b.J_fine, IeVariant::FOTD);
}

analysis::PropagatorKind bound_coarse_kind(const BoundConfig& b) {
  return analysis::PropagatorKind::implicit_euler(b.J_coarse, coarse_variant(b.coarse));
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& columns)
    : ncols_(columns.size()), out_(std::make_unique<std::ofstream>(path, std::ios::binary)) {
  if (!*out_) throw std::runtime_error("cannot write " + path.string());
  *out_ << "# paraopt-kit v1\n";
  for (std::size_t i = 0; i < columns.size(); ++i) *out_ << (i ? "," : "") << columns[i];
  *out_ << '\n';
}

CsvWriter& CsvWriter::operator<<(double v) {
  row_.push_back(format_double(v));
  return *this;
}

CsvWriter& CsvWriter::operator<<(int v) {
  row_.push_back(std::to_string(v));
  return *this;
}

CsvWriter& CsvWriter::operator<<(const std::string& v) {
  row_.push_back(v);
  return *this;
}

void CsvWriter::end_row() {
  if (row_.size() != ncols_) throw std::logic_error("CsvWriter: row has the wrong number of fields");
  for (std::size_t i = 0; i < row_.size(); ++i) *out_ << (i ? "," : "") << row_[i];
  *out_ << '\n';
  row_.clear();
  if (!*out_) throw std::runtime_error("CsvWriter: write failed");
}

void write_rho_csv(const std::filesystem::path& path, const analysis::BoundGrid& grid) {
  CsvWriter w(path, {"sigma_hat", "gamma_hat", "rho_star"});
  for (std::size_t i = 0; i < grid.sigma_hat.size(); ++i) {
    for (std::size_t j = 0; j < grid.gamma_hat.size(); ++j) {
      w << grid.sigma_hat[i] << grid.gamma_hat[j] << grid.at(i, j);
      w.end_row();
    }
  }
}

void write_solve_log_csv(const std::filesystem::path& path, const SolveLog& log, bool record_timing) {
  CsvWriter w(path, {"iteration", "residual", "inner_iters", "seconds"});
  for (const auto& r : log.records) {
    w << r.iteration << r.residual << r.inner_iterations << (record_timing ? r.seconds : 0.0);
    w.end_row();
  }
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

int cmd_bound(const RunConfig& cfg, std::ostream& err) {
  cfg.validate();
  const ObjectiveKind obj = objective_from_string(cfg.objective);
  const BoundConfig& b = cfg.bound;
  const auto grid = analysis::bound_grid_sweep(
      obj, bound_fine_kind(b), bound_coarse_kind(b),
      analysis::logspace(b.sigma_hat.min, b.sigma_hat.max, b.sigma_hat.points),
      analysis::logspace(b.gamma_hat.min, b.gamma_hat.max, b.gamma_hat.points));
  const std::filesystem::path dir(cfg.output.directory);
  std::filesystem::create_directories(dir);
  write_rho_csv(dir / "rho_star.csv", grid);
  double worst = 0.0;
  for (double r : grid.rho) worst = std::max(worst, r);
  err << "bound: " << grid.rho.size() << " points, max rho_star = " << format_double(worst) << ", wrote "
      << (dir / "rho_star.csv").string() << '\n';
  return kExitOk;
}

int cmd_solve(const RunConfig& cfg, std::ostream& err) {
  const PreparedRun run = prepare_run(cfg);
  const SolveResult res = paraopt_solve(run.problem, run.decomp, *run.fine, *run.coarse, run.newton);
  const std::filesystem::path dir(cfg.output.directory);
  std::filesystem::create_directories(dir);
  write_solve_log_csv(dir / "solve_log.csv", res.log, cfg.output.record_timing);

  json summary;
  summary["converged"] = res.log.converged();
  summary["status"] = std::string(to_string(res.log.status));
  summary["message"] = res.log.message;
  summary["outer_iterations"] = res.log.outer_iterations();
  summary["total_inner_iterations"] = res.log.total_inner_iterations();
  summary["initial_residual"] = res.log.records.front().residual;
  summary["final_residual"] = res.log.records.back().residual;
  summary["L_hat"] = run.decomp.L_hat;
  summary["M"] = run.problem.dim();
  summary["config"] = config_to_json(cfg);
  write_json(dir / "summary.json", summary);

  err << "solve: " << to_string(res.log.status) << " after " << res.log.outer_iterations() << " outer / "
      << res.log.total_inner_iterations() << " inner iterations, residual "
      << format_double(res.log.records.back().residual) << '\n';
  if (!res.log.message.empty()) err << "solve: " << res.log.message << '\n';
  return res.log.converged() ? kExitOk : kExitNotConverged;
}

int cmd_experiment(const std::string& id, const RunConfig& cfg, std::ostream& err) {
  experiments::ExperimentId eid;
  try {
    eid = experiments::experiment_from_string(id);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  cfg.validate();
  const std::filesystem::path dir(cfg.output.directory);
  std::filesystem::create_directories(dir);
  const auto outcome = experiments::run_experiment(eid, cfg, dir, err);
  return outcome.all_converged ? kExitOk : kExitNotConverged;
}

namespace {

struct Overrides {
  std::optional<std::string> problem, objective, fine, fine_variant, coarse, method, small_system, output;
  std::optional<double> sigma, gamma, T, y_init, data, outer_tol, inner_tol, alpha;
  std::optional<int> n, L, J_fine, J_coarse, max_outer, max_inner;
  std::optional<double> sh_min, sh_max, gh_min, gh_max;
  std::optional<int> sh_points, gh_points, bound_J_fine, bound_J_coarse;
  std::optional<std::string> bound_fine, bound_coarse;
  std::optional<std::uint64_t> seed;
  bool precondition = false, no_precondition = false, no_timing = false;

  void add_to(CLI::App& app) {
    app.add_option("--problem", problem, "scalar | heat | advection_diffusion");
    app.add_option("--objective", objective, "tracking | terminal_cost");
    app.add_option("--sigma", sigma, "scalar decay rate");
    app.add_option("--n", n, "grid points per direction");
    app.add_option("--gamma", gamma, "control cost");
    app.add_option("--T", T, "time horizon");
    app.add_option("--y-init", y_init, "scalar initial value");
    app.add_option("--data", data, "scalar y_d or y_target");
    app.add_option("--L", L, "number of sub-intervals");
    app.add_option("--J-fine", J_fine, "fine implicit-Euler steps per sub-interval");
    app.add_option("--J-coarse", J_coarse, "coarse implicit-Euler steps per sub-interval");
    app.add_option("--fine", fine, "ie | exact");
    app.add_option("--fine-variant", fine_variant, "fotd | fdto");
    app.add_option("--coarse", coarse, "ie_fotd | ie_fdto");
    app.add_option("--outer-tol", outer_tol, "relative outer tolerance");
    app.add_option("--inner-tol", inner_tol, "relative GMRES tolerance");
    app.add_option("--max-outer", max_outer, "outer iteration limit");
    app.add_option("--max-inner", max_inner, "GMRES iteration limit");
    app.add_flag("--precondition", precondition, "enable the alpha-circulant preconditioner");
    app.add_flag("--no-precondition", no_precondition, "disable the preconditioner");
    app.add_option("--method", method, "auto | general | triangular");
    app.add_option("--alpha", alpha, "preconditioner alpha (real)");
    app.add_option("--small-system", small_system, "explicit | blackbox");
    app.add_option("--sigma-hat-min", sh_min);
    app.add_option("--sigma-hat-max", sh_max);
    app.add_option("--sigma-hat-points", sh_points);
    app.add_option("--gamma-hat-min", gh_min);
    app.add_option("--gamma-hat-max", gh_max);
    app.add_option("--gamma-hat-points", gh_points);
    app.add_option("--bound-fine", bound_fine, "exact | ie");
    app.add_option("--bound-J-fine", bound_J_fine);
    app.add_option("--bound-coarse", bound_coarse, "ie_fotd | ie_fdto");
    app.add_option("--bound-J-coarse", bound_J_coarse);
    app.add_option("-o,--output", output, "output directory");
    app.add_flag("--no-timing", no_timing, "write 0 in the seconds column");
    app.add_option("--seed", seed);
  }

  void apply(RunConfig& c) const {
    if (problem) c.problem.kind = *problem;
    if (objective) c.objective = *objective;
    if (sigma) c.problem.sigma = *sigma;
    if (n) c.problem.n = *n;
    if (gamma) c.problem.gamma = *gamma;
    if (T) c.problem.T = *T;
    if (y_init) c.problem.y_init = *y_init;
    if (data) c.problem.data = *data;
    if (L) c.decomposition.L = *L;
    if (J_fine) c.decomposition.J_fine = *J_fine;
    if (J_coarse) c.decomposition.J_coarse = *J_coarse;
    if (fine) c.propagators.fine = *fine;
    if (fine_variant) c.propagators.fine_variant = *fine_variant;
    if (coarse) c.propagators.coarse = *coarse;
    if (outer_tol) c.solver.outer_tol = *outer_tol;
    if (inner_tol) c.solver.inner_tol = *inner_tol;
    if (max_outer) c.solver.max_outer = *max_outer;
    if (max_inner) c.solver.max_inner = *max_inner;
    if (precondition) c.preconditioner.enabled = true;
    if (no_precondition) c.preconditioner.enabled = false;
    if (method) c.preconditioner.method = *method;
    if (alpha) c.preconditioner.alpha = *alpha;
    if (small_system) c.preconditioner.small_system = *small_system;
    if (sh_min) c.bound.sigma_hat.min = *sh_min;
    if (sh_max) c.bound.sigma_hat.max = *sh_max;
    if (sh_points) c.bound.sigma_hat.points = *sh_points;
    if (gh_min) c.bound.gamma_hat.min = *gh_min;
    if (gh_max) c.bound.gamma_hat.max = *gh_max;
    if (gh_points) c.bound.gamma_hat.points = *gh_points;
    if (bound_fine) c.bound.fine = *bound_fine;
    if (bound_J_fine) c.bound.J_fine = *bound_J_fine;
    if (bound_coarse) c.bound.coarse = *bound_coarse;
    if (bound_J_coarse) c.bound.J_coarse = *bound_J_coarse;
    if (output) c.output.directory = *output;
    if (no_timing) c.output.record_timing = false;
    if (seed) c.seed = *seed;
  }
};

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"ParaOpt parallel-in-time optimal control toolkit"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("-c,--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);

  Overrides ov;
  auto* bound = app.add_subcommand("bound", "contraction-bound sweep over a sigma_hat x gamma_hat grid");
  auto* solve = app.add_subcommand("solve", "run ParaOpt on one configured problem");
  auto* experiment = app.add_subcommand("experiment", "run one named numerical experiment and write its CSV panels");
  std::string experiment_id;
  bool list = false;
  experiment->add_option("id", experiment_id, "experiment identifier");
  experiment->add_flag("--list", list, "list experiment identifiers");
  for (auto* sub : {bound, solve, experiment}) {
    sub->add_option("-c,--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
    ov.add_to(*sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
    ov.apply(cfg);
    if (bound->parsed()) return cmd_bound(cfg, std::cerr);
    if (solve->parsed()) return cmd_solve(cfg, std::cerr);
    if (list) {
      for (auto id : experiments::all_experiments()) std::cout << experiments::to_string(id) << '\n';
      return kExitOk;
    }
    if (experiment_id.empty()) throw ConfigError("experiment: missing id (use --list)");
    return cmd_experiment(experiment_id, cfg, std::cerr);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNotConverged;
  }
}

}  // namespace paraopt::cli
