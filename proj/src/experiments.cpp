#include "paraopt/experiments.hpp"

#include "paraopt/analysis.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace paraopt::experiments {

using nlohmann::json;
namespace fs = std::filesystem;
using cli::CsvWriter;
using cli::RunConfig;
using analysis::PhiPsi;

namespace {

struct Named {
  ExperimentId id;
  const char* name;
};

constexpr Named kNames[] = {
    {ExperimentId::ScalarTimestepSweep, "scalar_timestep_sweep"},
    {ExperimentId::ScalarConvergenceAB, "scalar_convergence_ab"},
    {ExperimentId::ScalarWeakScaling, "scalar_weak_scaling"},
    {ExperimentId::TcFotdVsFdto, "tc_fotd_vs_fdto"},
    {ExperimentId::GmresToleranceStudy, "gmres_tolerance_study"},
    {ExperimentId::HeatIterationCounts, "heat_iteration_counts"},
    {ExperimentId::HeatTotalIterations, "heat_total_iterations"},
    {ExperimentId::AdvectionIterationCounts, "advection_iteration_counts"},
    {ExperimentId::BoundContours, "bound_contours"},
};

std::string lower_alnum(std::string_view s) {
  std::string out;
  for (char c : s)
    if (std::isalnum(static_cast<unsigned char>(c))) out += char(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Collects panel descriptions for manifest.json.
class Manifest {
 public:
  Manifest(ExperimentId id, const RunConfig& base) {
    m_["experiment"] = std::string(to_string(id));
    m_["csv_version"] = "paraopt-kit v1";
    m_["base_config"] = cli::config_to_json(base);
    m_["panels"] = json::array();
  }
  void panel(const std::string& file, const std::string& description, json axes) {
    m_["panels"].push_back({{"file", file}, {"description", description}, {"axes", std::move(axes)}});
  }
  void note(const std::string& key, json value) { m_[key] = std::move(value); }
  const json& get() const { return m_; }

 private:
  json m_;
};

double seconds_or_zero(const RunConfig& base, double s) { return base.output.record_timing ? s : 0.0; }

// Scalar tracking problem sigma = 16, gamma = 1 used by the time-step and scaling sweeps.
constexpr double kScalarSigma = 16.0;
constexpr double kScalarGamma = 1.0;

void scalar_timestep_sweep(const fs::path& dir, Manifest& man, std::ostream& log) {
  const ObjectiveKind obj = ObjectiveKind::Tracking;
  const int L_hat = 100;
  const double T = 1.0;
  const double DT = T / (L_hat + 1);
  using analysis::PropagatorKind;
  const auto coef = [&](const PropagatorKind& k) {
    return analysis::coefficients_physical(obj, k, kScalarSigma, kScalarGamma, DT);
  };

  {
    CsvWriter w(dir / "vary_fine.csv", {"fine_steps", "fine_dt_over_DT", "rho_exact", "rho_star"});
    const PhiPsi coarse = coef(PropagatorKind::implicit_euler(1, IeVariant::FOTD));
    for (int J : {1, 2, 3, 5, 10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10000, 100000}) {
      const PhiPsi fine = coef(PropagatorKind::implicit_euler(J, IeVariant::FOTD));
      w << J << 1.0 / J << analysis::exact_rho(obj, L_hat, fine, coarse) << analysis::rho_bound_tracking(fine, coarse);
      w.end_row();
    }
    const PhiPsi fine = coef(PropagatorKind::exact());
    w << 0 << 0.0 << analysis::exact_rho(obj, L_hat, fine, coarse) << analysis::rho_bound_tracking(fine, coarse);
    w.end_row();
    man.panel("vary_fine.csv", "coarse: one implicit-Euler step; fine step varied (fine_steps = 0 is the exact solver)",
              {{"x", "fine_dt_over_DT"}, {"y", {"rho_exact", "rho_star"}}});
  }
  {
    CsvWriter w(dir / "vary_coarse.csv", {"coarse_steps", "coarse_dt_over_DT", "rho_exact", "rho_star"});
    const PhiPsi fine = coef(PropagatorKind::implicit_euler(100000, IeVariant::FOTD));
    for (int J : {1, 2, 3, 5, 10, 20, 50, 100, 200, 500, 1000}) {
      const PhiPsi coarse = coef(PropagatorKind::implicit_euler(J, IeVariant::FOTD));
      w << J << 1.0 / J << analysis::exact_rho(obj, L_hat, fine, coarse) << analysis::rho_bound_tracking(fine, coarse);
      w.end_row();
    }
    man.panel("vary_coarse.csv", "fine step 1e-5 DT; coarse step varied",
              {{"x", "coarse_dt_over_DT"}, {"y", {"rho_exact", "rho_star"}}});
  }
  man.note("parameters", {{"sigma", kScalarSigma}, {"gamma", kScalarGamma}, {"T", T}, {"L_hat", L_hat}});
  log << "scalar_timestep_sweep: done\n";
}

// Residual history of one solve, appended under a case label.
void write_history(CsvWriter& w, const std::string& label, const SolveLog& sl, const RunConfig& base) {
  for (const auto& r : sl.records) {
    w << label << r.iteration << r.residual << r.inner_iterations << seconds_or_zero(base, r.seconds);
    w.end_row();
  }
}

bool scalar_convergence_ab(const RunConfig& base, const fs::path& dir, Manifest& man, std::ostream& log) {
  bool ok = true;
  CsvWriter hist(dir / "residuals.csv", {"case", "iteration", "residual", "inner_iters", "seconds"});
  CsvWriter rates(dir / "rates.csv", {"case", "sigma_hat", "gamma_hat", "rho_star", "fitted_rate", "converged"});
  for (char c : {'A', 'B'}) {
    const RunConfig cfg = scalar_ab_config(base, c);
    const SolveLog sl = run_solve(cfg);
    ok = ok && sl.converged();
    const std::string label(1, c);
    write_history(hist, label, sl, base);
    const double sh = c == 'A' ? 1e-6 : 6e-4;
    const double gh = c == 'A' ? 6.0 : 0.4;
    rates << label << sh << gh << scalar_ab_bound(c) << fitted_rate(sl) << int(sl.converged());
    rates.end_row();
    log << "scalar_convergence_ab: case " << c << " rate " << fitted_rate(sl) << " bound " << scalar_ab_bound(c)
        << '\n';
  }
  man.panel("residuals.csv", "residual histories of cases A and B", {{"x", "iteration"}, {"y", "residual"}});
  man.panel("rates.csv", "fitted geometric rates against the bound", {{"x", "case"}, {"y", {"fitted_rate", "rho_star"}}});
  return ok;
}

const std::vector<int> kScalingLhat = {1, 2, 5, 10, 20, 50, 100, 200};

void scaling_rows(CsvWriter& w, ObjectiveKind obj, double sigma, double gamma, const std::string& regime,
                  const analysis::PropagatorKind& coarse_kind, const std::string& coarse_label) {
  using analysis::PropagatorKind;
  for (int L_hat : kScalingLhat) {
    const int L = obj == ObjectiveKind::Tracking ? L_hat + 1 : L_hat;
    const double DT = regime == "fixed_DT" ? 1.0 : 1.0 / L;
    const PhiPsi fine = analysis::coefficients_physical(obj, PropagatorKind::exact(), sigma, gamma, DT);
    const PhiPsi coarse = analysis::coefficients_physical(obj, coarse_kind, sigma, gamma, DT);
    w << regime << coarse_label << L_hat << DT << analysis::exact_rho(obj, L_hat, fine, coarse)
      << analysis::rho_bound(obj, fine, coarse);
    w.end_row();
  }
}

void scalar_weak_scaling(const fs::path& dir, Manifest& man, std::ostream& log) {
  const auto ie1 = analysis::PropagatorKind::implicit_euler(1, IeVariant::FOTD);
  for (const std::string regime : {"fixed_DT", "fixed_T"}) {
    const std::string file = regime + ".csv";
    CsvWriter w(dir / file, {"regime", "coarse", "L_hat", "DT", "rho_exact", "rho_star"});
    scaling_rows(w, ObjectiveKind::Tracking, kScalarSigma, kScalarGamma, regime, ie1, "ie_fotd");
    man.panel(file, "tracking, exact fine, one-step implicit-Euler coarse, " + regime,
              {{"x", "L_hat"}, {"y", {"rho_exact", "rho_star"}}});
  }
  man.note("parameters", {{"sigma", kScalarSigma}, {"gamma", kScalarGamma}});
  log << "scalar_weak_scaling: done\n";
}

void tc_fotd_vs_fdto(const fs::path& dir, Manifest& man, std::ostream& log) {
  using analysis::PropagatorKind;
  for (double gamma : {1.0, 1e-6}) {
    for (const std::string regime : {"fixed_DT", "fixed_T"}) {
      const std::string file = std::string(gamma == 1.0 ? "gamma_1_" : "gamma_1e-6_") + regime + ".csv";
      CsvWriter w(dir / file, {"regime", "coarse", "L_hat", "DT", "rho_exact", "rho_star"});
      scaling_rows(w, ObjectiveKind::TerminalCost, kScalarSigma, gamma, regime,
                   PropagatorKind::implicit_euler(1, IeVariant::FOTD), "ie_fotd");
      scaling_rows(w, ObjectiveKind::TerminalCost, kScalarSigma, gamma, regime,
                   PropagatorKind::implicit_euler(1, IeVariant::FDTO), "ie_fdto");
      man.panel(file, "terminal cost, gamma = " + cli::format_double(gamma) + ", " + regime,
                {{"x", "L_hat"}, {"y", {"rho_exact", "rho_star"}}, {"series", "coarse"}});
    }
  }
  man.note("parameters", {{"sigma", kScalarSigma}});
  log << "tc_fotd_vs_fdto: done\n";
}

bool gmres_tolerance_study(const RunConfig& base, const fs::path& dir, Manifest& man, std::ostream& log) {
  bool ok = true;
  for (bool pre : {false, true}) {
    const std::string file = pre ? "preconditioned.csv" : "unpreconditioned.csv";
    CsvWriter w(dir / file, {"inner_tol", "iteration", "residual", "inner_iters", "seconds"});
    for (double tol : {1e-1, 1e-2, 1e-3, 1e-4, 1e-6, 1e-8}) {
      RunConfig cfg = grid_config(base, "heat", "tracking", 10, pre);
      cfg.solver.inner_tol = tol;
      const SolveLog sl = run_solve(cfg);
      ok = ok && sl.converged();
      for (const auto& r : sl.records) {
        w << tol << r.iteration << r.residual << r.inner_iterations << seconds_or_zero(base, r.seconds);
        w.end_row();
      }
      log << "gmres_tolerance_study: " << (pre ? "preconditioned" : "plain") << " tol " << tol << ": "
          << sl.outer_iterations() << " outer\n";
    }
    man.panel(file, std::string("heat tracking, L_hat = 10, ") + (pre ? "preconditioned" : "unpreconditioned"),
              {{"x", "iteration"}, {"y", "residual"}, {"series", "inner_tol"}});
  }
  return ok;
}

const std::vector<std::string> kObjectives = {"tracking", "terminal_cost"};

bool iteration_counts(const RunConfig& base, const std::string& kind, const fs::path& dir, Manifest& man,
                      std::ostream& log) {
  bool ok = true;
  for (const std::string& obj : kObjectives) {
    const std::string file = kind + "_counts_" + obj + ".csv";
    CsvWriter w(dir / file, {"L_hat", "preconditioned", "iteration", "inner_iters", "residual"});
    for (int L_hat : {10, 100}) {
      for (bool pre : {false, true}) {
        const SolveLog sl = run_solve(grid_config(base, kind, obj, L_hat, pre));
        ok = ok && sl.converged();
        for (std::size_t k = 1; k < sl.records.size(); ++k) {
          w << L_hat << int(pre) << sl.records[k].iteration << sl.records[k].inner_iterations << sl.records[k].residual;
          w.end_row();
        }
        log << kind << ' ' << obj << " L_hat=" << L_hat << (pre ? " preconditioned" : " plain")
            << ": mean inner " << mean_inner_per_outer(sl) << '\n';
      }
    }
    man.panel(file, kind + ", " + obj + ": GMRES iterations per outer iteration",
              {{"x", "iteration"}, {"y", "inner_iters"}, {"series", {"L_hat", "preconditioned"}}});
  }
  return ok;
}

bool total_iterations(const RunConfig& base, const fs::path& dir, Manifest& man, std::ostream& log) {
  bool ok = true;
  for (const std::string& obj : kObjectives) {
    const std::string file = "heat_totals_" + obj + ".csv";
    CsvWriter w(dir / file, {"L_hat", "preconditioned", "outer_iterations", "total_inner", "mean_inner", "converged"});
    for (int L_hat : {5, 10, 20, 50, 100}) {
      for (bool pre : {false, true}) {
        const SolveLog sl = run_solve(grid_config(base, "heat", obj, L_hat, pre));
        ok = ok && sl.converged();
        w << L_hat << int(pre) << sl.outer_iterations() << sl.total_inner_iterations() << mean_inner_per_outer(sl)
          << int(sl.converged());
        w.end_row();
        log << "heat totals " << obj << " L_hat=" << L_hat << (pre ? " preconditioned" : " plain") << ": "
            << sl.total_inner_iterations() << '\n';
      }
    }
    man.panel(file, "heat, " + obj + ": total GMRES iterations", {{"x", "L_hat"}, {"y", "total_inner"}});
  }
  return ok;
}

void bound_contours(const RunConfig& base, const fs::path& dir, Manifest& man, std::ostream& log) {
  using analysis::PropagatorKind;
  const auto sig = analysis::logspace(base.bound.sigma_hat.min, base.bound.sigma_hat.max, base.bound.sigma_hat.points);
  const auto gam = analysis::logspace(base.bound.gamma_hat.min, base.bound.gamma_hat.max, base.bound.gamma_hat.points);
  struct Panel {
    const char* file;
    ObjectiveKind obj;
    int J;
    IeVariant v;
  };
  const Panel panels[] = {
      {"tracking_J1.csv", ObjectiveKind::Tracking, 1, IeVariant::FOTD},
      {"tracking_J10.csv", ObjectiveKind::Tracking, 10, IeVariant::FOTD},
      {"terminal_fotd_J1.csv", ObjectiveKind::TerminalCost, 1, IeVariant::FOTD},
      {"terminal_fotd_J10.csv", ObjectiveKind::TerminalCost, 10, IeVariant::FOTD},
      {"terminal_fdto_J1.csv", ObjectiveKind::TerminalCost, 1, IeVariant::FDTO},
      {"terminal_fdto_J10.csv", ObjectiveKind::TerminalCost, 10, IeVariant::FDTO},
  };
  for (const Panel& p : panels) {
    const auto coarse = PropagatorKind::implicit_euler(p.J, p.v);
    const auto grid = analysis::bound_grid_sweep(p.obj, PropagatorKind::exact(), coarse, sig, gam);
    cli::write_rho_csv(dir / p.file, grid);
    man.panel(p.file, std::string(to_string(p.obj)) + ", exact fine, coarse " + coarse.describe(),
              {{"x", "sigma_hat"}, {"y", "gamma_hat"}, {"z", "rho_star"}});
  }
  log << "bound_contours: " << std::size(panels) << " panels\n";
}

}  // namespace

std::string_view to_string(ExperimentId id) {
  for (const auto& n : kNames)
    if (n.id == id) return n.name;
  return "unknown";
}

ExperimentId experiment_from_string(std::string_view name) {
  const std::string key = lower_alnum(name);
  for (const auto& n : kNames) {
    if (lower_alnum(n.name) == key) return n.id;
  }
  throw std::invalid_argument("unknown experiment id '" + std::string(name) + "'");
}

std::vector<ExperimentId> all_experiments() {
  std::vector<ExperimentId> out;
  for (const auto& n : kNames) out.push_back(n.id);
  return out;
}

SolveLog run_solve(const RunConfig& cfg) {
  const cli::PreparedRun run = cli::prepare_run(cfg);
  return paraopt_solve(run.problem, run.decomp, *run.fine, *run.coarse, run.newton).log;
}

double mean_inner_per_outer(const SolveLog& log) {
  const int outer = log.outer_iterations();
  return outer == 0 ? 0.0 : double(log.total_inner_iterations()) / outer;
}

double fitted_rate(const SolveLog& log, double floor) {
  if (log.records.empty()) throw std::invalid_argument("fitted_rate: empty log");
  const double r0 = log.records.front().residual;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (const auto& r : log.records) {
    if (!(r.residual > floor * r0)) break;
    const double x = r.iteration, y = std::log(r.residual);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) throw std::invalid_argument("fitted_rate: fewer than two usable residuals");
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return std::exp(slope);
}

RunConfig grid_config(const RunConfig& base, const std::string& kind, const std::string& objective, int L_hat,
                      bool preconditioned) {
  RunConfig c;
  c.problem.kind = kind;
  c.problem.n = 8;
  c.problem.gamma = 0.05;
  c.problem.T = 2.0;
  c.objective = objective;
  c.decomposition.L = objective == "tracking" ? L_hat + 1 : L_hat;
  c.decomposition.J_fine = 10;
  c.decomposition.J_coarse = 1;
  c.propagators = {"ie", "fotd", "ie_fotd"};
  c.solver = base.solver;
  c.preconditioner.enabled = preconditioned;
  c.preconditioner.method = "auto";
  c.preconditioner.small_system = base.preconditioner.small_system;
  c.output = base.output;
  c.seed = base.seed;
  return c;
}

RunConfig scalar_ab_config(const RunConfig& base, char which) {
  if (which != 'A' && which != 'B') throw std::invalid_argument("scalar_ab_config: case must be 'A' or 'B'");
  // DT = 1, so sigma = sigma_hat and gamma = 1 / gamma_hat^2.
  const double sigma_hat = which == 'A' ? 1e-6 : 6e-4;
  const double gamma_hat = which == 'A' ? 6.0 : 0.4;
  RunConfig c;
  c.problem.kind = "scalar";
  c.problem.sigma = sigma_hat;
  c.problem.gamma = 1.0 / (gamma_hat * gamma_hat);
  c.problem.T = 50.0;
  c.problem.y_init = 1.0;
  c.problem.data = 1.0;
  c.objective = "tracking";
  c.decomposition = {50, 10, 10};
  c.propagators = {"exact", "fotd", "ie_fotd"};
  c.solver.outer_tol = 1e-12;
  c.solver.inner_tol = 1e-12;
  c.solver.max_outer = 400;
  c.solver.max_inner = 1000;
  c.preconditioner.enabled = false;
  c.output = base.output;
  c.seed = base.seed;
  return c;
}

double scalar_ab_bound(char which) {
  const RunConfig c = scalar_ab_config(RunConfig{}, which);
  const double DT = c.problem.T / c.decomposition.L;
  using analysis::PropagatorKind;
  const auto fine = analysis::coefficients_physical(ObjectiveKind::Tracking, PropagatorKind::exact(), c.problem.sigma,
                                                    c.problem.gamma, DT);
  const auto coarse = analysis::coefficients_physical(
      ObjectiveKind::Tracking, PropagatorKind::implicit_euler(c.decomposition.J_coarse, IeVariant::FOTD),
      c.problem.sigma, c.problem.gamma, DT);
  return analysis::rho_bound_tracking(fine, coarse);
}

ExperimentOutcome run_experiment(ExperimentId id, const RunConfig& base, const fs::path& dir, std::ostream& log) {
  fs::create_directories(dir);
  Manifest man(id, base);
  ExperimentOutcome out;
  switch (id) {
    case ExperimentId::ScalarTimestepSweep: scalar_timestep_sweep(dir, man, log); break;
    case ExperimentId::ScalarConvergenceAB: out.all_converged = scalar_convergence_ab(base, dir, man, log); break;
    case ExperimentId::ScalarWeakScaling: scalar_weak_scaling(dir, man, log); break;
    case ExperimentId::TcFotdVsFdto: tc_fotd_vs_fdto(dir, man, log); break;
    case ExperimentId::GmresToleranceStudy: out.all_converged = gmres_tolerance_study(base, dir, man, log); break;
    case ExperimentId::HeatIterationCounts: out.all_converged = iteration_counts(base, "heat", dir, man, log); break;
    case ExperimentId::HeatTotalIterations: out.all_converged = total_iterations(base, dir, man, log); break;
    case ExperimentId::AdvectionIterationCounts:
      out.all_converged = iteration_counts(base, "advection_diffusion", dir, man, log);
      break;
    case ExperimentId::BoundContours: bound_contours(base, dir, man, log); break;
  }
  man.note("all_converged", out.all_converged);
  out.manifest = man.get();
  cli::write_json(dir / "manifest.json", out.manifest);
  return out;
}

}  // namespace paraopt::experiments
