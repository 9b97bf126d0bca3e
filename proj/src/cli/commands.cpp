#include "safeloop/cli/commands.hpp"

#include "safeloop/analysis.hpp"
#include "safeloop/cli/config.hpp"
#include "safeloop/cli/report.hpp"
#include "safeloop/cli/svg.hpp"
#include "safeloop/json_matrix.hpp"
#include "safeloop/sdp_io.hpp"
#include "safeloop/sim.hpp"
#include "safeloop/synthesis.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

namespace safeloop::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

Execution execution(const CommandOptions& o) { return o.serial ? Execution::Serial : Execution::Parallel; }

// Explicit scalars pin their grid axis; the rest use the default grid. A
// --grid file replaces everything.
ScalarGrid resolve_grid(const ProblemConfig& c, const CommandOptions& o) {
  if (o.grid) return load_grid(*o.grid);
  ScalarGrid g = ScalarGrid::defaults();
  if (c.scalars) {
    if (c.scalars->alpha) g.alphas = {*c.scalars->alpha};
    if (c.scalars->beta) g.betas = {*c.scalars->beta};
    if (c.scalars->delta) g.deltas = {*c.scalars->delta};
  }
  g.validate();
  return g;
}

json header(const std::string& command, const ProblemConfig& c) {
  return {{"command", command}, {"name", c.name}};
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

const Matrix& require_Ra(const ProblemConfig& c, const char* command) {
  if (!c.Ra)
    throw ConfigError(std::string(command) +
                      " needs a fixed attack bound (attack.R_a); use assess to compute the largest tolerable one");
  return *c.Ra;
}

AnalysisOptions analysis_options(const CommandOptions& o) {
  AnalysisOptions a;
  a.execution = execution(o);
  return a;
}

Trajectory decimate(const Trajectory& t, int stride) {
  if (stride <= 1) return t;
  Trajectory out;
  for (std::size_t k = 0; k < t.times.size(); ++k) {
    if (k % static_cast<std::size_t>(stride) != 0 && k + 1 != t.times.size()) continue;
    out.times.push_back(t.times[k]);
    out.states.push_back(t.states[k]);
    out.attacks.push_back(t.attacks[k]);
  }
  return out;
}

}  // namespace

int cmd_verify(const CommandOptions& o, std::ostream& log) {
  const ProblemConfig c = load_config(o.config);
  const Matrix& Ra = require_Ra(c, "verify");
  const ScalarGrid grid = resolve_grid(c, o);
  const ClosedLoop cl = c.system.primary_loop();
  const Ellipsoid safe = c.safe();
  const AnalysisResult r = verify_safety(cl, Ra, safe, grid, analysis_options(o));

  json rep = header("verify", c);
  rep["grid"] = grid_to_json(grid);
  rep["result"] = analysis_to_json(r);
  json ellipses = json::array();
  if (r.certified()) {
    ellipses.push_back(ellipse_entry("invariant set (certified)", r.certificate->Q, Vector::Zero(cl.n1())));
  } else {
    const AnalysisResult u = find_invariant_unconstrained(cl, Ra, grid, analysis_options(o));
    rep["unconstrained"] = analysis_to_json(u);
    if (u.certified())
      ellipses.push_back(ellipse_entry("invariant set (containment dropped)", u.certificate->Q, Vector::Zero(cl.n1())));
  }
  rep["ellipses"] = ellipses;
  write_json_file(o.out / "verify.json", rep);

  log << "verify: " << to_string(r.verdict);
  if (r.certified())
    log << " at alpha = " << fmt("%.6g", r.certificate->alpha) << ", Tr Q = " << fmt("%.6g", r.certificate->Q.trace());
  else if (rep.contains("unconstrained"))
    log << "; without containment: " << rep["unconstrained"]["verdict"].get<std::string>();
  log << "\n";
  return r.certified() ? kExitOk : kExitUncertified;
}

int cmd_assess(const CommandOptions& o, std::ostream& log) {
  const ProblemConfig c = load_config(o.config);
  const ScalarGrid grid = resolve_grid(c, o);
  const ClosedLoop cl = c.system.primary_loop();
  const AnalysisResult r = assess_worst_attack(cl, c.safe(), grid, analysis_options(o));

  json rep = header("assess", c);
  rep["grid"] = grid_to_json(grid);
  rep["result"] = analysis_to_json(r);
  json ellipses = json::array();
  if (r.certified()) {
    const Matrix& Ra = *r.certificate->Ra;
    rep["R_a"] = matrix_to_json(Ra);
    rep["trace_R_a"] = Ra.trace();
    rep["volume_bound"] = {{"sqrt_det", std::sqrt(std::max(0.0, Ra.determinant()))},
                           {"trace_bound", trace_volume_bound(Ra)}};
    ellipses.push_back(ellipse_entry("invariant set (worst tolerable attack)", r.certificate->Q, Vector::Zero(cl.n1())));
  }
  rep["ellipses"] = ellipses;
  write_json_file(o.out / "assess.json", rep);

  log << "assess: " << to_string(r.verdict);
  if (r.certified()) log << ", Tr R_a* = " << fmt("%.9g", r.certificate->Ra->trace());
  log << "\n";
  return r.certified() ? kExitOk : kExitUncertified;
}

int cmd_synthesize(const CommandOptions& o, std::ostream& log) {
  const ProblemConfig c = load_config(o.config);
  const HatSystem hat = c.system.hat_system();
  const Index n1 = hat.n1();
  if (c.synthesis.controller_order && *c.synthesis.controller_order != n1)
    throw ConfigError("synthesis.controller_order = " + std::to_string(*c.synthesis.controller_order) +
                      ", but the synthesis requires a secondary controller of the same order as the plant and "
                      "primary controller together (n2 = n1 = " + std::to_string(n1) + ")");
  const Objective objective = c.synthesis.objective.value_or(c.Ra ? Objective::Feasibility : Objective::MinTraceAttack);
  const Ellipsoid safe = c.safe();
  SynthesisOptions opts;
  opts.execution = execution(o);

  const bool single = !o.grid && c.scalars && c.scalars->alpha && c.scalars->delta && (c.Ra || c.scalars->beta);
  const ScalarGrid grid = resolve_grid(c, o);
  if (o.dump_sdp) {
    const SynthesisScalars first{grid.alphas.front(), c.Ra ? std::nullopt : std::optional(grid.betas.front()),
                                 grid.deltas.front()};
    dump_problem(synthesis_problem(hat, safe, c.Ra, first, objective, opts), *o.dump_sdp);
  }
  SynthesisResult r;
  try {
    r = single ? synthesize(hat, safe, c.Ra,
                            {*c.scalars->alpha, c.Ra ? std::nullopt : c.scalars->beta, *c.scalars->delta}, objective,
                            opts)
               : synthesize_grid(hat, safe, c.Ra, grid, objective, opts);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }

  json rep = header("synthesize", c);
  rep["objective"] = std::string(to_string(objective));
  if (!single) rep["grid"] = grid_to_json(grid);
  rep["result"] = synthesis_to_json(r);
  rep["ellipses"] = json::array();
  int code = kExitUncertified;
  if (r.feasible) {
    try {
      const Recovery rec = recover_controller(*r.eta, hat, c.synthesis.M);
      const SynthesisCertificate cert =
          certify(hat, rec.controller, r.Ra, safe, r.alpha, r.beta, rec.data.P, r.eta->X);
      rep["recovery"] = {{"M", matrix_to_json(rec.data.M)},
                         {"N", matrix_to_json(rec.data.N)},
                         {"condition_I_minus_XY", rec.data.condition}};
      rep["certificate"] = synthesis_certificate_to_json(cert);
      const ControllerFile file{rec.controller, rec.data.P, r.eta->X, r.Ra, r.alpha, r.beta};
      rep["controller"] = controller_to_json(file)["secondary"];
      const ClosedLoop cl = closed_loop_from_hat(hat, rec.controller);
      rep["closed_loop"] = {{"max_rk4_step", max_step(cl)}, {"default_step", default_step(cl)}};
      rep["ellipses"].push_back(ellipse_entry("invariant set X^-1 (" + std::string(to_string(objective)) + ")",
                                              cert.certificate.Q, Vector::Zero(n1)));
      write_json_file(o.out / "controller.json", controller_to_json(file));
      code = cert.passed ? kExitOk : kExitUncertified;
      log << "synthesize: feasible, certificate " << (cert.passed ? "passed" : "refused (" + cert.failed_check + ")")
          << ", det X = " << fmt("%.6g", r.eta->X.determinant()) << "\n";
    } catch (const Error& e) {
      rep["recovery_error"] = e.what();
      log << "synthesize: feasible, but controller recovery failed: " << e.what() << "\n";
    }
  } else {
    log << "synthesize: " << r.message << "\n";
  }
  write_json_file(o.out / "synthesize.json", rep);
  return code;
}

int cmd_simulate(const CommandOptions& o, std::ostream& log) {
  const ProblemConfig c = load_config(o.config);
  const SimulationSpec& spec = c.simulation;
  std::optional<ControllerFile> ctrl;
  if (o.controller) ctrl = load_controller(*o.controller);
  else if (c.secondary) ctrl = ControllerFile{*c.secondary, {}, {}, {}, {}, {}};

  const ClosedLoop cl = ctrl ? c.system.with_secondary(ctrl->controller) : c.system.primary_loop();
  const Ellipsoid safe = c.safe();
  std::optional<Matrix> Ra = c.Ra;
  if (!Ra && ctrl && ctrl->Ra) Ra = ctrl->Ra;
  if (!Ra) throw ConfigError("simulate needs an attack bound: attack.R_a in the config or R_a in the controller file");

  json rep = header("simulate", c);
  int code = kExitOk;
  if (ctrl && ctrl->P && ctrl->alpha && ctrl->beta) {
    const SynthesisCertificate cert = certify(c.system.hat_system(), ctrl->controller, *Ra, safe, *ctrl->alpha,
                                              *ctrl->beta, *ctrl->P, ctrl->X);
    rep["certificate"] = synthesis_certificate_to_json(cert);
    if (!cert.passed) code = kExitUncertified;
  }

  Matrix P;
  if (spec.invariant) {
    P = *spec.invariant;
  } else if (ctrl && ctrl->P) {
    P = *ctrl->P;
  } else if (ctrl) {
    throw ConfigError("the controller carries no certificate P; give simulation.invariant");
  } else {
    const AnalysisResult u = find_invariant_unconstrained(cl, *Ra, resolve_grid(c, o), analysis_options(o));
    if (!u.certified()) {
      rep["message"] = "no invariant ellipsoid exists on the grid; nothing to start from";
      write_json_file(o.out / "simulate.json", rep);
      log << "simulate: no invariant ellipsoid to start from\n";
      return kExitUncertified;
    }
    P = u.certificate->Q;
  }
  if (P.rows() != P.cols() || (P.rows() != cl.dim() && P.rows() != cl.n1()))
    throw ConfigError("invariant is " + shape_string(P) + "; expected " + std::to_string(cl.dim()) + "x" +
                      std::to_string(cl.dim()) + " (full state) or " + std::to_string(cl.n1()) + "x" +
                      std::to_string(cl.n1()));
  P = symmetrized(P);
  if (!is_pd(P)) throw ConfigError("invariant matrix is not positive definite");
  for (AttackKind k : spec.policies)
    if (k == AttackKind::GreedyWorst && P.rows() != cl.dim())
      throw ConfigError("the greedy policy needs an invariant on the full state (" + std::to_string(cl.dim()) + "x" +
                        std::to_string(cl.dim()) + ")");

  const double dt = spec.dt.value_or(default_step(cl));
  if (dt > max_step(cl))
    throw ConfigError("simulation.dt = " + fmt("%.6g", dt) + " exceeds the RK4 limit 0.1/||A|| = " +
                      fmt("%.6g", max_step(cl)) + "; use dt <= " + fmt("%.6g", max_step(cl)));

  const std::uint64_t seed = o.seed.value_or(spec.seed);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<BatchRun> runs;
  std::vector<std::pair<AttackKind, int>> labels;
  for (AttackKind kind : spec.policies) {
    for (int k = 0; k < spec.runs; ++k) {
      Vector x0 = Vector::Zero(cl.dim());
      x0.head(P.rows()) = sample_on_level(P, spec.initial_level, rng);
      switch (kind) {
        case AttackKind::Zero: runs.push_back({x0, AttackPolicy::zero(*Ra)}); break;
        case AttackKind::ConstantBoundary: {
          Vector d(cl.na());
          do {
            for (Index i = 0; i < d.size(); ++i) d(i) = normal(rng);
          } while (d.isZero(0.0));
          runs.push_back({x0, AttackPolicy::constant(*Ra, d)});
          break;
        }
        case AttackKind::RandomBoundary: runs.push_back({x0, AttackPolicy::random(*Ra, spec.dwell, rng())}); break;
        case AttackKind::GreedyWorst: runs.push_back({x0, AttackPolicy::greedy(*Ra, P)}); break;
      }
      labels.emplace_back(kind, k);
    }
  }

  const std::vector<SafetyReport> reports =
      check_batch(cl, runs, spec.horizon, dt, safe, P, execution(o));

  json list = json::array();
  int safe_violations = 0, invariant_violations = 0;
  double max_v = 0.0, max_s = 0.0;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    json e = safety_to_json(reports[i]);
    e["policy"] = std::string(to_string(labels[i].first));
    e["run"] = labels[i].second;
    e["x0"] = vector_to_json(runs[i].x0);
    list.push_back(e);
    safe_violations += reports[i].first_violation.has_value();
    invariant_violations += reports[i].first_invariant_violation.has_value();
    max_v = std::max(max_v, reports[i].max_invariant_level);
    max_s = std::max(max_s, reports[i].max_safe_level);
  }
  if (safe_violations || invariant_violations) code = kExitUncertified;

  for (std::size_t i = 0; i < runs.size(); ++i) {
    const bool write = spec.csv == CsvOutput::All || (spec.csv == CsvOutput::First && labels[i].second == 0);
    if (!write) continue;
    AttackPolicy policy = runs[i].policy;
    const Trajectory t = decimate(integrate(cl, policy, runs[i].x0, spec.horizon, dt), spec.csv_stride);
    std::ostringstream csv;
    write_csv(csv, t);
    char name[64];
    std::snprintf(name, sizeof name, "trajectory_%s_%03d.csv", std::string(to_string(labels[i].first)).c_str(),
                  labels[i].second);
    write_text_file(o.out / name, csv.str());
  }

  rep["dt"] = dt;
  rep["horizon"] = spec.horizon;
  rep["seed"] = seed;
  rep["initial_level"] = spec.initial_level;
  rep["invariant"] = matrix_to_json(P);
  rep["runs"] = list;
  rep["summary"] = {{"runs", reports.size()},
                    {"safe_violations", safe_violations},
                    {"invariant_violations", invariant_violations},
                    {"max_invariant_level", max_v},
                    {"max_safe_level", max_s}};
  rep["note"] = "simulated attacks only bound the reachable set from below; they do not prove safety";
  write_json_file(o.out / "simulate.json", rep);
  log << "simulate: " << reports.size() << " runs, max V = " << fmt("%.9g", max_v) << ", " << invariant_violations
      << " invariant and " << safe_violations << " safe-set violations\n";
  return code;
}

int cmd_plot(const CommandOptions& o, std::ostream& log) {
  const ProblemConfig c = load_config(o.config);
  std::vector<fs::path> reports = o.reports;
  if (reports.empty())
    for (const char* f : {"verify.json", "assess.json", "synthesize.json"})
      if (fs::exists(o.out / f)) reports.push_back(o.out / f);
  if (reports.empty())
    throw ConfigError("plot needs at least one report (--report <file> from verify, assess or synthesize)");

  const Index n1 = c.safe_shape.rows();
  std::vector<Index> coords{0, 1};
  if (n1 < 2) throw ConfigError("plots need at least two coordinates; the safe set has " + std::to_string(n1));
  if (o.axes) {
    coords = {o.axes->first - 1, o.axes->second - 1};
    for (Index k : coords)
      if (k < 0 || k >= n1)
        throw ConfigError("--axes: coordinates run from 1 to " + std::to_string(n1));
    if (coords[0] == coords[1]) throw ConfigError("--axes: pick two different coordinates");
  } else if (n1 != 2) {
    throw ConfigError("the safe set lives in " + std::to_string(n1) +
                      " dimensions; plots are 2-D, pass --axes i,j (for example --axes 1,2) to project");
  }

  auto restrict = [&](const Matrix& shape, const Vector& center) {
    const Matrix s = n1 == 2 && !o.axes ? shape : project_onto(shape, coords).shape;
    Vector ctr(2);
    ctr << center(coords[0]), center(coords[1]);
    return Ellipsoid(s, ctr);
  };

  PlotSpec spec;
  spec.title = c.name;
  spec.x_label = "zeta_1[" + std::to_string(coords[0] + 1) + "]";
  spec.y_label = "zeta_1[" + std::to_string(coords[1] + 1) + "]";
  try {
    spec.ellipses.push_back({"safe set", restrict(c.safe_shape, c.safe_center)});
    for (const auto& path : reports) {
      const json rep = read_json(path);
      if (!rep.contains("ellipses") || !rep["ellipses"].is_array())
        throw ConfigError(path.string() + ": not a report with an ellipses list");
      for (const auto& e : rep["ellipses"]) {
        const Matrix shape = matrix_from_json(e.at("shape"), path.string() + ": ellipses.shape");
        const Vector center = vector_from_json(e.at("center"), path.string() + ": ellipses.center");
        if (shape.rows() != n1)
          throw ConfigError(path.string() + ": ellipse dimension " + std::to_string(shape.rows()) +
                            " does not match the safe set (" + std::to_string(n1) + ")");
        spec.ellipses.push_back({e.at("label").get<std::string>(), restrict(shape, center)});
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed report: ") + e.what());
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  write_text_file(o.out / "plot.svg", render_svg(spec));
  log << "plot: " << spec.ellipses.size() << " ellipses written to " << (o.out / "plot.svg").string() << "\n";
  return kExitOk;
}

std::pair<Index, Index> parse_axes(const std::string& s) {
  const auto comma = s.find(',');
  try {
    if (comma == std::string::npos) throw std::invalid_argument(s);
    std::size_t used = 0;
    const long a = std::stol(s.substr(0, comma), &used);
    if (used != comma) throw std::invalid_argument(s);
    const std::string rest = s.substr(comma + 1);
    const long b = std::stol(rest, &used);
    if (used != rest.size()) throw std::invalid_argument(s);
    return {a, b};
  } catch (const std::logic_error&) {
    throw ConfigError("--axes expects two 1-based coordinates such as 1,2; got \"" + s + "\"");
  }
}

int run_command(const std::string& name, const CommandOptions& o, std::ostream& log, std::ostream& err) {
  try {
    if (name == "verify") return cmd_verify(o, log);
    if (name == "assess") return cmd_assess(o, log);
    if (name == "synthesize") return cmd_synthesize(o, log);
    if (name == "simulate") return cmd_simulate(o, log);
    if (name == "plot") return cmd_plot(o, log);
    err << "error: unknown command " << name << "\n";
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
  }
  return kExitUsage;
}

}  // namespace safeloop::cli
