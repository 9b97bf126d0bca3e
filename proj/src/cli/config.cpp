#include "safeloop/cli/config.hpp"

#include "safeloop/json_matrix.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace safeloop::cli {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

const json& need(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) throw ConfigError(path + ": expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError("missing field " + join(path, key));
  return *it;
}

const json* maybe(const json& obj, const std::string& key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

void only_fields(const json& obj, const std::set<std::string>& allowed, const std::string& path) {
  if (!obj.is_object()) throw ConfigError((path.empty() ? std::string("config") : path) + ": expected an object");
  for (const auto& [k, v] : obj.items())
    if (!allowed.contains(k)) throw ConfigError("unknown field " + join(path, k));
}

Matrix matrix(const json& obj, const std::string& key, const std::string& path) {
  try {
    return matrix_from_json(need(obj, key, path), join(path, key));
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

std::optional<Matrix> optional_matrix(const json& obj, const std::string& key, const std::string& path) {
  if (!maybe(obj, key)) return std::nullopt;
  return matrix(obj, key, path);
}

Vector vector(const json& obj, const std::string& key, const std::string& path) {
  try {
    return vector_from_json(need(obj, key, path), join(path, key));
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError(where + ": expected a number");
  return j.get<double>();
}

std::optional<double> optional_number(const json& obj, const std::string& key, const std::string& path) {
  const json* v = maybe(obj, key);
  if (!v) return std::nullopt;
  return number(*v, join(path, key));
}

template <class T>
T integer(const json& j, const std::string& where) {
  if (!j.is_number_integer()) throw ConfigError(where + ": expected an integer");
  if constexpr (std::is_unsigned_v<T>) {
    if (j.is_number_unsigned()) return j.get<T>();
    if (j.get<long long>() < 0) throw ConfigError(where + ": expected a nonnegative integer");
  }
  return j.get<T>();
}

std::string text(const json& j, const std::string& where) {
  if (!j.is_string()) throw ConfigError(where + ": expected a string");
  return j.get<std::string>();
}

std::vector<double> number_list(const json& obj, const std::string& key, const std::string& path) {
  const json& v = need(obj, key, path);
  if (!v.is_array()) throw ConfigError(join(path, key) + ": expected an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) out.push_back(number(x, join(path, key)));
  return out;
}

json list_to_json(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(x);
  return out;
}

// Wraps sysmodel's dimension errors so they surface as config errors.
template <class F>
auto checked(F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

SystemSpec parse_system(const json& j) {
  const std::string path = "system";
  only_fields(j, {"plant", "primary", "selection", "hat"}, path);
  SystemSpec s;
  if (maybe(j, "hat")) {
    if (maybe(j, "plant") || maybe(j, "primary"))
      throw ConfigError("system: give either hat or plant and primary, not both");
    const json& h = j["hat"];
    only_fields(h, {"A_hat", "B_hat", "C_hat", "B1cal"}, "system.hat");
    s.hat = HatSystem{matrix(h, "A_hat", "system.hat"), matrix(h, "B_hat", "system.hat"),
                      matrix(h, "C_hat", "system.hat"), matrix(h, "B1cal", "system.hat")};
    checked([&] { s.hat->validate(); return 0; });
    if (maybe(j, "selection")) throw ConfigError("system.selection: the hat form already includes the selection");
    return s;
  }
  const json& p = need(j, "plant", path);
  only_fields(p, {"A_p", "B_p", "C_p"}, "system.plant");
  s.plant = Plant{matrix(p, "A_p", "system.plant"), matrix(p, "B_p", "system.plant"), matrix(p, "C_p", "system.plant")};
  const json& c = need(j, "primary", path);
  only_fields(c, {"A_1", "B_1", "C_1", "D_1"}, "system.primary");
  s.primary = PrimaryController{matrix(c, "A_1", "system.primary"), matrix(c, "B_1", "system.primary"),
                                matrix(c, "C_1", "system.primary"), matrix(c, "D_1", "system.primary")};
  checked([&] {
    s.plant->validate();
    s.primary->validate(*s.plant);
    return 0;
  });
  if (const json* sel = maybe(j, "selection")) {
    only_fields(*sel, {"E_u", "C_S"}, "system.selection");
    s.selection = Selection{matrix(*sel, "E_u", "system.selection"), matrix(*sel, "C_S", "system.selection")};
    checked([&] { s.selection->validate(*s.plant); return 0; });
  }
  return s;
}

json system_to_json(const SystemSpec& s) {
  json j = json::object();
  if (s.hat) {
    j["hat"] = {{"A_hat", matrix_to_json(s.hat->Ahat)},
                {"B_hat", matrix_to_json(s.hat->Bhat)},
                {"C_hat", matrix_to_json(s.hat->Chat)},
                {"B1cal", matrix_to_json(s.hat->B1)}};
    return j;
  }
  j["plant"] = {{"A_p", matrix_to_json(s.plant->A)}, {"B_p", matrix_to_json(s.plant->B)}, {"C_p", matrix_to_json(s.plant->C)}};
  j["primary"] = {{"A_1", matrix_to_json(s.primary->A)},
                  {"B_1", matrix_to_json(s.primary->B)},
                  {"C_1", matrix_to_json(s.primary->C)},
                  {"D_1", matrix_to_json(s.primary->D)}};
  if (s.selection) j["selection"] = {{"E_u", matrix_to_json(s.selection->Eu)}, {"C_S", matrix_to_json(s.selection->Cs)}};
  return j;
}

SecondaryController parse_secondary(const json& j, const std::string& path) {
  only_fields(j, {"A_2", "B_2", "C_2", "D_2"}, path);
  SecondaryController sc{matrix(j, "A_2", path), matrix(j, "B_2", path), matrix(j, "C_2", path), matrix(j, "D_2", path)};
  checked([&] { sc.validate(); return 0; });
  return sc;
}

json secondary_to_json(const SecondaryController& sc) {
  return {{"A_2", matrix_to_json(sc.A)}, {"B_2", matrix_to_json(sc.B)}, {"C_2", matrix_to_json(sc.C)},
          {"D_2", matrix_to_json(sc.D)}};
}

SimulationSpec parse_simulation(const json& j) {
  const std::string path = "simulation";
  only_fields(j, {"horizon", "dt", "policies", "runs", "dwell", "seed", "initial_level", "invariant", "csv", "csv_stride"},
              path);
  SimulationSpec s;
  if (auto v = optional_number(j, "horizon", path)) s.horizon = *v;
  s.dt = optional_number(j, "dt", path);
  if (const json* p = maybe(j, "policies")) {
    if (!p->is_array() || p->empty()) throw ConfigError("simulation.policies: expected a non-empty array");
    s.policies.clear();
    for (const auto& x : *p) {
      const std::string name = text(x, "simulation.policies");
      const auto k = attack_kind_from_string(name);
      if (!k)
        throw ConfigError("simulation.policies: unknown policy \"" + name + "\" (use zero, constant, random, greedy)");
      s.policies.push_back(*k);
    }
  }
  if (const json* v = maybe(j, "runs")) s.runs = integer<int>(*v, "simulation.runs");
  if (auto v = optional_number(j, "dwell", path)) s.dwell = *v;
  if (const json* v = maybe(j, "seed")) s.seed = integer<std::uint64_t>(*v, "simulation.seed");
  if (auto v = optional_number(j, "initial_level", path)) s.initial_level = *v;
  s.invariant = optional_matrix(j, "invariant", path);
  if (const json* v = maybe(j, "csv")) {
    const std::string mode = text(*v, "simulation.csv");
    if (mode == "none") s.csv = CsvOutput::None;
    else if (mode == "first") s.csv = CsvOutput::First;
    else if (mode == "all") s.csv = CsvOutput::All;
    else throw ConfigError("simulation.csv: expected none, first or all");
  }
  if (const json* v = maybe(j, "csv_stride")) s.csv_stride = integer<int>(*v, "simulation.csv_stride");
  if (!(s.horizon > 0.0)) throw ConfigError("simulation.horizon must be positive");
  if (s.dt && !(*s.dt > 0.0)) throw ConfigError("simulation.dt must be positive");
  if (s.runs < 1) throw ConfigError("simulation.runs must be at least 1");
  if (!(s.dwell > 0.0)) throw ConfigError("simulation.dwell must be positive");
  if (!(s.initial_level >= 0.0)) throw ConfigError("simulation.initial_level must be nonnegative");
  if (s.csv_stride < 1) throw ConfigError("simulation.csv_stride must be at least 1");
  return s;
}

json simulation_to_json(const SimulationSpec& s) {
  json j = {{"horizon", s.horizon}, {"runs", s.runs}, {"dwell", s.dwell}, {"seed", s.seed},
            {"initial_level", s.initial_level}, {"csv_stride", s.csv_stride}};
  if (s.dt) j["dt"] = *s.dt;
  json p = json::array();
  for (AttackKind k : s.policies) p.push_back(std::string(to_string(k)));
  j["policies"] = p;
  if (s.invariant) j["invariant"] = matrix_to_json(*s.invariant);
  j["csv"] = s.csv == CsvOutput::None ? "none" : s.csv == CsvOutput::First ? "first" : "all";
  return j;
}

}  // namespace

Index SystemSpec::n1() const { return hat ? hat->n1() : plant->states() + primary->states(); }

ClosedLoop SystemSpec::primary_loop() const {
  if (hat) return closed_loop_from_hat(*hat, SecondaryController::zero(0, hat->my(), hat->mu()));
  return assemble_primary_loop(*plant, *primary);
}

HatSystem SystemSpec::hat_system() const {
  if (hat) return *hat;
  if (!selection)
    throw ConfigError("system.selection is required here: E_u and C_S pick the secured actuators and sensors");
  return hat_matrices(*plant, *primary, *selection);
}

ClosedLoop SystemSpec::with_secondary(const SecondaryController& sc) const {
  if (hat) return closed_loop_from_hat(*hat, sc);
  if (!selection)
    throw ConfigError("system.selection is required here: E_u and C_S pick the secured actuators and sensors");
  return assemble_closed_loop(*plant, *primary, sc, *selection);
}

ProblemConfig parse_config(const json& j) {
  only_fields(j, {"name", "system", "attack", "safe_set", "scalars", "synthesis", "simulation", "secondary"}, "");
  ProblemConfig c;
  if (const json* n = maybe(j, "name")) c.name = text(*n, "name");
  c.system = parse_system(need(j, "system", ""));
  const Index n1 = c.system.n1();

  const json& attack = need(j, "attack", "");
  if (attack.is_string()) {
    if (attack.get<std::string>() != "assess")
      throw ConfigError("attack: expected \"assess\" or an object with R_a");
  } else {
    only_fields(attack, {"R_a"}, "attack");
    c.Ra = matrix(attack, "R_a", "attack");
    const Index na = c.system.hat ? c.system.hat->na() : c.system.plant->inputs() + c.system.plant->outputs();
    if (c.Ra->rows() != na || c.Ra->cols() != na)
      throw ConfigError("attack.R_a is " + shape_string(*c.Ra) + " but the loop has " + std::to_string(na) +
                        " attack inputs (a = [a_u; a_y])");
    if (!is_symmetric(*c.Ra, 1e-12 * std::max(1.0, c.Ra->cwiseAbs().maxCoeff())) || !is_pd(*c.Ra))
      throw ConfigError("attack.R_a must be symmetric positive definite");
  }

  const json& safe = need(j, "safe_set", "");
  only_fields(safe, {"shape", "center"}, "safe_set");
  c.safe_shape = matrix(safe, "shape", "safe_set");
  c.safe_center = maybe(safe, "center") ? vector(safe, "center", "safe_set") : Vector::Zero(c.safe_shape.rows());
  if (c.safe_shape.rows() != n1 || c.safe_shape.cols() != n1)
    throw ConfigError("safe_set.shape is " + shape_string(c.safe_shape) + " but the plant-and-primary state has n1 = " +
                      std::to_string(n1) + " coordinates");
  if (c.safe_center.size() != n1)
    throw ConfigError("safe_set.center has " + std::to_string(c.safe_center.size()) + " entries, expected " +
                      std::to_string(n1));
  checked([&] { return c.safe(); });

  if (const json* s = maybe(j, "scalars")) {
    if (s->is_string()) {
      if (s->get<std::string>() != "grid") throw ConfigError("scalars: expected \"grid\" or an object");
    } else {
      only_fields(*s, {"alpha", "beta", "delta"}, "scalars");
      ScalarSpec sc{optional_number(*s, "alpha", "scalars"), optional_number(*s, "beta", "scalars"),
                    optional_number(*s, "delta", "scalars")};
      for (const auto& v : {sc.alpha, sc.beta, sc.delta})
        if (v && !(*v >= 0.0)) throw ConfigError("scalars: alpha, beta and delta must be nonnegative");
      c.scalars = sc;
    }
  }

  if (const json* s = maybe(j, "synthesis")) {
    only_fields(*s, {"objective", "controller_order", "M"}, "synthesis");
    if (const json* o = maybe(*s, "objective")) {
      const std::string name = text(*o, "synthesis.objective");
      const auto obj = objective_from_string(name);
      if (!obj)
        throw ConfigError("synthesis.objective: unknown objective \"" + name +
                          "\" (use feasibility, min-trace-attack, min-trace-x)");
      c.synthesis.objective = *obj;
    }
    if (const json* o = maybe(*s, "controller_order"))
      c.synthesis.controller_order = integer<Index>(*o, "synthesis.controller_order");
    c.synthesis.M = optional_matrix(*s, "M", "synthesis");
  }
  if (const json* s = maybe(j, "simulation")) c.simulation = parse_simulation(*s);
  if (const json* s = maybe(j, "secondary")) c.secondary = parse_secondary(*s, "secondary");
  return c;
}

json config_to_json(const ProblemConfig& c) {
  json j = json::object();
  if (!c.name.empty()) j["name"] = c.name;
  j["system"] = system_to_json(c.system);
  j["attack"] = c.Ra ? json{{"R_a", matrix_to_json(*c.Ra)}} : json("assess");
  j["safe_set"] = {{"shape", matrix_to_json(c.safe_shape)}, {"center", vector_to_json(c.safe_center)}};
  if (c.scalars) {
    json s = json::object();
    if (c.scalars->alpha) s["alpha"] = *c.scalars->alpha;
    if (c.scalars->beta) s["beta"] = *c.scalars->beta;
    if (c.scalars->delta) s["delta"] = *c.scalars->delta;
    j["scalars"] = s;
  } else {
    j["scalars"] = "grid";
  }
  json syn = json::object();
  if (c.synthesis.objective) syn["objective"] = std::string(to_string(*c.synthesis.objective));
  if (c.synthesis.controller_order) syn["controller_order"] = *c.synthesis.controller_order;
  if (c.synthesis.M) syn["M"] = matrix_to_json(*c.synthesis.M);
  j["synthesis"] = syn;
  j["simulation"] = simulation_to_json(c.simulation);
  if (c.secondary) j["secondary"] = secondary_to_json(*c.secondary);
  return j;
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string body = ss.str();
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < body.size(); ++i) {
      if (body[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(path.string() + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what());
  }
}

namespace {

// Prefixes semantic errors with the file name; syntax errors already have it.
template <class F>
auto from_file(const std::filesystem::path& path, F&& parse) {
  try {
    return parse(read_json(path));
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    if (what.rfind(path.string() + ":", 0) == 0) throw;
    throw ConfigError(path.string() + ": " + what);
  }
}

}  // namespace

ProblemConfig load_config(const std::filesystem::path& path) { return from_file(path, parse_config); }

ScalarGrid parse_grid(const json& j) {
  only_fields(j, {"alphas", "betas", "deltas"}, "grid");
  const ScalarGrid d = ScalarGrid::defaults();
  ScalarGrid g{maybe(j, "alphas") ? number_list(j, "alphas", "grid") : d.alphas,
               maybe(j, "betas") ? number_list(j, "betas", "grid") : d.betas,
               maybe(j, "deltas") ? number_list(j, "deltas", "grid") : d.deltas};
  checked([&] { g.validate(); return 0; });
  return g;
}

ScalarGrid load_grid(const std::filesystem::path& path) { return from_file(path, parse_grid); }

json grid_to_json(const ScalarGrid& g) {
  return {{"alphas", list_to_json(g.alphas)}, {"betas", list_to_json(g.betas)}, {"deltas", list_to_json(g.deltas)}};
}

ControllerFile parse_controller(const json& j) {
  only_fields(j, {"secondary", "certificate"}, "");
  ControllerFile f;
  f.controller = parse_secondary(need(j, "secondary", ""), "secondary");
  if (const json* c = maybe(j, "certificate")) {
    only_fields(*c, {"P", "X", "R_a", "alpha", "beta"}, "certificate");
    f.P = optional_matrix(*c, "P", "certificate");
    f.X = optional_matrix(*c, "X", "certificate");
    f.Ra = optional_matrix(*c, "R_a", "certificate");
    f.alpha = optional_number(*c, "alpha", "certificate");
    f.beta = optional_number(*c, "beta", "certificate");
  }
  return f;
}

json controller_to_json(const ControllerFile& f) {
  json j = {{"secondary", secondary_to_json(f.controller)}};
  json c = json::object();
  if (f.P) c["P"] = matrix_to_json(*f.P);
  if (f.X) c["X"] = matrix_to_json(*f.X);
  if (f.Ra) c["R_a"] = matrix_to_json(*f.Ra);
  if (f.alpha) c["alpha"] = *f.alpha;
  if (f.beta) c["beta"] = *f.beta;
  if (!c.empty()) j["certificate"] = c;
  return j;
}

ControllerFile load_controller(const std::filesystem::path& path) { return from_file(path, parse_controller); }

}  // namespace safeloop::cli
