#include "safeloop/sdp_io.hpp"

#include "safeloop/json_matrix.hpp"

#include <fstream>

namespace safeloop {

using nlohmann::json;

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Matrix matrix_from_json(const json& j, const std::string& where) {
  if (j.is_number()) return Matrix::Constant(1, 1, j.get<double>());
  if (!j.is_array() || j.empty())
    throw Error(ErrorKind::InvalidArgument, where + ": expected a non-empty array of rows");
  if (j.front().is_number()) {
    // flat array: a single row
    Matrix m(1, static_cast<Index>(j.size()));
    for (std::size_t c = 0; c < j.size(); ++c) {
      if (!j[c].is_number()) throw Error(ErrorKind::InvalidArgument, where + ": non-numeric entry");
      m(0, static_cast<Index>(c)) = j[c].get<double>();
    }
    return m;
  }
  const std::size_t ncols = j.front().is_array() ? j.front().size() : 0;
  if (ncols == 0) throw Error(ErrorKind::InvalidArgument, where + ": rows must be non-empty arrays");
  Matrix m(static_cast<Index>(j.size()), static_cast<Index>(ncols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != ncols)
      throw Error(ErrorKind::InvalidArgument,
                  where + ": row " + std::to_string(r) + " has the wrong length (expected " + std::to_string(ncols) + ")");
    for (std::size_t c = 0; c < ncols; ++c) {
      if (!j[r][c].is_number()) throw Error(ErrorKind::InvalidArgument, where + ": non-numeric entry");
      m(static_cast<Index>(r), static_cast<Index>(c)) = j[r][c].get<double>();
    }
  }
  return m;
}

Vector vector_from_json(const json& j, const std::string& where) {
  if (j.is_number()) return Vector::Constant(1, j.get<double>());
  const Matrix m = matrix_from_json(j, where);
  if (m.rows() == 1) return m.row(0).transpose();
  if (m.cols() == 1) return m.col(0);
  throw Error(ErrorKind::InvalidArgument, where + ": expected a vector, got " + shape_string(m));
}

namespace {

json expr_to_json(const AffineExpr& e) {
  json terms = json::array();
  for (const auto& [k, coef] : e.terms()) terms.push_back({{"index", k}, {"coefficient", matrix_to_json(coef)}});
  return {{"rows", e.rows()}, {"cols", e.cols()}, {"constant", matrix_to_json(e.constant())}, {"terms", terms}};
}

AffineExpr expr_from_json(const json& j, int num_scalars, const std::string& where) {
  AffineExpr e(matrix_from_json(j.at("constant"), where + ".constant"));
  for (const auto& t : j.at("terms")) {
    const int k = t.at("index").get<int>();
    if (k < 0 || k >= num_scalars) throw Error(ErrorKind::InvalidArgument, where + ": term index out of range");
    e.add_term(k, matrix_from_json(t.at("coefficient"), where + ".terms"));
  }
  return e;
}

}  // namespace

json problem_to_json(const SdpProblem& problem) {
  json vars = json::array();
  for (const auto& v : problem.variables())
    vars.push_back({{"name", v.name}, {"rows", v.rows}, {"cols", v.cols}, {"symmetric", v.symmetric}});
  json cons = json::array();
  for (const auto& c : problem.constraints()) {
    json jc = expr_to_json(c.expr);
    jc["label"] = c.label;
    cons.push_back(std::move(jc));
  }
  json out = {{"format", "safeloop-sdp"}, {"version", 1}, {"variables", vars}, {"constraints", cons}};
  if (problem.objective()) {
    out["objective"] = expr_to_json(*problem.objective());
    out["objective"]["sense"] = problem.maximizing() ? "maximize" : "minimize";
  }
  return out;
}

SdpProblem problem_from_json(const json& j) {
  SdpProblem p;
  for (const auto& v : j.at("variables")) {
    const auto name = v.at("name").get<std::string>();
    const auto rows = v.at("rows").get<Index>();
    const auto cols = v.at("cols").get<Index>();
    if (v.at("symmetric").get<bool>())
      p.add_symmetric(name, rows);
    else
      p.add_matrix(name, rows, cols);
  }
  for (const auto& c : j.at("constraints")) {
    const auto label = c.value("label", std::string("constraint"));
    p.add_psd(expr_from_json(c, p.num_scalars(), label), label);
  }
  if (j.contains("objective")) {
    const auto& o = j.at("objective");
    AffineExpr obj = expr_from_json(o, p.num_scalars(), "objective");
    if (o.value("sense", std::string("minimize")) == "maximize")
      p.maximize(std::move(obj));
    else
      p.minimize(std::move(obj));
  }
  return p;
}

void dump_problem(const SdpProblem& problem, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::InvalidArgument, "cannot write " + path.string());
  os << problem_to_json(problem).dump(2) << "\n";
}

SdpProblem load_problem(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::InvalidArgument, "cannot read " + path.string());
  return problem_from_json(json::parse(is));
}

}  // namespace safeloop
