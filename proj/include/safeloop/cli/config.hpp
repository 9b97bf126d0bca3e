#pragma once

#include "safeloop/analysis.hpp"
#include "safeloop/ellipsoid.hpp"
#include "safeloop/sim.hpp"
#include "safeloop/synthesis.hpp"
#include "safeloop/sysmodel.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace safeloop::cli {

/// Malformed or inconsistent input files. Always maps to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Either a plant with its primary controller (plus an optional selection
/// of secured channels), or the hat matrices directly.
struct SystemSpec {
  std::optional<Plant> plant;
  std::optional<PrimaryController> primary;
  std::optional<Selection> selection;
  std::optional<HatSystem> hat;

  Index n1() const;
  /// The loop with the secondary controller removed.
  ClosedLoop primary_loop() const;
  HatSystem hat_system() const;
  ClosedLoop with_secondary(const SecondaryController& sc) const;
};

/// Explicit scalars; anything left unset falls back to the default grid.
struct ScalarSpec {
  std::optional<double> alpha;
  std::optional<double> beta;
  std::optional<double> delta;
};

struct SynthesisSpec {
  /// Unset: feasibility with a fixed attack bound, min-trace-attack otherwise.
  std::optional<Objective> objective;
  std::optional<Index> controller_order;
  std::optional<Matrix> M;
};

enum class CsvOutput { None, First, All };

struct SimulationSpec {
  double horizon = 10.0;
  std::optional<double> dt;
  std::vector<AttackKind> policies{AttackKind::Zero, AttackKind::RandomBoundary, AttackKind::GreedyWorst};
  int runs = 10;
  double dwell = 0.5;
  std::uint64_t seed = 0;
  double initial_level = 1.0;
  std::optional<Matrix> invariant;  // overrides the certificate used for checking
  CsvOutput csv = CsvOutput::First;
  int csv_stride = 1;
};

struct ProblemConfig {
  std::string name;
  SystemSpec system;
  std::optional<Matrix> Ra;  // unset: the attack shape is assessed
  Matrix safe_shape;
  Vector safe_center;
  std::optional<ScalarSpec> scalars;  // unset: grid
  SynthesisSpec synthesis;
  SimulationSpec simulation;
  std::optional<SecondaryController> secondary;

  Ellipsoid safe() const { return Ellipsoid(safe_shape, safe_center); }
};

/// Secondary controller plus the certificate it was synthesized with.
struct ControllerFile {
  SecondaryController controller;
  std::optional<Matrix> P;
  std::optional<Matrix> X;
  std::optional<Matrix> Ra;
  std::optional<double> alpha;
  std::optional<double> beta;
};

ProblemConfig parse_config(const nlohmann::json& j);
nlohmann::json config_to_json(const ProblemConfig& c);
/// Reads and parses; syntax errors carry file:line:column.
ProblemConfig load_config(const std::filesystem::path& path);

ScalarGrid parse_grid(const nlohmann::json& j);
ScalarGrid load_grid(const std::filesystem::path& path);
nlohmann::json grid_to_json(const ScalarGrid& g);

ControllerFile parse_controller(const nlohmann::json& j);
nlohmann::json controller_to_json(const ControllerFile& c);
ControllerFile load_controller(const std::filesystem::path& path);

/// Parses a whole file as JSON, reporting syntax errors with line and column.
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace safeloop::cli
