#pragma once

#include "safeloop/types.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace safeloop::cli {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitUncertified = 2 };

struct CommandOptions {
  std::filesystem::path config;
  std::filesystem::path out = ".";
  std::optional<std::filesystem::path> grid;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> controller;  // simulate
  std::vector<std::filesystem::path> reports;       // plot
  std::optional<std::pair<Index, Index>> axes;      // plot, 1-based
  std::optional<std::filesystem::path> dump_sdp;    // synthesize
  bool serial = false;
};

/// Each command writes its files into `out` and returns an exit code.
/// Configuration errors propagate as exceptions; run_command maps them.
int cmd_verify(const CommandOptions& o, std::ostream& log);
int cmd_assess(const CommandOptions& o, std::ostream& log);
int cmd_synthesize(const CommandOptions& o, std::ostream& log);
int cmd_simulate(const CommandOptions& o, std::ostream& log);
int cmd_plot(const CommandOptions& o, std::ostream& log);

/// Dispatches by name and never returns anything but 0, 1 or 2.
int run_command(const std::string& name, const CommandOptions& o, std::ostream& log, std::ostream& err);

/// Parses "i,j" with 1-based indices.
std::pair<Index, Index> parse_axes(const std::string& s);

}  // namespace safeloop::cli
