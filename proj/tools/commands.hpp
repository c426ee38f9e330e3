#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace hmmgraph::cli {

enum ExitCode : int { kOk = 0, kRuntime = 1, kUsage = 2 };

struct CommandOptions {
  std::string command;  // run, sweep-gamma, sweep-topology, bound, validate-config
  std::filesystem::path config;
  std::filesystem::path out;  // empty: $HMMGRAPH_OUT/<name> or out/<name>
  std::vector<std::string> overrides;
  std::optional<std::size_t> workers;
  std::optional<std::size_t> runs;
  std::optional<std::uint64_t> seed;
  std::vector<double> gammas;  // sweep-gamma; empty: [sweep] gammas
  bool quiet = false;
};

/// Bare names that do not exist relative to the working directory are looked
/// up in the shipped config directory.
std::filesystem::path resolve_config_path(const std::filesystem::path& path);

int execute(const CommandOptions& options, std::ostream& out, std::ostream& err);

/// Parses argv and dispatches. Returns the process exit code.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hmmgraph::cli
