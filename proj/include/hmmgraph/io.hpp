#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "hmmgraph/filters.hpp"
#include "hmmgraph/sim.hpp"

namespace hmmgraph {

/// Shortest round-trip-safe rendering with 17 significant digits.
std::string format_real(double value);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

/// time,agent,strategy,hypothesis,belief. The centralized filter is written
/// with agent -1.
void write_beliefs_csv(std::ostream& out, const std::vector<FilterHistory>& histories);

struct BeliefRow {
  std::size_t time = 0;
  long agent = 0;
  std::string strategy;
  std::size_t hypothesis = 0;
  double belief = 0.0;
};
std::vector<BeliefRow> read_beliefs_csv(std::istream& in);

/// strategy,time,agent,J_mean,J_stderr,Jtilde_mean,Jtilde_stderr. Standard
/// errors are empty with a single run; Jtilde columns are empty for ASL.
void write_risks_csv(std::ostream& out, const std::vector<StrategyOutcome>& strategies);

/// One row per topology and strategy with the network-average asymptotic risks
/// and, where available, the bounds.
void write_summary_csv(std::ostream& out, const ExperimentResult& result);

/// Flat key = value bound report for every strategy that has one.
void write_bounds_text(std::ostream& out, const ExperimentResult& result);

/// State trajectory of the sample run: time,state.
void write_trajectory_csv(std::ostream& out, const StateTrajectory& trajectory);

}  // namespace hmmgraph
