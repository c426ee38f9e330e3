// Searches seeded random connected topologies for a target second eigenvalue
// magnitude of the Metropolis combination matrix. Used to (re)generate the
// shipped fixtures under data/topologies/.
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "hmmgraph/graph.hpp"

int main(int argc, char** argv) {
  CLI::App app{"search seeded random topologies by rho2"};
  std::size_t agents = 10;
  double target = 0.86;
  double tolerance = 0.02;
  double density_min = 0.1;
  double density_max = 0.5;
  double density_step = 0.01;
  std::uint64_t seeds = 200;
  std::size_t show = 10;
  std::string write;
  app.add_option("-k,--agents", agents, "number of agents")->required();
  app.add_option("-t,--target", target, "target rho2");
  app.add_option("--tolerance", tolerance, "accepted |rho2 - target|");
  app.add_option("--density-min", density_min);
  app.add_option("--density-max", density_max);
  app.add_option("--density-step", density_step);
  app.add_option("--seeds", seeds, "seeds per density");
  app.add_option("--show", show, "matches to print");
  app.add_option("--write", write, "write the closest match as an edge list to this path");
  CLI11_PARSE(app, argc, argv);

  struct Match {
    double density;
    std::uint64_t seed;
    double rho2;
    std::size_t edges;
  };
  std::vector<Match> matches;
  for (double d = density_min; d <= density_max + 1e-12; d += density_step) {
    for (std::uint64_t seed = 0; seed < seeds; ++seed) {
      const auto topology = hmmgraph::random_connected_topology(agents, d, seed);
      const double rho2 = hmmgraph::second_eigenvalue_magnitude(hmmgraph::metropolis_weights(topology));
      if (std::abs(rho2 - target) <= tolerance) matches.push_back({d, seed, rho2, topology.edges().size()});
    }
  }
  std::sort(matches.begin(), matches.end(),
            [&](const Match& a, const Match& b) { return std::abs(a.rho2 - target) < std::abs(b.rho2 - target); });
  for (std::size_t i = 0; i < std::min(show, matches.size()); ++i) {
    const auto& m = matches[i];
    fmt::print("density={:.3f} seed={} rho2={:.6f} edges={}  (random:{}:{:.3f}:{})\n", m.density, m.seed, m.rho2,
               m.edges, agents, m.density, m.seed);
  }
  fmt::print("{} matches\n", matches.size());
  if (!write.empty() && !matches.empty()) {
    std::ofstream out(write);
    hmmgraph::write_edge_list(out, hmmgraph::random_connected_topology(agents, matches[0].density, matches[0].seed));
  }
  return matches.empty() ? 1 : 0;
}
