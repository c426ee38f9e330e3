#include "hmmgraph/io.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <openssl/evp.h>

namespace hmmgraph {

namespace {

std::string optional_real(double v) { return std::isnan(v) ? std::string() : format_real(v); }

std::string to_hex(const unsigned char* data, unsigned int len) {
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", data[i]);
  return out;
}

const char* kind_label(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::kCentralized: return "centralized";
    case StrategyKind::kDiffusion: return "diffusion";
    case StrategyKind::kAsl: return "asl";
  }
  return "?";
}

}  // namespace

std::string format_real(double value) { return fmt::format("{:.17g}", value); }

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 computation failed");
  }
  return to_hex(digest.data(), len);
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("cannot read '{}'", path.string()));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return sha256_hex(buffer.str());
}

void write_beliefs_csv(std::ostream& out, const std::vector<FilterHistory>& histories) {
  out << "time,agent,strategy,hypothesis,belief\n";
  if (histories.empty()) return;
  const std::size_t steps = histories.front().beliefs.size();
  for (std::size_t i = 0; i < steps; ++i) {
    for (const auto& h : histories) {
      const auto& state = h.beliefs.at(i);
      const bool central = h.kind == StrategyKind::kCentralized;
      for (std::size_t k = 0; k < state.agents.size(); ++k) {
        const Eigen::VectorXd p = state.agents[k].probabilities();
        const std::string agent = central ? std::string("-1") : std::to_string(k);
        for (Eigen::Index theta = 0; theta < p.size(); ++theta) {
          out << i << ',' << agent << ',' << h.name << ',' << theta << ',' << format_real(p(theta)) << '\n';
        }
      }
    }
  }
}

std::vector<BeliefRow> read_beliefs_csv(std::istream& in) {
  std::vector<BeliefRow> rows;
  std::string line;
  if (!std::getline(in, line) || line != "time,agent,strategy,hypothesis,belief") {
    throw std::invalid_argument("beliefs CSV: unexpected header");
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string time, agent, strategy, hypothesis, belief;
    if (!std::getline(fields, time, ',') || !std::getline(fields, agent, ',') || !std::getline(fields, strategy, ',') ||
        !std::getline(fields, hypothesis, ',') || !std::getline(fields, belief)) {
      throw std::invalid_argument(fmt::format("beliefs CSV line {}: expected five fields", line_no));
    }
    BeliefRow row;
    row.time = std::stoul(time);
    row.agent = std::stol(agent);
    row.strategy = strategy;
    row.hypothesis = std::stoul(hypothesis);
    row.belief = std::stod(belief);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_risks_csv(std::ostream& out, const std::vector<StrategyOutcome>& strategies) {
  out << "strategy,time,agent,J_mean,J_stderr,Jtilde_mean,Jtilde_stderr\n";
  for (const auto& s : strategies) {
    const RiskTrace& r = s.risk;
    for (std::size_t i = 0; i < r.horizon(); ++i) {
      for (std::size_t k = 0; k < r.num_agents(); ++k) {
        const auto row = static_cast<Eigen::Index>(i);
        const auto col = static_cast<Eigen::Index>(k);
        out << s.name << ',' << (i + 1) << ',' << k << ',' << format_real(r.j_mean(row, col)) << ','
            << optional_real(r.j_stderr(row, col)) << ',';
        if (r.has_prior()) {
          out << format_real(r.jt_mean(row, col)) << ',' << optional_real(r.jt_stderr(row, col));
        } else {
          out << ',';
        }
        out << '\n';
      }
    }
  }
}

void write_summary_csv(std::ostream& out, const ExperimentResult& result) {
  out << "topology,agents,rho2,strategy,kind,gamma,delta,runs,window_first,window_last,"
         "J_asymptotic,J_asymptotic_stderr,Jtilde_asymptotic,Jtilde_asymptotic_stderr,"
         "lambda,kappa,posterior_bound,prior_bound,corollary_min_empirical,corollary_theoretical_p,corollary_ok\n";
  for (const auto& t : result.topologies) {
    for (const auto& s : t.strategies) {
      const RiskTrace& r = s.risk;
      out << t.name << ',' << t.num_agents << ',' << format_real(t.rho2) << ',' << s.name << ','
          << kind_label(s.kind) << ',' << (s.kind == StrategyKind::kDiffusion ? format_real(s.gamma) : "") << ','
          << (s.kind == StrategyKind::kAsl ? format_real(s.delta) : "") << ',' << r.runs << ',' << r.window.first
          << ',' << r.window.last << ',' << format_real(r.asymptotic_j) << ','
          << optional_real(r.asymptotic_j_stderr) << ',' << (r.has_prior() ? optional_real(r.asymptotic_jt) : "")
          << ',' << (r.has_prior() ? optional_real(r.asymptotic_jt_stderr) : "") << ',';
      if (s.bound) {
        out << format_real(s.bound->lambda) << ',' << format_real(s.bound->kappa) << ','
            << format_real(s.bound->posterior_bound) << ',' << format_real(s.bound->prior_bound) << ',';
      } else {
        out << ",,,,";
      }
      if (s.corollary && !s.corollary->agents.empty()) {
        double min_emp = 1.0;
        double p = 1.0;
        for (const auto& a : s.corollary->agents) {
          min_emp = std::min(min_emp, a.empirical_fraction);
          p = std::min(p, a.theoretical_p);
        }
        out << format_real(min_emp) << ',' << format_real(p) << ',' << (s.corollary->all_satisfied() ? "1" : "0");
      } else {
        out << ",,";
      }
      out << '\n';
    }
  }
}

void write_bounds_text(std::ostream& out, const ExperimentResult& result) {
  out << "experiment = " << result.name << '\n';
  out << "kappa = " << format_real(result.kappa) << '\n';
  for (const auto& note : result.notes) out << "note = " << note << '\n';
  for (const auto& t : result.topologies) {
    for (const auto& s : t.strategies) {
      if (!s.bound) continue;
      const std::string prefix = t.name + "." + s.name + ".";
      write_bound(out, *s.bound, prefix);
      out << prefix << "empirical_J_asymptotic = " << format_real(s.risk.asymptotic_j) << '\n';
      out << prefix << "empirical_Jtilde_asymptotic = " << format_real(s.risk.asymptotic_jt) << '\n';
    }
  }
}

void write_trajectory_csv(std::ostream& out, const StateTrajectory& trajectory) {
  out << "time,state\n";
  for (std::size_t i = 0; i < trajectory.size(); ++i) out << (i + 1) << ',' << trajectory[i] << '\n';
}

}  // namespace hmmgraph
