#pragma once

#include <span>

namespace hmmgraph {

class Belief;

/// D_KL(p || q) = sum p log(p / q), with 0 log 0 = 0. Computed from the
/// log-domain weights. Throws std::domain_error when q vanishes where p does
/// not.
double kl_divergence(const Belief& p, const Belief& q);

/// Same for plain probability vectors.
double kl_divergence(std::span<const double> p, std::span<const double> q);

/// Half the l1 distance between two distributions.
double total_variation(std::span<const double> p, std::span<const double> q);

}  // namespace hmmgraph
