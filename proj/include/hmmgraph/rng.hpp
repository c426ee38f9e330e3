#pragma once

#include <cstdint>
#include <random>

namespace hmmgraph {

/// What a random stream is used for. Together with the base seed, run index
/// and an auxiliary index (e.g. the agent) it pins every draw of an
/// experiment, so paired sweeps see identical chains and observations.
enum class StreamPurpose : std::uint64_t {
  kChain = 1,
  kObservation = 2,
  kBoundEstimation = 3,
  kTopology = 4,
};

struct StreamKey {
  std::uint64_t base_seed = 0;
  std::uint64_t run = 0;
  StreamPurpose purpose = StreamPurpose::kChain;
  std::uint64_t index = 0;
};

/// Mixes a stream key into a 64-bit seed (splitmix64 finalizer chained over
/// the key fields).
std::uint64_t derive_seed(const StreamKey& key);

/// 64-bit Mersenne twister with a platform-independent uniform double.
/// std::uniform_real_distribution is implementation-defined, which would
/// break byte-for-byte replay across standard libraries.
class Rng {
 public:
  using result_type = std::mt19937_64::result_type;

  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  explicit Rng(const StreamKey& key) : engine_(derive_seed(key)) {}

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
};

}  // namespace hmmgraph
