#pragma once

#include <cstdint>
#include <random>

namespace ope {

/// Seeded random stream. Identical (seed, stream_index) pairs reproduce identical
/// draws on one build; distinct stream indices are used for parallel replicas.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream_index = 0);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_index() const noexcept { return stream_index_; }

  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  /// Gamma(shape, 1).
  double gamma(double shape);
  /// Chi distribution with `dof` degrees of freedom.
  double chi(double dof);
  std::uint64_t next_u64() { return engine_(); }

  /// Independent child stream, deterministic in (seed, stream_index, child).
  RngStream substream(std::uint64_t child) const;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_index_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

}  // namespace ope
