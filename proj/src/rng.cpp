#include "ope/rng.hpp"

#include <cmath>
#include <vector>

namespace ope {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_index)
    : seed_(seed), stream_index_(stream_index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream_index),
                    static_cast<std::uint32_t>(stream_index >> 32), 0x6f70u};
  engine_.seed(seq);
}

double RngStream::uniform() {
  // 53 random bits, shifted by half an ulp so that 0 is never returned.
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() { return normal_(engine_); }

double RngStream::gamma(double shape) {
  std::gamma_distribution<double> g(shape, 1.0);
  return g(engine_);
}

double RngStream::chi(double dof) { return std::sqrt(2.0 * gamma(0.5 * dof)); }

RngStream RngStream::substream(std::uint64_t child) const {
  return RngStream(seed_, splitmix64(stream_index_ ^ splitmix64(child + 1)));
}

}  // namespace ope
