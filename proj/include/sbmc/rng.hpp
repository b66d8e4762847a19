#pragma once

#include <cstdint>
#include <limits>

namespace sbmc {

// Counter-based 64-bit generator (SplitMix64). The whole state is one word, so
// a stream can be derived cheaply from any key: per-node streams in a tree and
// per-replica streams in a Monte Carlo loop are both keyed this way, which
// makes results independent of traversal or scheduling order.
//
// Satisfies UniformRandomBitGenerator, so it plugs into <random> distributions.
class Stream {
 public:
  using result_type = std::uint64_t;

  explicit Stream(std::uint64_t key) : state_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return finalize(state_);
  }

  static constexpr std::uint64_t finalize(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

// Key of child `index` (or substream `index`) under `parent`.
constexpr std::uint64_t derive_key(std::uint64_t parent, std::uint64_t index) {
  return Stream::finalize(parent ^ Stream::finalize(index + 0x632be59bd9b4e019ULL));
}

// Uniform on the open interval (0, 1).
double open_uniform(Stream& rng);

// Exp(1) draw.
double unit_exponential(Stream& rng);

// Named substreams used across modules; keeping them distinct avoids
// accidental reuse of the same randomness for two purposes.
namespace substream {
inline constexpr std::uint64_t kLifetime = 1;
inline constexpr std::uint64_t kOffspring = 2;
inline constexpr std::uint64_t kReplica = 3;
inline constexpr std::uint64_t kPool = 4;
}  // namespace substream

}  // namespace sbmc
