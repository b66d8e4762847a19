#include "sbmc/rng.hpp"

#include <cmath>

namespace sbmc {

double open_uniform(Stream& rng) {
  // 52 random bits offset by half a step: exactly representable, never 0 or 1.
  return (static_cast<double>(rng() >> 12) + 0.5) * 0x1.0p-52;
}

double unit_exponential(Stream& rng) { return -std::log(open_uniform(rng)); }

}  // namespace sbmc
