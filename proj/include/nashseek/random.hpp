#pragma once

#include <cstdint>
#include <random>

namespace nashseek {

/// Seeded uniform generator whose draws are identical on every platform.
///
/// std::mt19937_64's output sequence is fixed by the standard, but the
/// standard distributions are not, so the mapping to [lo, hi) is done here:
/// the top 53 bits of each engine output form a double in [0, 1).
class PortableRng {
public:
  explicit PortableRng(std::uint64_t seed) : engine_(seed) {}

  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

private:
  std::mt19937_64 engine_;
};

}  // namespace nashseek
