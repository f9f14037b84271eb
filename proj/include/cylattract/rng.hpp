#pragma once

#include <cstdint>

namespace cylattract {

// Stateless counter-based generator. Every draw is a pure function of
// (seed, stream, counter), so substreams are independent of thread
// scheduling and results are bit-reproducible under any parallel order.
inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

inline std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t stream,
                                  std::uint64_t ctr) {
  std::uint64_t z = mix64(seed + 0x9e3779b97f4a7c15ULL);
  z = mix64(z ^ (stream + 0xd1b54a32d192ed03ULL));
  z = mix64(z ^ (ctr + 0x8cb92ba72f3d8dd7ULL));
  return z;
}

struct CounterRng {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  std::uint64_t raw(std::uint64_t ctr) const {
    return counter_hash(seed, stream, ctr);
  }
  // uniform in [0,1) with 53 random bits
  double uniform01(std::uint64_t ctr) const {
    return static_cast<double>(raw(ctr) >> 11) * 0x1.0p-53;
  }
  double uniform(std::uint64_t ctr, double lo, double hi) const {
    return lo + (hi - lo) * uniform01(ctr);
  }
  std::uint32_t nibble(std::uint64_t ctr) const {
    return static_cast<std::uint32_t>(raw(ctr) & 0xF);
  }
};

// Stream-id layout. Keeping all ids in one place guarantees distinct
// substreams across modules for a fixed user seed.
namespace streams {
constexpr std::uint64_t kOrbitBase = 0;            // + sample index
constexpr std::uint64_t kPerturb = 1ULL << 32;     // + perturbation index
constexpr std::uint64_t kCurve = 2ULL << 32;       // + curve index
constexpr std::uint64_t kNetProbe = 3ULL << 32;    // net-property sampling
constexpr std::uint64_t kTorusProbe = 4ULL << 32;  // embedding checks
}  // namespace streams

// Counter layout inside one orbit stream.
namespace counters {
constexpr std::uint64_t kY0 = 0;
constexpr std::uint64_t kTheta0 = 1;
constexpr std::uint64_t kStepBase = 16;  // + step index
}  // namespace counters

}  // namespace cylattract
