#pragma once

#include <cmath>
#include <cstdint>

namespace sefar {

/// Counter-based deterministic RNG. The same (seed, stream_id) pair always
/// yields the same draw sequence, independent of platform or standard
/// library, so every stochastic decision in the pipeline can be replayed
/// by re-deriving its stream. Distinct stream ids give independent
/// sequences (splitmix64 increments).
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : state_(mix(mix(seed + 0x9E3779B97F4A7C15ULL) ^ mix(stream_id + 0xBF58476D1CE4E5B9ULL))),
        seed_(seed),
        stream_id_(stream_id) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  /// Child stream; used for per-pass / per-sample fan-out so parallel
  /// evaluation order cannot change results.
  RngStream substream(std::uint64_t k) const {
    return RngStream(seed_, mix(stream_id_ ^ mix(k + 0x94D049BB133111EBULL)));
  }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix(state_);
  }

  /// Uniform in [0, 1).
  double next_uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_uniform(); }

  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t next_below(std::uint64_t n) {
    // Rejection sampling keeps the draw unbiased.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return x % n;
  }

  /// Standard normal via Box-Muller. Consumes exactly two uniforms.
  double next_gaussian() {
    const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
    const double u2 = next_uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t state_;
  std::uint64_t seed_;
  std::uint64_t stream_id_;
};

/// Stream-id tags for every stochastic decision in the pipeline. Derived
/// streams make training bit-reproducible and let reference loops (tests)
/// replay the exact same randomness through the public API.
namespace streams {

constexpr std::uint64_t kDataEnvelope = 0x01;
constexpr std::uint64_t kDataSample = 0x02;
constexpr std::uint64_t kSplit = 0x03;
constexpr std::uint64_t kParamInit = 0x04;
constexpr std::uint64_t kLabeledShuffle = 0x05;
constexpr std::uint64_t kUnlabeledShuffle = 0x06;
constexpr std::uint64_t kTrainPlan = 0x07;
constexpr std::uint64_t kEvalPlan = 0x08;
constexpr std::uint64_t kWeakLabeled = 0x09;
constexpr std::uint64_t kWeakUnlabeled = 0x0A;
constexpr std::uint64_t kDropoutSup = 0x0B;
constexpr std::uint64_t kDropoutStrong = 0x0C;
constexpr std::uint64_t kDropoutMixed = 0x0D;
constexpr std::uint64_t kTeacher = 0x0E;
constexpr std::uint64_t kStrongAug = 0x0F;
constexpr std::uint64_t kMixPairing = 0x10;
constexpr std::uint64_t kMixLambda = 0x11;
constexpr std::uint64_t kProbe = 0x12;

inline std::uint64_t combine(std::uint64_t tag, std::uint64_t a = 0, std::uint64_t b = 0,
                             std::uint64_t c = 0) {
  auto mix = [](std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
  };
  std::uint64_t h = mix(tag + 0x9E3779B97F4A7C15ULL);
  h = mix(h ^ mix(a + 0xA0761D6478BD642FULL));
  h = mix(h ^ mix(b + 0xE7037ED1A0B428DBULL));
  h = mix(h ^ mix(c + 0x8EBC6AF09C88C6E3ULL));
  return h;
}

}  // namespace streams

/// Canonical way to obtain the stream for a tagged decision point.
inline RngStream derive_stream(std::uint64_t seed, std::uint64_t tag, std::uint64_t a = 0,
                               std::uint64_t b = 0, std::uint64_t c = 0) {
  return RngStream(seed, streams::combine(tag, a, b, c));
}

}  // namespace sefar
