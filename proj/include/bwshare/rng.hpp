#pragma once

#include <cstdint>
#include <random>

namespace bwshare {

/// Purpose tags for named random-number streams. Each (purpose, route)
/// pair owns an independent stream derived from the master seed, so
/// replications and variance-reduction schemes can rely on reproducible,
/// non-overlapping randomness.
enum class StreamPurpose : std::uint64_t {
  Interarrival = 1,
  DocumentSize = 2,
  InitialSize = 3,
  Replication = 4,
  Generic = 5,
};

namespace detail {

// SplitMix64 finalizer (Steele, Lea, Flood 2014). Used only to derive
// per-stream seeds; the streams themselves are mt19937_64.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Stream-seed derivation: three chained SplitMix64 rounds over
/// (master, purpose, key1, key2). Documented so traces can be reproduced
/// outside this codebase.
inline std::uint64_t derive_stream_seed(std::uint64_t master, StreamPurpose purpose,
                                        std::uint64_t key1 = 0, std::uint64_t key2 = 0) {
  std::uint64_t s = detail::splitmix64(master ^ 0xA0761D6478BD642FULL);
  s = detail::splitmix64(s ^ (static_cast<std::uint64_t>(purpose) * 0xE7037ED1A0B428DBULL));
  s = detail::splitmix64(s ^ (key1 * 0x8EBC6AF09C88C6E3ULL));
  s = detail::splitmix64(s ^ (key2 * 0x589965CC75374CC3ULL));
  return s;
}

/// A deterministic uniform stream. Not shared across workers; each
/// consumer owns its stream by value.
class RngStream {
 public:
  RngStream() : engine_(0) {}
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  RngStream(std::uint64_t master, StreamPurpose purpose, std::uint64_t key1 = 0,
            std::uint64_t key2 = 0)
      : engine_(derive_stream_seed(master, purpose, key1, key2)) {}

  /// Uniform double in [0, 1) with 53 random bits. Implemented directly
  /// from the raw engine output so results are identical across standard
  /// library implementations.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace bwshare
