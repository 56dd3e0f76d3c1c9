#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace qdim {

// Error taxonomy mirrored by the CLI exit codes: validation -> 1,
// numeric -> 2, resource -> 3.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ResourceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Interval {
  double lo = 0.0;
  double hi = 1.0;

  double length() const { return hi - lo; }
  double midpoint() const { return 0.5 * (lo + hi); }
  bool contains(double x, double tol = 0.0) const {
    return x >= lo - tol && x <= hi + tol;
  }
  bool contains_open(double x) const { return x > lo && x < hi; }
  bool operator==(const Interval&) const = default;
};

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// All randomness flows from one config seed; subsystems derive their own
// stream by mixing in a fixed index so parallel order never matters.
enum class SeedStream : std::uint64_t {
  chaos_game = 1,
  lloyd = 2,
  distortion_subsample = 3,
  triple_sampling = 4,
};

inline std::uint64_t derive_seed(std::uint64_t seed, SeedStream stream) {
  std::uint64_t s = seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(stream));
  splitmix64(s);
  return splitmix64(s);
}

// Minimal deterministic generator (identical output on every platform).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() { return splitmix64(state_); }

  double uniform() {  // in [0, 1)
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  std::size_t index(std::size_t n) {  // in [0, n)
    return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
  }

 private:
  std::uint64_t state_;
};

}  // namespace qdim
