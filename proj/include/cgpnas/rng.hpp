#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

namespace cgpnas {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Purposes that get their own random stream, so that consuming numbers for
// one purpose never shifts the sequence seen by another.
enum class Stream : std::uint64_t { init = 1, variation = 2, encode = 3 };

// Seeded generator with portable derived distributions. The standard
// distribution classes are implementation-defined, so uniform reals and
// bounded integers are derived from the raw 64-bit output here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  static Rng child(std::uint64_t root_seed, Stream purpose) {
    std::uint64_t s = root_seed ^ (0xD1B54A32D192ED03ull * static_cast<std::uint64_t>(purpose));
    splitmix64(s);
    return Rng(splitmix64(s));
  }

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). n must be positive.
  std::size_t below(std::size_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below: empty range");
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return static_cast<std::size_t>(x % bound);
  }

  bool bernoulli(double p) { return uniform() < p; }

  std::string state() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
  }

  void restore(const std::string& text) {
    std::istringstream is(text);
    is >> engine_;
    if (!is) throw std::runtime_error("Rng::restore: malformed generator state");
  }

  friend bool operator==(const Rng& a, const Rng& b) { return a.engine_ == b.engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace cgpnas
