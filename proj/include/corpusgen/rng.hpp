#ifndef CORPUSGEN_RNG_HPP
#define CORPUSGEN_RNG_HPP

#include <cstdint>
#include <string_view>
#include <vector>

namespace corpusgen {

// Deterministic, platform-stable random stream (splitmix64 core).
//
// The standard <random> engines are portable but the distributions are
// not, and every corpus, model and pipeline artifact must be
// byte-reproducible from one root seed. All randomness in the toolkit
// flows through this class; child streams are derived from the parent's
// initial seed plus a tag, never from its consumption state.
class SplitRng {
public:
  explicit SplitRng(std::uint64_t seed) : seed_(seed), state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // [0, 1) with 53-bit resolution.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  // Unbiased integer in [0, n). n must be > 0.
  std::uint64_t next_below(std::uint64_t n);

  // Deterministic child stream; independent of draws made so far.
  SplitRng split(std::string_view tag) const;
  SplitRng split(std::string_view tag, std::uint64_t index) const;

  // In-place Fisher-Yates; std::shuffle's draw pattern is
  // implementation-defined so it is not used anywhere.
  template <typename T> void shuffle(std::vector<T> &v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(next_below(i));
      using std::swap;
      swap(v[i - 1], v[j]);
    }
  }

  std::uint64_t seed() const { return seed_; }

private:
  std::uint64_t seed_;
  std::uint64_t state_;
};

std::uint64_t fnv1a64(std::string_view s);

} // namespace corpusgen

#endif
