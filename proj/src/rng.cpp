#include "corpusgen/rng.hpp"

#include "corpusgen/errors.hpp"

namespace corpusgen {

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t SplitRng::next_below(std::uint64_t n) {
  if (n == 0)
    throw ValidationError("next_below: n must be > 0");
  // rejection sampling on the top bits keeps the draw unbiased
  std::uint64_t limit = ~std::uint64_t{0} - ~std::uint64_t{0} % n;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

SplitRng SplitRng::split(std::string_view tag) const {
  SplitRng mixer(seed_ ^ fnv1a64(tag));
  return SplitRng(mixer.next_u64());
}

SplitRng SplitRng::split(std::string_view tag, std::uint64_t index) const {
  SplitRng mixer(seed_ ^ fnv1a64(tag) ^ (index * 0x2545f4914f6cdd1dULL + 1));
  return SplitRng(mixer.next_u64());
}

} // namespace corpusgen
