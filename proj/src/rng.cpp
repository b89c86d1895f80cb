#include "mirto/rng.hpp"

namespace mirto {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::size_t Rng::next_index(std::size_t n) {
  // modulo bias is < 2^-50 for the n used here
  return static_cast<std::size_t>(next_u64() % n);
}

double Rng::next_double(double lo, double hi) {
  double unit = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  return lo + unit * (hi - lo);
}

}  // namespace mirto
