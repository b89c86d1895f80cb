#pragma once

#include <cstdint>
#include <random>

namespace mirto {

std::uint64_t splitmix64(std::uint64_t x);

// Deterministic generator with a platform-independent mapping from raw draws
// to indices and reals (std distributions are not bit-stable across
// implementations, traces must replay exactly).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  virtual ~Rng() = default;

  virtual std::uint64_t next_u64() { return gen_(); }

  virtual std::size_t next_index(std::size_t n);            // uniform 0..n-1
  virtual double next_double(double lo, double hi);         // uniform [lo,hi)

 private:
  std::mt19937_64 gen_;
};

// Flips every binary choice of the wrapped generator; rotation-direction
// symmetry tests drive a run with this and expect a mirrored trajectory.
class MirroredRng : public Rng {
 public:
  explicit MirroredRng(Rng& inner) : Rng(0), inner_(inner) {}
  std::uint64_t next_u64() override { return inner_.next_u64(); }
  std::size_t next_index(std::size_t n) override {
    std::size_t i = inner_.next_index(n);
    return n == 2 ? 1 - i : i;
  }
  double next_double(double lo, double hi) override {
    return inner_.next_double(lo, hi);
  }

 private:
  Rng& inner_;
};

}  // namespace mirto
