#ifndef MASKMEM_RNG_H_
#define MASKMEM_RNG_H_

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace maskmem {

// Seedable generator with named substreams. Every consumer derives its own
// stream from (root seed, name, index), so generation of dialog 17 never
// depends on how many numbers dialog 16 consumed.
class Rng {
 public:
  using Engine = std::mt19937_64;

  explicit Rng(std::uint64_t seed);

  // Independent stream keyed by a name and an index under `root`.
  static Rng stream(std::uint64_t root, std::string_view name,
                    std::uint64_t index = 0);

  // Child stream of this generator's seed; does not advance this generator.
  Rng split(std::string_view name, std::uint64_t index = 0) const;

  std::uint64_t seed() const { return seed_; }
  Engine& engine() { return engine_; }

  // Uniform integer in [0, n). n must be positive.
  std::size_t uniform_index(std::size_t n);
  // Uniform integer in [lo, hi].
  int uniform_int(int lo, int hi);
  double uniform01();
  bool bernoulli(double p);
  double normal(double mean, double stddev);

 private:
  std::uint64_t seed_;
  Engine engine_;
};

std::uint64_t mix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view bytes,
                      std::uint64_t basis = 0xcbf29ce484222325ULL);

}  // namespace maskmem

#endif  // MASKMEM_RNG_H_
