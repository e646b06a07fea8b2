#pragma once

#include <cstdint>
#include <initializer_list>
#include <string_view>
#include <vector>

namespace ids {

/// PCG64 (XSL-RR 128/64) generator. Every stochastic operation in the toolkit
/// draws from one of these, seeded explicitly, so experiments replay exactly.
///
/// Seeding follows the reference `pcg_setseq_128_srandom_r`: a 64-bit seed is
/// expanded to a 128-bit initial state and a 128-bit stream selector with
/// SplitMix64.
class Pcg64 {
 public:
  using result_type = std::uint64_t;

  explicit Pcg64(std::uint64_t seed);
  Pcg64(unsigned __int128 init_state, unsigned __int128 init_seq);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()();

  /// Uniform integer in the inclusive range [lo, hi] (unbiased, Lemire rejection).
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01();
  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi);
  /// Standard normal via the Marsaglia polar method.
  double normal();

 private:
  void step();

  unsigned __int128 state_ = 0;
  unsigned __int128 inc_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Derives an independent stream seed from (seed, purpose, indices...).
/// Hashes the purpose string with FNV-1a and folds every component through
/// SplitMix64, so `split(s, "run", k)` never depends on how many other runs exist.
std::uint64_t split_seed(std::uint64_t seed, std::string_view purpose,
                         std::initializer_list<std::uint64_t> indices = {});

/// Fisher-Yates shuffle driven by `rng`; identical seeds give identical orders.
template <typename T>
void shuffle(std::vector<T>& v, Pcg64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i - 1)));
    std::swap(v[i - 1], v[j]);
  }
}

/// Identity permutation 0..n-1 shuffled by `rng`.
std::vector<std::size_t> random_permutation(std::size_t n, Pcg64& rng);

/// `k` distinct indices from [0, n) in sampling order (partial Fisher-Yates).
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, Pcg64& rng);

}  // namespace ids
