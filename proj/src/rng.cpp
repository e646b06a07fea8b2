#include "ids/rng.hpp"

#include <cmath>
#include <numeric>

#include "ids/errors.hpp"

namespace ids {

namespace {

constexpr unsigned __int128 kPcgMultiplier =
    (static_cast<unsigned __int128>(0x2360ED051FC65DA4ULL) << 64) | 0x4385DF649FCCF645ULL;

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

unsigned __int128 make128(std::uint64_t hi, std::uint64_t lo) {
  return (static_cast<unsigned __int128>(hi) << 64) | lo;
}

}  // namespace

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Pcg64::Pcg64(std::uint64_t seed) {
  std::uint64_t s0 = mix64(seed);
  std::uint64_t s1 = mix64(s0);
  std::uint64_t s2 = mix64(s1);
  std::uint64_t s3 = mix64(s2);
  *this = Pcg64(make128(s0, s1), make128(s2, s3));
}

Pcg64::Pcg64(unsigned __int128 init_state, unsigned __int128 init_seq) {
  state_ = 0;
  inc_ = (init_seq << 1u) | 1u;
  step();
  state_ += init_state;
  step();
}

void Pcg64::step() { state_ = state_ * kPcgMultiplier + inc_; }

Pcg64::result_type Pcg64::operator()() {
  step();
  auto hi = static_cast<std::uint64_t>(state_ >> 64);
  auto lo = static_cast<std::uint64_t>(state_);
  std::uint64_t xored = hi ^ lo;
  unsigned rot = static_cast<unsigned>(state_ >> 122);
  return (xored >> rot) | (xored << ((64u - rot) & 63u));
}

std::int64_t Pcg64::uniform_int(std::int64_t lo, std::int64_t hi) {
  if (lo > hi) throw DomainError("uniform_int: empty range");
  std::uint64_t range = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo);
  if (range == ~std::uint64_t{0}) return static_cast<std::int64_t>((*this)());
  std::uint64_t span = range + 1;
  unsigned __int128 m = static_cast<unsigned __int128>((*this)()) * span;
  auto low = static_cast<std::uint64_t>(m);
  if (low < span) {
    std::uint64_t threshold = (0 - span) % span;
    while (low < threshold) {
      m = static_cast<unsigned __int128>((*this)()) * span;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(lo) +
                                   static_cast<std::uint64_t>(m >> 64));
}

double Pcg64::uniform01() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

double Pcg64::uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

double Pcg64::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform01() - 1.0;
    v = 2.0 * uniform01() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  double factor = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * factor;
  has_spare_ = true;
  return u * factor;
}

std::uint64_t split_seed(std::uint64_t seed, std::string_view purpose,
                         std::initializer_list<std::uint64_t> indices) {
  std::uint64_t h = kFnvOffset;
  for (unsigned char c : purpose) {
    h ^= c;
    h *= kFnvPrime;
  }
  std::uint64_t acc = mix64(seed ^ mix64(h));
  for (std::uint64_t idx : indices) acc = mix64(acc ^ mix64(idx + 0x632be59bd9b4e019ULL));
  return acc;
}

std::vector<std::size_t> random_permutation(std::size_t n, Pcg64& rng) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  shuffle(perm, rng);
  return perm;
}

std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, Pcg64& rng) {
  if (k > n) throw DomainError("sample_without_replacement: k exceeds n");
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    auto j = static_cast<std::size_t>(
        rng.uniform_int(static_cast<std::int64_t>(i), static_cast<std::int64_t>(n - 1)));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

}  // namespace ids
