#include "sugar/core.hpp"

namespace sugar {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : key_(splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL))) {}

Rng::result_type Rng::operator()() {
  return splitmix64(key_ + 0x9e3779b97f4a7c15ULL * (++counter_));
}

double Rng::uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

double Rng::normal() { return gauss_(*this); }

Vec Rng::normal_vec(Index n) {
  Vec v(n);
  for (Index i = 0; i < n; ++i) v[i] = normal();
  return v;
}

Vec Rng::rademacher(Index n) {
  Vec v(n);
  for (Index i = 0; i < n; ++i) v[i] = ((*this)() >> 63) ? 1.0 : -1.0;
  return v;
}

Index Rng::below(Index n) {
  // Rejection sampling keeps the draw unbiased.
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = max() - max() % bound;
  std::uint64_t r;
  do r = (*this)();
  while (r >= limit);
  return static_cast<Index>(r % bound);
}

}  // namespace sugar
