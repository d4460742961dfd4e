#pragma once

#include <cstdint>
#include <random>

namespace ppa {

using Rng = std::mt19937_64;

// Named sub-streams of one master seed. Item draws, price draws and
// strategy-internal coin flips come from independent streams so that
// swapping the strategy never perturbs the item/price path.
enum class Stream : std::uint64_t {
  items = 1,
  prices = 2,
  strategy = 3,
  oracle = 4,
  estimator = 5,
};

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, Stream stream,
                                 std::uint64_t salt = 0) {
  std::uint64_t s = splitmix64(master);
  s = splitmix64(s ^ (static_cast<std::uint64_t>(stream) * 0xd1342543de82ef95ULL));
  return splitmix64(s ^ salt);
}

inline Rng make_rng(std::uint64_t master, Stream stream, std::uint64_t salt = 0) {
  return Rng(derive_seed(master, stream, salt));
}

}  // namespace ppa
