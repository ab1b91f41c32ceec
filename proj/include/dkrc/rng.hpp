#pragma once

#include <cstdint>
#include <random>

namespace dkrc {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent child seeds from a root
// seed and a stream counter.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) {
  return mix_seed(root ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

// Named streams so that e.g. the network init and the data shuffler never
// share randomness even when they are handed the same root seed.
enum class SeedStream : std::uint64_t {
  Collect = 1,
  Split = 2,
  NetInit = 3,
  Shuffle = 4,
  ModelInit = 5,
  Games = 6,
};

inline std::uint64_t derive_seed(std::uint64_t root, SeedStream stream,
                                 std::uint64_t index = 0) {
  return derive_seed(derive_seed(root, static_cast<std::uint64_t>(stream)),
                     index);
}

}  // namespace dkrc
