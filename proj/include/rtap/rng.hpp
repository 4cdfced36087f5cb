// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef RTAP_RNG_HPP
#define RTAP_RNG_HPP

#include <cstdint>
#include <initializer_list>
#include <random>

namespace rtap {

// splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent stream from a root seed and a path of stream ids,
// e.g. (seed, target, tree). Parallel workers seeded this way produce the
// same models as a serial run.
inline std::uint64_t derive_seed(std::uint64_t seed,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = mix64(seed);
  for (std::uint64_t id : path) h = mix64(h ^ mix64(id + 0x9e3779b97f4a7c15ULL));
  return h;
}

inline std::mt19937_64 make_rng(std::uint64_t seed,
                                std::initializer_list<std::uint64_t> path = {}) {
  return std::mt19937_64(derive_seed(seed, path));
}

// Fisher-Yates draw of k distinct values from [0, n), returned sorted
// ascending so that split-candidate features are always visited in index
// order (the tie-break contract).
inline std::vector<std::uint32_t> sample_without_replacement(std::uint32_t n,
                                                             std::uint32_t k,
                                                             std::mt19937_64& rng) {
  if (k > n) k = n;
  std::vector<std::uint32_t> pool(n);
  for (std::uint32_t i = 0; i < n; ++i) pool[i] = i;
  for (std::uint32_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::uint32_t> dist(i, n - 1);
    std::swap(pool[i], pool[dist(rng)]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace rtap

#endif  // RTAP_RNG_HPP
