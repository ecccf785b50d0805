// rng.hpp
//
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
//
// Seeded randomness used anywhere reproducibility is promised. The
// std::mt19937_64 engine is fully specified by the standard; the
// distributions are not, so we map raw draws ourselves.

#ifndef MTLM_RNG_HPP_
#define MTLM_RNG_HPP_

#include <cstdint>
#include <random>
#include <vector>

namespace mtlm {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t NextU64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double NextUnit() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform in [lo, hi).
  double NextReal(double lo, double hi) {
    return lo + (hi - lo) * NextUnit();
  }

  // Uniform in [0, n). Modulo bias is negligible for the sizes used here
  // and keeps the draw sequence platform-stable.
  std::size_t NextIndex(std::size_t n) {
    return static_cast<std::size_t>(engine_() % n);
  }

  template <typename T>
  void Shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = NextIndex(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace mtlm

#endif  // MTLM_RNG_HPP_
