// Copyright 2026 The metafend Authors. All Rights Reserved.
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

#include "metafend/rng.hpp"

#include <vector>

namespace metafend {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t hash) {
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

Rng derive_rng(std::uint64_t seed, std::string_view purpose,
               std::initializer_list<std::uint64_t> indices) {
  const std::uint64_t tag = fnv1a64(purpose);
  std::vector<std::uint32_t> material{
      static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
      static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(tag >> 32)};
  for (std::uint64_t idx : indices) {
    material.push_back(static_cast<std::uint32_t>(idx));
    material.push_back(static_cast<std::uint32_t>(idx >> 32));
  }
  std::seed_seq seq(material.begin(), material.end());
  return Rng(seq);
}

double uniform01(Rng& rng) {
  // 53 random bits -> [0, 1).
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double standard_normal(Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

}  // namespace metafend
