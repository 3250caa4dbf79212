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

#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace metafend {

using Rng = std::mt19937_64;

// 64-bit FNV-1a. Stable across platforms; used for fingerprints, episode
// hashes and for turning purpose labels into seed material.
std::uint64_t fnv1a64(std::string_view bytes,
                      std::uint64_t hash = 0xcbf29ce484222325ULL);

// Independent stream for one purpose ("data", "noise", "init", ...) under a
// run seed, optionally further keyed by indices such as (epoch, episode).
// Streams depend only on their key, never on the order they are created in.
Rng derive_rng(std::uint64_t seed, std::string_view purpose,
               std::initializer_list<std::uint64_t> indices = {});

double uniform01(Rng& rng);
double standard_normal(Rng& rng);

}  // namespace metafend
