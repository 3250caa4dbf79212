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

#include <filesystem>
#include <string>
#include <vector>

#include "metafend/model_config.hpp"
#include "metafend/param_set.hpp"

namespace metafend {

// Everything needed to rebuild a model from disk.
struct Checkpoint {
  ModelConfig model;
  Mode mode = Mode::kMetafend;
  std::vector<std::string> vocab;  // token list, reserved entries included
  ParamSet params;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Little-endian binary layout:
//   "MFNDCKPT", u32 version, u32 n + n bytes of JSON metadata,
//   u32 tensor count, then per tensor (name order):
//   u32 n + name, u32 rank, rank x u64 dims, f64 values.
std::string encode_checkpoint(const Checkpoint& checkpoint);
Checkpoint decode_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace metafend
