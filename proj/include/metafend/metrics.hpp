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

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "metafend/label.hpp"

namespace metafend {

// Binary confusion counts with "fake" as the positive class.
struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  void add(Label truth, Label predicted);
  std::size_t total() const { return tp + fp + tn + fn; }
  std::size_t correct() const { return tp + tn; }
  double accuracy() const;
  // 0 when there are no true positives (precision or recall undefined/zero).
  double f1() const;

  Confusion& operator+=(const Confusion& other);
};

struct EventMetrics {
  std::string event_id;
  Confusion confusion;
};

struct SeedMetrics {
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  double f1 = 0.0;
};

struct RunMetrics {
  double accuracy = 0.0;
  double f1 = 0.0;
  Confusion pooled;
  std::vector<EventMetrics> events;
  std::vector<SeedMetrics> per_seed;

  static RunMetrics from_events(std::vector<EventMetrics> events);
};

// Mean accuracy/F1 over seeds, with the per-seed list filled in.
RunMetrics combine_seeds(const std::vector<std::pair<std::uint64_t, RunMetrics>>& runs);

double mean(const std::vector<double>& values);
// Sample standard deviation (n - 1); 0 for fewer than two values.
double stddev(const std::vector<double>& values);

// "scope,event,n,correct,accuracy,f1" rows: one per event plus a pooled row.
std::string metrics_csv(const RunMetrics& metrics);
// Structured record (JSON text).
std::string metrics_json(const RunMetrics& metrics);

}  // namespace metafend
