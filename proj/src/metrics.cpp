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

#include "metafend/metrics.hpp"

#include <cmath>
#include <cstdio>

#include "json.hpp"

namespace metafend {

namespace {

std::string fixed6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

void Confusion::add(Label truth, Label predicted) {
  if (truth == Label::kFake) {
    (predicted == Label::kFake ? tp : fn) += 1;
  } else {
    (predicted == Label::kFake ? fp : tn) += 1;
  }
}

double Confusion::accuracy() const {
  return total() == 0 ? 0.0
                      : static_cast<double>(correct()) / static_cast<double>(total());
}

double Confusion::f1() const {
  if (tp == 0) return 0.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

Confusion& Confusion::operator+=(const Confusion& o) {
  tp += o.tp;
  fp += o.fp;
  tn += o.tn;
  fn += o.fn;
  return *this;
}

RunMetrics RunMetrics::from_events(std::vector<EventMetrics> events) {
  RunMetrics m;
  for (const auto& e : events) m.pooled += e.confusion;
  m.accuracy = m.pooled.accuracy();
  m.f1 = m.pooled.f1();
  m.events = std::move(events);
  return m;
}

double mean(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  double total = 0.0;
  for (double v : values) total += v;
  return total / static_cast<double>(values.size());
}

double stddev(const std::vector<double>& values) {
  if (values.size() < 2) return 0.0;
  const double mu = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - mu) * (v - mu);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

RunMetrics combine_seeds(
    const std::vector<std::pair<std::uint64_t, RunMetrics>>& runs) {
  RunMetrics out;
  std::vector<double> acc;
  std::vector<double> f1;
  for (const auto& [seed, m] : runs) {
    out.per_seed.push_back({seed, m.accuracy, m.f1});
    acc.push_back(m.accuracy);
    f1.push_back(m.f1);
    out.pooled += m.pooled;
  }
  out.accuracy = mean(acc);
  out.f1 = mean(f1);
  return out;
}

std::string metrics_csv(const RunMetrics& m) {
  std::string out = "scope,event,n,correct,accuracy,f1\n";
  for (const auto& e : m.events) {
    out += "event," + e.event_id + "," + std::to_string(e.confusion.total()) + "," +
           std::to_string(e.confusion.correct()) + "," +
           fixed6(e.confusion.accuracy()) + "," + fixed6(e.confusion.f1()) + "\n";
  }
  for (const auto& s : m.per_seed) {
    out += "seed," + std::to_string(s.seed) + ",,," + fixed6(s.accuracy) + "," +
           fixed6(s.f1) + "\n";
  }
  out += "pooled,all," + std::to_string(m.pooled.total()) + "," +
         std::to_string(m.pooled.correct()) + "," + fixed6(m.accuracy) + "," +
         fixed6(m.f1) + "\n";
  return out;
}

std::string metrics_json(const RunMetrics& m) {
  nlohmann::ordered_json j;
  j["accuracy"] = m.accuracy;
  j["f1"] = m.f1;
  j["confusion"] = {{"tp", m.pooled.tp}, {"fp", m.pooled.fp},
                    {"tn", m.pooled.tn}, {"fn", m.pooled.fn}};
  j["events"] = nlohmann::ordered_json::array();
  for (const auto& e : m.events) {
    j["events"].push_back({{"event", e.event_id},
                           {"n", e.confusion.total()},
                           {"correct", e.confusion.correct()},
                           {"accuracy", e.confusion.accuracy()},
                           {"f1", e.confusion.f1()}});
  }
  j["per_seed"] = nlohmann::ordered_json::array();
  for (const auto& s : m.per_seed) {
    j["per_seed"].push_back({{"seed", s.seed}, {"accuracy", s.accuracy}, {"f1", s.f1}});
  }
  return j.dump(2) + "\n";
}

}  // namespace metafend
