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

// Acceptance suite. One PASS/FAIL line per criterion, exit 1 if any fail.
// argv[1] is the path of the metafend executable.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <utility>
#include <vector>

#include "metafend/aggregator.hpp"
#include "metafend/case_study.hpp"
#include "metafend/data.hpp"
#include "metafend/experiment.hpp"
#include "metafend/meta.hpp"

using namespace metafend;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

std::string g_exe;
int g_failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS" : "FAIL") << " criterion " << id << " " << name << ": " << detail
            << std::endl;
  if (!ok) ++g_failures;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int shell(const std::string& args) {
  const std::string cmd = "\"" + g_exe + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  if (status == -1) return -1;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("metafend-acceptance-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// 1 -------------------------------------------------------------------------

void gradient_correctness() {
  const auto t0 = Clock::now();
  const int code = shell("gradcheck");
  const double s = seconds_since(t0);
  report(1, "gradient correctness", code == 0 && s < 60.0,
         "gradcheck exit " + std::to_string(code) + " in " + fmt(s, 1) + " s");
}

// 2 -------------------------------------------------------------------------

void gumbel_distribution() {
  const std::vector<double> probs{0.5, 0.3, 0.2};
  const int draws = 10000;
  Rng rng = derive_rng(2024, "eval", {2});
  std::array<double, 3> counts{};
  int one_hot = 0;
  for (int i = 0; i < draws; ++i) {
    ad::Graph g;
    const auto a = g.constant(Tensor::row(probs));
    const auto noise = aggregate::draw_gumbel_noise(rng, 3);
    const auto s = aggregate::gumbel_st_sample(g, a, 1.0, noise);
    int ones = 0, zeros = 0;
    for (double v : g.value(s.hard).data()) {
      ones += v == 1.0;
      zeros += v == 0.0;
    }
    one_hot += ones == 1 && zeros == 2;
    counts[s.selected] += 1.0;
  }
  double chi2 = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double expected = probs[i] * draws;
    chi2 += (counts[i] - expected) * (counts[i] - expected) / expected;
  }
  // two degrees of freedom: the survival function is exp(-x/2)
  const double p = std::exp(-chi2 / 2.0);
  report(2, "gumbel straight-through draws", p > 0.01 && one_hot == draws,
         "chi2 " + fmt(chi2) + " p " + fmt(p) + ", one-hot " + std::to_string(one_hot) + "/" +
             std::to_string(draws));
}

// 3 -------------------------------------------------------------------------

void leave_one_out() {
  bool ok = true;
  for (std::size_t k : {2u, 5u, 10u}) {
    const auto splits = leave_one_out_splits(k);
    ok = ok && splits.size() == k;
    std::set<std::size_t> targets;
    for (const auto& s : splits) {
      std::set<std::size_t> ctx(s.context.begin(), s.context.end());
      ok = ok && s.context.size() == k - 1 && ctx.size() == k - 1 && !ctx.count(s.target);
      for (std::size_t c : ctx) ok = ok && c < k;
      targets.insert(s.target);
    }
    ok = ok && targets.size() == k && *targets.rbegin() == k - 1;
  }
  report(3, "leave-one-out structure", ok, "K in {2, 5, 10}");
}

// 4 -------------------------------------------------------------------------

// Logistic regression in disguise: the text path is switched off, the visual
// and fusion layers pass positive inputs through unchanged, and maml mode with
// the two-way head leaves logits = x W + b.
struct ConvexToy {
  ModelConfig model;
  ParamSet params;
  std::vector<Example> support;
};

ConvexToy convex_toy(std::uint64_t seed) {
  ConvexToy t;
  ModelConfig& c = t.model;
  c.vocab_size = 2;
  c.emb_dim = 2;
  c.n_filters = 1;
  c.max_window = 1;
  c.max_len = 1;
  c.feature_dim = 3;
  c.dim = 3;
  c.visual_dim = 3;
  c.head = HeadKind::kBinary;
  Rng rng = derive_rng(seed, "init", {4});
  t.params = init_params(c, rng);

  Tensor eye3({3, 3});
  for (std::size_t i = 0; i < 3; ++i) eye3(i, i) = 1.0;
  Tensor fuse({6, 3});
  for (std::size_t i = 0; i < 3; ++i) fuse(3 + i, i) = 1.0;
  t.params = t.params.with(pname::conv_bias(1), Tensor::row({-10.0}))
                 .with(pname::kTextProjB, Tensor::row({-1.0, -1.0, -1.0}))
                 .with(pname::kVisualProjW, eye3)
                 .with(pname::kVisualProjB, Tensor::zeros({1, 3}))
                 .with(pname::kFuseW, fuse)
                 .with(pname::kFuseB, Tensor::zeros({1, 3}));

  Rng data = derive_rng(seed, "synth", {4});
  std::uniform_real_distribution<double> u(0.2, 1.5);
  for (std::size_t i = 0; i < 5; ++i) {
    Example ex;
    ex.id = "toy" + std::to_string(i);
    ex.tokens = {0};
    ex.visual = std::vector<double>{u(data), u(data), u(data)};
    ex.label = (*ex.visual)[0] > (*ex.visual)[1] ? Label::kFake : Label::kReal;
    t.support.push_back(std::move(ex));
  }
  return t;
}

double toy_loss(const ConvexToy& t, const ParamSet& p) {
  return support_loss_grad(p, t.model, Mode::kMaml, t.support, {1.0, nullptr}).loss;
}

void adaptation_efficacy() {
  bool ok = true;
  std::string detail;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const ConvexToy t = convex_toy(seed);
    TrainConfig cfg;
    cfg.mode = Mode::kMaml;
    cfg.inner_lr = 0.1;
    cfg.inner_steps = 1;
    const double before = toy_loss(t, t.params);
    const double after = toy_loss(t, adapt(t.params, t.model, cfg, t.support, 1.0, nullptr));
    ok = ok && after < before;
    detail += (seed ? ", " : "") + fmt(before) + "->" + fmt(after);
  }
  report(4, "adaptation lowers the support loss", ok, detail);
}

// 5, 6 ----------------------------------------------------------------------

constexpr int kSeeds = 5;
constexpr int kBenchEpochs = 150;
constexpr double kBenchOuterLr = 0.01;

// metafend minus each learned baseline, mean accuracy, from the first run.
const std::map<Mode, double> kPinnedMargins{
    {Mode::kSoftAttn, 0.0242},
    {Mode::kCnpMean, 0.1452},
    {Mode::kMaml, 0.0137},
};
constexpr double kMarginTolerance = 0.02;

double benchmark_accuracy(Mode mode, std::uint64_t seed, int epochs) {
  SynthConfig sc;
  sc.seed = seed;
  const Experiment ex = prepare_experiment(synth_generate(sc), ModelConfig{}, mode, 0);
  TrainConfig tc;
  tc.mode = mode;
  tc.seed = seed;
  tc.epochs = epochs;
  tc.outer_lr = kBenchOuterLr;
  return run_experiment(ex, tc).metrics.accuracy;
}

double mean_accuracy(Mode mode, int epochs) {
  double total = 0.0;
  for (int s = 0; s < kSeeds; ++s) {
    total += benchmark_accuracy(mode, static_cast<std::uint64_t>(s), epochs);
  }
  return total / kSeeds;
}

void benchmark() {
  const auto t0 = Clock::now();
  std::map<Mode, double> acc;
  for (Mode m : {Mode::kMetafend, Mode::kSoftAttn, Mode::kCnpMean, Mode::kMaml}) {
    acc[m] = mean_accuracy(m, kBenchEpochs);
    std::cout << "  " << mode_name(m) << " mean accuracy " << fmt(acc[m]) << std::endl;
  }
  const double untrained = mean_accuracy(Mode::kMetafend, 0);
  const double s = seconds_since(t0);
  std::cout << "  untrained metafend mean accuracy " << fmt(untrained) << std::endl;

  const double top = acc[Mode::kMetafend];
  bool ok = s < 600.0 && top - untrained >= 0.15;
  std::string detail = "vs untrained +" + fmt(100 * (top - untrained), 1) + " pts";
  for (const auto& [m, pinned] : kPinnedMargins) {
    const double margin = top - acc[m];
    ok = ok && margin > 0.0 && std::abs(margin - pinned) <= kMarginTolerance;
    detail += ", vs " + std::string(mode_name(m)) + " " + fmt(margin) + " (pinned " +
              fmt(pinned) + ")";
  }
  detail += ", " + fmt(s, 0) + " s";
  report(5, "synthetic benchmark ordering", ok, detail);

  const double binary = mean_accuracy(Mode::kBinaryHead, kBenchEpochs);
  report(6, "label embedding vs two-way head", top >= binary,
         "metafend " + fmt(top) + " binary-head " + fmt(binary));
}

// 7 -------------------------------------------------------------------------

void case_study() {
  const int code = shell("casestudy --epochs 0");
  const Episode ep = case_study_episode();
  const FixtureGeometry geo = fixture_geometry(ep);
  const CaseStudyReport rep = run_case_study(0, 0);
  const bool hard_picks_fake = ep.support[geo.argmax].label == Label::kFake;
  const bool soft_near_reals = geo.distance_to_real_mean < geo.distance_to_fake;
  const bool hard_right = rep.reference_hard.predicted == Label::kFake;
  report(7, "case study", code == 0 && hard_picks_fake && soft_near_reals && hard_right,
         "exit " + std::to_string(code) + ", top weight on fake " + (hard_picks_fake ? "yes" : "no") +
             ", soft context to real mean " + fmt(geo.distance_to_real_mean) + " vs fake " +
             fmt(geo.distance_to_fake) + ", hard prediction " +
             (hard_right ? "fake" : "real"));
}

// 8 -------------------------------------------------------------------------

void determinism() {
  const std::string common =
      "train --synth --synth-events 10 --synth-posts 22 --synth-seed 5 --epochs 3 "
      "--meta-batch 4 --outer-lr 0.01 --seed 11 --quiet --out-dir ";
  const fs::path a = fresh_dir("det-a");
  const fs::path b = fresh_dir("det-b");
  const int ca = shell(common + "\"" + a.string() + "\"");
  const int cb = shell(common + "\"" + b.string() + "\"");
  bool same = ca == 0 && cb == 0;
  for (const char* f : {"checkpoint.bin", "metrics.csv", "metrics.json"}) {
    const std::string x = slurp(a / f);
    same = same && !x.empty() && x == slurp(b / f);
  }
  report(8, "determinism", same, "checkpoint.bin, metrics.csv, metrics.json byte-identical");
  fs::remove_all(a);
  fs::remove_all(b);
}

// 9 -------------------------------------------------------------------------

void temperature_endpoints() {
  bool ok = true;
  std::string detail;
  for (int epochs : {2, kBenchEpochs, TrainConfig{}.epochs}) {
    TrainConfig tc;
    tc.epochs = epochs;
    ok = ok && tc.tau_at(0) == 1.0 && tc.tau_at(epochs - 1) == 0.5;
    detail += (detail.empty() ? "" : ", ") + std::to_string(epochs) + " epochs: " +
              fmt(tc.tau_at(0), 17) + " -> " + fmt(tc.tau_at(epochs - 1), 17);
  }
  report(9, "temperature endpoints", ok, detail);
}

// 10 ------------------------------------------------------------------------

void episode_hygiene() {
  SynthConfig sc;
  const EventSplit split = filter_and_split(synth_generate(sc), kMinEventPosts,
                                            kDefaultTestFraction, 0);
  std::set<std::string> train_ids, test_ids;
  for (const auto& e : split.train) train_ids.insert(e.event_id);
  for (const auto& e : split.test) test_ids.insert(e.event_id);
  std::size_t shared_events = 0;
  for (const auto& id : test_ids) shared_events += train_ids.count(id);

  Rng rng = derive_rng(10, "data", {});
  std::size_t overlaps = 0, foreign = 0;
  const std::size_t n_train = split.train.size();
  for (std::size_t i = 0; i < 1000; ++i) {
    const bool from_test = i % 5 == 4;
    const auto& pool = from_test ? split.test : split.train;
    const EventGroup& event = pool[(i / 5) % pool.size()];
    const Episode ep = sample_episode(event, 5, from_test ? std::nullopt
                                                          : std::optional<std::size_t>(10),
                                      rng);
    std::set<std::string> support;
    for (const auto& p : ep.support) support.insert(p.id);
    for (const auto& p : ep.query) overlaps += support.count(p.id);
    const auto& other = from_test ? train_ids : test_ids;
    foreign += other.count(ep.event_id);
  }
  report(10, "episode hygiene",
         shared_events == 0 && overlaps == 0 && foreign == 0 && n_train == 40 &&
             split.test.size() == 10,
         "1000 episodes, " + std::to_string(overlaps) + " support/query overlaps, " +
             std::to_string(shared_events + foreign) + " train/test collisions, events " +
             std::to_string(n_train) + "/" + std::to_string(split.test.size()));
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: acceptance <path to metafend executable>\n";
    return 2;
  }
  g_exe = argv[1];
  const std::vector<std::pair<std::string, std::function<void()>>> criteria{
      {"1", gradient_correctness}, {"2", gumbel_distribution}, {"3", leave_one_out},
      {"4", adaptation_efficacy},  {"5-6", benchmark},         {"7", case_study},
      {"8", determinism},          {"9", temperature_endpoints}, {"10", episode_hygiene}};
  for (const auto& [id, run] : criteria) {
    try {
      run();
    } catch (const std::exception& e) {
      std::cout << "FAIL criterion " << id << ": " << e.what() << std::endl;
      ++g_failures;
    }
  }
  std::cout << (g_failures == 0 ? "all criteria passed" : std::to_string(g_failures) + " failed")
            << std::endl;
  return g_failures == 0 ? 0 : 1;
}
