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

#include "metafend/cli.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "metafend/case_study.hpp"
#include "metafend/checkpoint.hpp"
#include "metafend/error.hpp"
#include "metafend/experiment.hpp"
#include "metafend/gradcheck.hpp"
#include "metafend/graph.hpp"
#include "metafend/metrics.hpp"

namespace metafend {

namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

struct DataOptions {
  std::string data;
  bool synth = false;
  std::uint64_t synth_seed = 0;
  SynthConfig synth_config;
  std::uint64_t split_seed = 0;
  double test_fraction = kDefaultTestFraction;
};

struct LoadedData {
  std::vector<Post> posts;
  std::string source;
  std::string fingerprint;
};

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

std::string serialize_posts(const std::vector<Post>& posts) {
  std::string text;
  for (const auto& p : posts) text += post_to_json_line(p) + "\n";
  return text;
}

void add_data_options(CLI::App* cmd, DataOptions& d) {
  cmd->add_option("--data", d.data, "Dataset file (one JSON record per line)");
  cmd->add_flag("--synth", d.synth, "Use the synthetic event benchmark");
  cmd->add_option("--synth-seed", d.synth_seed, "Seed of the synthetic dataset");
  cmd->add_option("--synth-events", d.synth_config.n_events, "Synthetic events");
  cmd->add_option("--synth-posts", d.synth_config.posts_per_event, "Posts per synthetic event");
  cmd->add_option("--split-seed", d.split_seed, "Seed of the train/test event split");
  cmd->add_option("--test-fraction", d.test_fraction, "Fraction of events held out");
}

LoadedData load_data(const DataOptions& d) {
  if (d.synth == !d.data.empty()) {
    throw ConfigError("give exactly one of --data or --synth");
  }
  LoadedData out;
  if (d.synth) {
    SynthConfig cfg = d.synth_config;
    cfg.seed = d.synth_seed;
    out.posts = synth_generate(cfg);
    out.source = "synth:seed=" + std::to_string(cfg.seed);
    out.fingerprint = hex64(fnv1a64(serialize_posts(out.posts)));
  } else {
    out.posts = load_posts(d.data);
    out.source = d.data;
    out.fingerprint = file_fingerprint(d.data);
  }
  return out;
}

void add_train_options(CLI::App* cmd, TrainConfig& t, std::string& mode,
                       std::string& order) {
  cmd->add_option("--mode", mode, "metafend | soft-attn | cnp-mean | maml | binary-head");
  cmd->add_option("--k", t.k, "Support posts per event");
  cmd->add_option("--query-size", t.query_size, "Query posts per training episode");
  cmd->add_option("--epochs", t.epochs, "Passes over the training events");
  cmd->add_option("--meta-batch", t.meta_batch, "Episodes per outer update");
  cmd->add_option("--inner-lr", t.inner_lr, "Adaptation step size");
  cmd->add_option("--outer-lr", t.outer_lr, "Adam learning rate");
  cmd->add_option("--inner-steps", t.inner_steps, "Adaptation steps");
  cmd->add_option("--tau-start", t.tau_start, "Gumbel temperature at the first epoch");
  cmd->add_option("--tau-end", t.tau_end, "Gumbel temperature at the last epoch");
  cmd->add_option("--seed", t.seed, "Run seed");
  cmd->add_option("--grad-order", order, "first | second");
  cmd->add_option("--threads", t.threads, "Worker threads per meta-batch");
}

void resolve_train_options(TrainConfig& t, const std::string& mode, const std::string& order) {
  const auto m = parse_mode(mode);
  if (!m) throw ConfigError("unknown mode '" + mode + "'");
  t.mode = *m;
  const auto o = parse_grad_order(order);
  if (!o) throw ConfigError("unknown gradient order '" + order + "'");
  t.grad_order = *o;
  t.validate();
}

ordered_json config_json(const TrainConfig& t) {
  return {{"mode", mode_name(t.mode)},
          {"inner_lr", t.inner_lr},
          {"inner_steps", t.inner_steps},
          {"outer_lr", t.outer_lr},
          {"meta_batch", t.meta_batch},
          {"epochs", t.epochs},
          {"k", t.k},
          {"query_size", t.query_size},
          {"tau_start", t.tau_start},
          {"tau_end", t.tau_end},
          {"grad_order", grad_order_name(t.grad_order)},
          {"seed", t.seed},
          {"threads", t.threads}};
}

ordered_json model_json(const ModelConfig& m) {
  return {{"vocab_size", m.vocab_size}, {"emb_dim", m.emb_dim},
          {"n_filters", m.n_filters},   {"max_window", m.max_window},
          {"max_len", m.max_len},       {"feature_dim", m.feature_dim},
          {"dim", m.dim},               {"visual_dim", m.visual_dim}};
}

void write_metrics(const fs::path& dir, const RunMetrics& m) {
  write_text(dir / "metrics.csv", metrics_csv(m));
  write_text(dir / "metrics.json", metrics_json(m));
}

int cmd_train(const DataOptions& d, TrainConfig t, const std::string& emb_file,
              const std::string& out_dir, bool quiet, std::ostream& out) {
  const std::string started = utc_now();
  const LoadedData data = load_data(d);
  ModelConfig base;
  std::optional<WordVectors> vectors;
  if (!emb_file.empty()) {
    vectors = load_word_vectors(emb_file);
    base.emb_dim = vectors->dim;
  }
  Experiment ex = prepare_experiment(data.posts, base, t.mode, d.split_seed, d.test_fraction);
  ex.word_vectors = std::move(vectors);

  const fs::path dir(out_dir);
  fs::create_directories(dir);
  std::ofstream log(dir / "train_log.txt", std::ios::binary);
  if (!log) throw DataError("cannot write " + (dir / "train_log.txt").string());
  const RunOutcome run = run_experiment(ex, t, [&](const EpochLog& e) {
    const std::string line = format_epoch_log(e);
    log << line << '\n';
    if (!quiet) out << line << '\n';
  });

  save_checkpoint(dir / "checkpoint.bin",
                  Checkpoint{ex.model, t.mode, ex.vocab.tokens(), run.params});
  write_metrics(dir, run.metrics);

  ordered_json manifest;
  manifest["command"] = "train";
  manifest["code_version"] = kCodeVersion;
  manifest["config"] = config_json(t);
  manifest["seed"] = t.seed;
  manifest["dataset"] = {{"source", data.source},
                         {"fingerprint", data.fingerprint},
                         {"posts", data.posts.size()},
                         {"split_seed", d.split_seed},
                         {"train_events", ex.train.size()},
                         {"test_events", ex.test.size()}};
  manifest["model"] = model_json(ex.model);
  manifest["episode_hash"] = hex64(run.train.episode_hash);
  manifest["started_at"] = started;
  manifest["finished_at"] = utc_now();
  manifest["metrics"] = {{"accuracy", run.metrics.accuracy}, {"f1", run.metrics.f1}};
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");

  char buf[160];
  std::snprintf(buf, sizeof(buf), "test accuracy=%.6f f1=%.6f events=%zu\n",
                run.metrics.accuracy, run.metrics.f1, ex.test.size());
  out << buf << "wrote " << dir.string() << "\n";
  return 0;
}

int cmd_eval(const DataOptions& d, TrainConfig t, const std::string& mode_flag,
             const std::string& checkpoint_path, const std::string& split,
             const std::string& out_dir, std::ostream& out) {
  const Checkpoint ck = load_checkpoint(checkpoint_path);
  validate_params(ck.params, ck.model);
  t.mode = ck.mode;
  if (!mode_flag.empty()) {
    const auto m = parse_mode(mode_flag);
    if (!m) throw ConfigError("unknown mode '" + mode_flag + "'");
    t.mode = *m;
    ModelConfig wanted = ck.model;
    wanted.head = head_for(t.mode);
    validate_params(ck.params, wanted);
  }

  const LoadedData data = load_data(d);
  for (const auto& p : data.posts) {
    if (p.visual && p.visual->size() != ck.model.visual_dim) {
      throw ShapeError(std::string(pname::kVisualProjW) + " expects " +
                       std::to_string(ck.model.visual_dim) +
                       "-wide visual vectors but post " + p.id + " has " +
                       std::to_string(p.visual->size()));
    }
  }
  std::vector<EventGroup> groups;
  if (split == "test") {
    groups = filter_and_split(data.posts, kMinEventPosts, d.test_fraction, d.split_seed).test;
  } else if (split == "all") {
    std::map<std::string, std::vector<Post>> by_event;
    for (const auto& p : data.posts) {
      if (p.event_id) by_event[*p.event_id].push_back(p);
    }
    for (auto& [id, posts] : by_event) {
      if (posts.size() >= kMinEventPosts) groups.push_back({id, std::move(posts)});
    }
  } else {
    throw ConfigError("--split must be 'test' or 'all'");
  }
  if (groups.empty()) throw DataError("no events to evaluate");

  const Vocab vocab = Vocab::from_tokens(ck.vocab);
  std::vector<EventData> events;
  for (const auto& g : groups) {
    events.push_back({g.event_id, encode_posts(g.posts, vocab, ck.model.max_len)});
  }
  const RunMetrics metrics = evaluate(ck.params, events, ck.model, t);
  out << metrics_csv(metrics);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_metrics(out_dir, metrics);
  }
  return 0;
}

std::vector<Mode> parse_modes(const std::string& list) {
  std::vector<Mode> modes;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto m = parse_mode(item);
    if (!m) throw ConfigError("unknown mode '" + item + "'");
    modes.push_back(*m);
  }
  if (modes.empty()) throw ConfigError("--modes is empty");
  return modes;
}

int cmd_ablate(const DataOptions& d, TrainConfig t, const std::string& modes_flag,
               int n_seeds, const std::string& out_dir, std::ostream& out) {
  if (n_seeds < 1) throw ConfigError("--seeds must be >= 1");
  const LoadedData data = load_data(d);
  const auto modes = parse_modes(modes_flag);
  std::string table = "mode,seed,accuracy,f1,episode_hash\n";
  std::string summary = "summary,mode,accuracy_mean,accuracy_std,f1_mean,f1_std\n";
  out << table;
  char buf[200];
  for (Mode mode : modes) {
    const Experiment ex = prepare_experiment(data.posts, ModelConfig{}, mode, d.split_seed,
                                             d.test_fraction);
    std::vector<double> acc;
    std::vector<double> f1;
    for (int s = 0; s < n_seeds; ++s) {
      TrainConfig run_cfg = t;
      run_cfg.mode = mode;
      run_cfg.seed = t.seed + static_cast<std::uint64_t>(s);
      const RunOutcome run = run_experiment(ex, run_cfg);
      std::snprintf(buf, sizeof(buf), "%s,%llu,%.6f,%.6f,%s\n",
                    std::string(mode_name(mode)).c_str(),
                    static_cast<unsigned long long>(run_cfg.seed), run.metrics.accuracy,
                    run.metrics.f1, hex64(run.train.episode_hash).c_str());
      table += buf;
      out << buf << std::flush;
      acc.push_back(run.metrics.accuracy);
      f1.push_back(run.metrics.f1);
    }
    std::snprintf(buf, sizeof(buf), "summary,%s,%.6f,%.6f,%.6f,%.6f\n",
                  std::string(mode_name(mode)).c_str(), mean(acc), stddev(acc), mean(f1),
                  stddev(f1));
    summary += buf;
  }
  out << summary;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_text(fs::path(out_dir) / "ablation.csv", table);
    write_text(fs::path(out_dir) / "ablation_summary.csv", summary);
  }
  return 0;
}

int cmd_gradcheck(const std::string& fault, std::uint64_t seed, double eps,
                  std::ostream& out, std::ostream& err) {
  std::optional<ad::ScopedBackwardFault> injected;
  if (!fault.empty()) {
    const auto op = ad::op_from_name(fault);
    if (!op || *op == ad::Op::kLeaf) throw ConfigError("unknown op '" + fault + "'");
    injected.emplace(*op);
    out << "injected sign flip into the backward rule of " << fault << "\n";
  }
  const auto started = std::chrono::steady_clock::now();
  const auto checks = gradcheck_suite(seed, eps);
  std::vector<std::string> failed;
  char buf[320];
  for (const auto& c : checks) {
    const bool ok = c.max_rel_error < kGradTolerance;
    std::snprintf(buf, sizeof(buf), "%-24s max_rel_error=%.3e %s%s%s\n", c.component.c_str(),
                  c.max_rel_error, ok ? "ok" : "FAIL", c.detail.empty() ? "" : "  ",
                  c.detail.c_str());
    out << buf;
    if (!ok) failed.push_back(c.component);
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  std::snprintf(buf, sizeof(buf), "%zu components, tolerance %.0e, %.2f s\n", checks.size(),
                kGradTolerance, secs);
  out << buf;
  if (failed.empty()) return 0;
  err << "gradient check failed:";
  for (const auto& f : failed) err << " " << f;
  err << "\n";
  return 1;
}

int cmd_casestudy(int epochs, std::uint64_t seed, std::ostream& out) {
  const CaseStudyReport report = run_case_study(epochs, seed);
  out << report.text;
  const bool hard_ok = report.reference_hard.predicted == Label::kFake;
  const bool soft_dominated =
      report.geometry.distance_to_real_mean < report.geometry.distance_to_fake;
  out << "hard attention spots the fake query: " << (hard_ok ? "yes" : "no") << "\n";
  out << "soft context dominated by the real cluster: " << (soft_dominated ? "yes" : "no")
      << "\n";
  return hard_ok && soft_dominated ? 0 : 1;
}

int cmd_synth(SynthConfig cfg, std::optional<double> ratio, const std::string& path,
              std::ostream& out) {
  cfg.fixed_fake_ratio = ratio;
  const auto posts = synth_generate(cfg);
  write_text(path, serialize_posts(posts));
  out << "wrote " << posts.size() << " posts in " << cfg.n_events << " events to " << path
      << "\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Few-shot fake news detection across events"};
  app.require_subcommand(1);

  DataOptions data;
  TrainConfig train;
  std::string mode = "metafend";
  std::string order = "first";
  std::string out_dir;
  std::string emb_file;
  bool quiet = false;

  auto* train_cmd = app.add_subcommand("train", "Meta-train and evaluate on held-out events");
  add_data_options(train_cmd, data);
  add_train_options(train_cmd, train, mode, order);
  train_cmd->add_option("--out-dir", out_dir, "Output directory")->required();
  train_cmd->add_option("--emb-file", emb_file, "Pretrained word vectors (text format)");
  train_cmd->add_flag("--quiet", quiet, "Do not echo the epoch log");

  std::string checkpoint;
  std::string split = "test";
  std::string eval_mode;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  add_data_options(eval_cmd, data);
  eval_cmd->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  eval_cmd->add_option("--split", split, "test (held-out events) | all");
  eval_cmd->add_option("--mode", eval_mode, "Override the checkpoint's mode");
  eval_cmd->add_option("--k", train.k, "Support posts per event");
  eval_cmd->add_option("--inner-lr", train.inner_lr, "Adaptation step size");
  eval_cmd->add_option("--inner-steps", train.inner_steps, "Adaptation steps");
  eval_cmd->add_option("--tau-end", train.tau_end, "Selection temperature");
  eval_cmd->add_option("--seed", train.seed, "Seed of the support draw");
  eval_cmd->add_option("--out-dir", out_dir, "Write metrics.csv and metrics.json here");

  std::string modes = "metafend,soft-attn,cnp-mean,maml,binary-head";
  int n_seeds = 5;
  auto* ablate_cmd = app.add_subcommand("ablate", "Compare modes over shared seeds");
  add_data_options(ablate_cmd, data);
  add_train_options(ablate_cmd, train, mode, order);
  ablate_cmd->add_option("--modes", modes, "Comma-separated modes");
  ablate_cmd->add_option("--seeds", n_seeds, "Number of seeds, counting up from --seed");
  ablate_cmd->add_option("--out-dir", out_dir, "Write ablation tables here");

  std::string fault;
  double eps = 1e-6;
  std::uint64_t seed = 0;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  grad_cmd->add_option("--inject-fault", fault, "Flip the sign of one op's backward rule");
  grad_cmd->add_option("--eps", eps, "Finite-difference step");
  grad_cmd->add_option("--seed", seed, "Seed of the random inputs");

  int case_epochs = 20;
  auto* case_cmd = app.add_subcommand("casestudy", "Hard vs soft attention on the fixed fixture");
  case_cmd->add_option("--epochs", case_epochs, "Epochs for the briefly trained models (0 skips)");
  case_cmd->add_option("--seed", seed, "Seed for the briefly trained models");

  SynthConfig synth;
  std::optional<double> ratio;
  std::string synth_out;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic dataset");
  synth_cmd->add_option("--out", synth_out, "Output file")->required();
  synth_cmd->add_option("--seed", synth.seed, "Generator seed");
  synth_cmd->add_option("--events", synth.n_events, "Number of events");
  synth_cmd->add_option("--posts", synth.posts_per_event, "Posts per event");
  synth_cmd->add_option("--dim", synth.feature_dim, "Feature width");
  synth_cmd->add_option("--separation", synth.separation, "Prototype separation");
  synth_cmd->add_option("--spread", synth.event_spread, "Spread of event centres");
  synth_cmd->add_option("--noise", synth.noise, "Per-post noise scale");
  synth_cmd->add_option("--fake-ratio", ratio, "Fixed fake ratio for every event");

  std::vector<std::string> argv_store{"metafend"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*train_cmd) {
      resolve_train_options(train, mode, order);
      return cmd_train(data, train, emb_file, out_dir, quiet, out);
    }
    if (*eval_cmd) {
      return cmd_eval(data, train, eval_mode, checkpoint, split, out_dir, out);
    }
    if (*ablate_cmd) {
      resolve_train_options(train, mode, order);
      return cmd_ablate(data, train, modes, n_seeds, out_dir, out);
    }
    if (*grad_cmd) return cmd_gradcheck(fault, seed, eps, out, err);
    if (*case_cmd) return cmd_casestudy(case_epochs, seed, out);
    if (*synth_cmd) return cmd_synth(synth, ratio, synth_out, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace metafend
