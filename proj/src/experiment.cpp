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

#include "metafend/experiment.hpp"

#include "metafend/error.hpp"
#include "metafend/extractors.hpp"

namespace metafend {

std::set<std::string> Experiment::train_ids() const {
  std::set<std::string> ids;
  for (const auto& e : train) ids.insert(e.event_id);
  return ids;
}

namespace {

std::vector<EventData> encode_events(const std::vector<EventGroup>& groups,
                                     const Vocab& vocab, std::size_t max_len) {
  std::vector<EventData> out;
  out.reserve(groups.size());
  for (const auto& g : groups) {
    out.push_back({g.event_id, encode_posts(g.posts, vocab, max_len)});
  }
  return out;
}

}  // namespace

Experiment prepare_experiment(const std::vector<Post>& posts, const ModelConfig& base,
                              Mode mode, std::uint64_t split_seed,
                              double test_fraction, std::size_t min_posts) {
  std::optional<std::size_t> visual_dim;
  for (const auto& p : posts) {
    if (!p.visual) continue;
    if (visual_dim && *visual_dim != p.visual->size()) {
      throw DataError("post " + p.id + " has a " + std::to_string(p.visual->size()) +
                      "-wide visual vector; earlier posts have " +
                      std::to_string(*visual_dim));
    }
    visual_dim = p.visual->size();
  }
  const EventSplit split = filter_and_split(posts, min_posts, test_fraction, split_seed);

  std::vector<std::string> texts;
  for (const auto& g : split.train) {
    for (const auto& p : g.posts) texts.push_back(p.text);
  }
  Experiment ex;
  ex.vocab = build_vocab(texts);
  ex.model = base;
  ex.model.vocab_size = ex.vocab.size();
  ex.model.visual_dim = visual_dim.value_or(0);
  ex.model.head = head_for(mode);
  ex.model.validate();
  ex.train = encode_events(split.train, ex.vocab, ex.model.max_len);
  ex.test = encode_events(split.test, ex.vocab, ex.model.max_len);
  return ex;
}

ParamSet initial_params(const Experiment& experiment, std::uint64_t seed) {
  Rng rng = derive_rng(seed, "init");
  ParamSet params = init_params(experiment.model, rng);
  if (experiment.word_vectors) {
    if (experiment.word_vectors->dim != experiment.model.emb_dim) {
      throw ShapeError("ext.embedding: word vectors have width " +
                       std::to_string(experiment.word_vectors->dim) +
                       ", model expects " + std::to_string(experiment.model.emb_dim));
    }
    params = params.with(pname::kEmbedding,
                         extract::embedding_from_vectors(experiment.vocab,
                                                         *experiment.word_vectors,
                                                         params.at(pname::kEmbedding)));
  }
  return params;
}

RunOutcome run_experiment(const Experiment& experiment, const TrainConfig& config,
                          const std::function<void(const EpochLog&)>& on_epoch) {
  RunOutcome out;
  out.train = meta_train(experiment.train, initial_params(experiment, config.seed),
                         experiment.model, config, on_epoch);
  out.params = out.train.params;
  out.metrics = evaluate(out.params, experiment.test, experiment.model, config,
                         experiment.train_ids());
  return out;
}

}  // namespace metafend
