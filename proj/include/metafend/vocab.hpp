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
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace metafend {

class Vocab {
 public:
  static constexpr std::int32_t kPad = 0;
  static constexpr std::int32_t kOov = 1;

  Vocab();

  // Returns the existing index when the token is already present.
  std::int32_t add(std::string_view token);
  std::int32_t index(std::string_view token) const;
  const std::string& token(std::int32_t index) const;
  std::size_t size() const { return tokens_.size(); }
  // Every token, including the two reserved entries at 0 and 1.
  const std::vector<std::string>& tokens() const { return tokens_; }

  static Vocab from_tokens(const std::vector<std::string>& tokens);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::int32_t> index_;
};

// Lowercased whitespace tokens.
std::vector<std::string> split_words(std::string_view text);

// Token ids truncated or padded to exactly max_len.
std::vector<std::int32_t> tokenize(std::string_view text, const Vocab& vocab,
                                   std::size_t max_len);

// Space-joined tokens with padding dropped; OOV ids render as "<unk>".
std::string render_tokens(std::span<const std::int32_t> ids, const Vocab& vocab);

Vocab build_vocab(std::span<const std::string> texts);

struct WordVectors {
  std::size_t dim = 0;
  std::map<std::string, std::vector<double>> vectors;
};

// "token v1 v2 ... vn" per line. An optional "count dim" header line (the
// common word2vec text layout) is skipped.
WordVectors load_word_vectors(const std::filesystem::path& path);

}  // namespace metafend
