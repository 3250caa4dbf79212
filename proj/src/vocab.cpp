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

#include "metafend/vocab.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "metafend/error.hpp"

namespace metafend {

Vocab::Vocab() {
  add("<pad>");
  add("<unk>");
}

std::int32_t Vocab::add(std::string_view token) {
  auto it = index_.find(std::string(token));
  if (it != index_.end()) return it->second;
  const auto id = static_cast<std::int32_t>(tokens_.size());
  tokens_.emplace_back(token);
  index_.emplace(tokens_.back(), id);
  return id;
}

std::int32_t Vocab::index(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kOov : it->second;
}

const std::string& Vocab::token(std::int32_t index) const {
  if (index < 0 || static_cast<std::size_t>(index) >= tokens_.size()) {
    throw DataError("vocab: index " + std::to_string(index) + " out of range");
  }
  return tokens_[index];
}

Vocab Vocab::from_tokens(const std::vector<std::string>& tokens) {
  if (tokens.size() < 2 || tokens[0] != "<pad>" || tokens[1] != "<unk>") {
    throw DataError("vocab: token list must start with <pad>, <unk>");
  }
  Vocab v;
  for (std::size_t i = 2; i < tokens.size(); ++i) {
    if (v.add(tokens[i]) != static_cast<std::int32_t>(i)) {
      throw DataError("vocab: duplicate token " + tokens[i]);
    }
  }
  return v;
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

std::vector<std::int32_t> tokenize(std::string_view text, const Vocab& vocab,
                                   std::size_t max_len) {
  if (max_len == 0) throw ConfigError("tokenize: max_len must be >= 1");
  std::vector<std::int32_t> ids(max_len, Vocab::kPad);
  const auto words = split_words(text);
  for (std::size_t i = 0; i < words.size() && i < max_len; ++i) {
    ids[i] = vocab.index(words[i]);
  }
  return ids;
}

std::string render_tokens(std::span<const std::int32_t> ids, const Vocab& vocab) {
  std::string out;
  for (std::int32_t id : ids) {
    if (id == Vocab::kPad) continue;
    if (!out.empty()) out += ' ';
    out += vocab.token(id);
  }
  return out;
}

Vocab build_vocab(std::span<const std::string> texts) {
  Vocab vocab;
  for (const auto& text : texts) {
    for (const auto& word : split_words(text)) vocab.add(word);
  }
  return vocab;
}

WordVectors load_word_vectors(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("word vectors: cannot open " + path.string());
  WordVectors out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string token;
    if (!(fields >> token)) continue;
    std::vector<double> values;
    double v;
    while (fields >> v) values.push_back(v);
    if (!fields.eof()) {
      throw DataError("word vectors: " + path.string() + ":" +
                      std::to_string(line_no) + ": non-numeric value");
    }
    if (line_no == 1 && values.size() == 1) continue;  // "count dim" header
    if (values.empty()) {
      throw DataError("word vectors: " + path.string() + ":" +
                      std::to_string(line_no) + ": token without values");
    }
    if (out.dim == 0) out.dim = values.size();
    if (values.size() != out.dim) {
      throw DataError("word vectors: " + path.string() + ":" +
                      std::to_string(line_no) + ": expected " +
                      std::to_string(out.dim) + " values, got " +
                      std::to_string(values.size()));
    }
    out.vectors[token] = std::move(values);
  }
  return out;
}

}  // namespace metafend
