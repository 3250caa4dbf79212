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

#include "metafend/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "metafend/error.hpp"

namespace metafend {

namespace {

constexpr char kMagic[] = "MFNDCKPT";
constexpr std::size_t kMagicLen = 8;

class Writer {
 public:
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v), 8); }
  void bytes(std::string_view s) { out_.append(s); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s);
  }
  std::string take() { return std::move(out_); }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& in) : in_(in) {}
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  double f64() { return std::bit_cast<double>(le(8)); }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::string str() { return bytes(u32()); }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw DataError("checkpoint: truncated file");
  }
  std::uint64_t le(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in_[pos_ + i])) << (8 * i);
    }
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  const std::string& in_;
  std::size_t pos_ = 0;
};

nlohmann::ordered_json config_json(const ModelConfig& m) {
  return {{"vocab_size", m.vocab_size}, {"emb_dim", m.emb_dim},
          {"n_filters", m.n_filters},   {"max_window", m.max_window},
          {"max_len", m.max_len},       {"feature_dim", m.feature_dim},
          {"dim", m.dim},               {"visual_dim", m.visual_dim},
          {"head", m.head == HeadKind::kBinary ? "binary" : "label-embedding"}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig m;
  m.vocab_size = j.at("vocab_size").get<std::size_t>();
  m.emb_dim = j.at("emb_dim").get<std::size_t>();
  m.n_filters = j.at("n_filters").get<std::size_t>();
  m.max_window = j.at("max_window").get<std::size_t>();
  m.max_len = j.at("max_len").get<std::size_t>();
  m.feature_dim = j.at("feature_dim").get<std::size_t>();
  m.dim = j.at("dim").get<std::size_t>();
  m.visual_dim = j.at("visual_dim").get<std::size_t>();
  const auto head = j.at("head").get<std::string>();
  if (head == "binary") {
    m.head = HeadKind::kBinary;
  } else if (head == "label-embedding") {
    m.head = HeadKind::kLabelEmbedding;
  } else {
    throw DataError("checkpoint: unknown head '" + head + "'");
  }
  return m;
}

}  // namespace

std::string encode_checkpoint(const Checkpoint& c) {
  Writer w;
  w.bytes(std::string_view(kMagic, kMagicLen));
  w.u32(kCheckpointVersion);
  nlohmann::ordered_json meta;
  meta["model"] = config_json(c.model);
  meta["mode"] = std::string(mode_name(c.mode));
  meta["vocab"] = c.vocab;
  w.str(meta.dump());
  w.u32(static_cast<std::uint32_t>(c.params.size()));
  for (const auto& [name, tensor] : c.params) {
    w.str(name);
    w.u32(static_cast<std::uint32_t>(tensor->rank()));
    for (std::size_t d : tensor->shape()) w.u64(d);
    for (double v : tensor->data()) w.f64(v);
  }
  return w.take();
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  if (r.bytes(kMagicLen) != std::string_view(kMagic, kMagicLen)) {
    throw DataError("checkpoint: bad magic");
  }
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw DataError("checkpoint: unsupported version " + std::to_string(version));
  }
  Checkpoint c;
  try {
    const auto meta = nlohmann::json::parse(r.str());
    c.model = config_from_json(meta.at("model"));
    const auto mode = parse_mode(meta.at("mode").get<std::string>());
    if (!mode) throw DataError("checkpoint: unknown mode");
    c.mode = *mode;
    c.vocab = meta.at("vocab").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint: bad metadata: ") + e.what());
  }
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.str();
    const std::uint32_t rank = r.u32();
    if (rank < 1 || rank > 2) throw DataError("checkpoint: " + name + " has rank " + std::to_string(rank));
    Shape shape(rank);
    std::size_t n = 1;
    for (auto& d : shape) {
      d = static_cast<std::size_t>(r.u64());
      n *= d;
    }
    std::vector<double> values(n);
    for (double& v : values) v = r.f64();
    c.params.insert(std::move(name), Tensor(std::move(shape), std::move(values)));
  }
  if (!r.done()) throw DataError("checkpoint: trailing bytes");
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out << encode_checkpoint(c);
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return decode_checkpoint(buf.str());
}

}  // namespace metafend
