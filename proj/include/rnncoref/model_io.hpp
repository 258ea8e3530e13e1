// Copyright 2026 The rnncoref Authors.
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

// Binary model file. Layout (all integers little-endian, reals IEEE-754
// binary64) is documented in docs/formats.md.

#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <zlib.h>

#include "rnncoref/model.hpp"
#include "rnncoref/train.hpp"

namespace rnncoref {

inline constexpr char kModelMagic[8] = {'C', 'R', 'N', 'N', 'M', 'D', 'L', '\0'};
inline constexpr std::uint32_t kModelFormatVersion = 1;

class ModelFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ModelFile {
  TrainConfig config;
  Model model;
};

namespace io_detail {

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    u64(bits);
  }
  void bytes(const std::string &s) { buf_ += s; }
  std::string &buffer() { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(const std::string &buf, std::size_t limit) : buf_(buf), limit_(limit) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(buf_[pos_++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string out = buf_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  std::size_t position() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > limit_) throw ModelFormatError("model file truncated");
  }
  const std::string &buf_;
  std::size_t limit_;
  std::size_t pos_ = 0;
};

inline std::uint32_t crc32_of(const std::string &data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef *>(data.data()), static_cast<uInt>(n));
  return static_cast<std::uint32_t>(crc);
}

}  // namespace io_detail

// Serialized bytes of a model plus the config it was trained with. The
// config's dims are replaced by the model's own so the two never disagree.
inline std::string serialize_model(const Model &model, const TrainConfig &config) {
  io_detail::Writer w;
  w.bytes(std::string(kModelMagic, sizeof kModelMagic));
  w.u32(kModelFormatVersion);

  const Dims &d = model.dims();
  w.i32(d.anaphoric);
  w.i32(d.pairwise);
  w.i32(d.cluster);
  w.i32(d.na_hidden);

  w.u64(config.seed);
  w.i32(config.epochs);
  for (Real lr : config.learning_rates.by_group) w.f64(lr);
  w.f64(config.dropout.concat);
  w.f64(config.dropout.state);
  w.f64(config.alphas.false_link);
  w.f64(config.alphas.false_new);
  w.f64(config.alphas.wrong_link);
  w.u8(config.pretrain ? 1 : 0);
  w.i32(config.pretrain_epochs);
  w.u8(config.global ? 1 : 0);
  w.f64(config.clip_lo);
  w.f64(config.clip_hi);
  w.i32(config.min_feature_count);

  std::ostringstream vocab;
  model.vocab().dump(vocab);
  const std::string vtext = vocab.str();
  w.u64(vtext.size());
  w.bytes(vtext);

  const auto params = model.parameters();
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const Parameter *p : params) {
    w.u32(static_cast<std::uint32_t>(p->value.rows()));
    w.u32(static_cast<std::uint32_t>(p->value.cols()));
    for (Eigen::Index r = 0; r < p->value.rows(); ++r) {
      for (Eigen::Index c = 0; c < p->value.cols(); ++c) w.f64(p->value(r, c));
    }
  }
  std::string &buf = w.buffer();
  w.u32(io_detail::crc32_of(buf, buf.size()));
  return std::move(buf);
}

inline ModelFile deserialize_model(const std::string &data) {
  if (data.size() < sizeof kModelMagic + 8 ||
      std::memcmp(data.data(), kModelMagic, sizeof kModelMagic) != 0) {
    throw ModelFormatError("not a model file (bad magic)");
  }
  const std::size_t body = data.size() - 4;
  {
    io_detail::Reader tail(data, data.size());
    tail.bytes(body);
    const std::uint32_t stored = tail.u32();
    // Check the version before the checksum so an old file gets the clearer
    // message.
    io_detail::Reader head(data, body);
    head.bytes(sizeof kModelMagic);
    const std::uint32_t version = head.u32();
    if (version != kModelFormatVersion) {
      throw ModelFormatError("unsupported model format version " + std::to_string(version) +
                             " (expected " + std::to_string(kModelFormatVersion) + ")");
    }
    if (stored != io_detail::crc32_of(data, body)) {
      throw ModelFormatError("model file checksum mismatch");
    }
  }

  io_detail::Reader r(data, body);
  r.bytes(sizeof kModelMagic);
  r.u32();

  ModelFile out;
  Dims d;
  d.anaphoric = r.i32();
  d.pairwise = r.i32();
  d.cluster = r.i32();
  d.na_hidden = r.i32();

  TrainConfig &c = out.config;
  c.seed = r.u64();
  c.epochs = r.i32();
  for (Real &lr : c.learning_rates.by_group) lr = r.f64();
  c.dropout.concat = r.f64();
  c.dropout.state = r.f64();
  c.alphas.false_link = r.f64();
  c.alphas.false_new = r.f64();
  c.alphas.wrong_link = r.f64();
  c.pretrain = r.u8() != 0;
  c.pretrain_epochs = r.i32();
  c.global = r.u8() != 0;
  c.clip_lo = r.f64();
  c.clip_hi = r.f64();
  c.min_feature_count = r.i32();
  c.dims = d;

  const std::uint64_t vlen = r.u64();
  if (vlen > body) throw ModelFormatError("vocabulary section length out of range");
  std::istringstream vtext(r.bytes(static_cast<std::size_t>(vlen)));
  FeatureVocabulary vocab = FeatureVocabulary::parse(vtext);

  try {
    out.model = Model(std::move(vocab), d);
  } catch (const std::invalid_argument &e) {
    throw ModelFormatError(std::string("bad dims record: ") + e.what());
  }
  const auto params = out.model.parameters();
  const std::uint32_t count = r.u32();
  if (count != params.size()) {
    throw ModelFormatError("expected " + std::to_string(params.size()) + " tensors, found " +
                           std::to_string(count));
  }
  for (Parameter *p : params) {
    const std::uint32_t rows = r.u32();
    const std::uint32_t cols = r.u32();
    if (rows != p->value.rows() || cols != p->value.cols()) {
      throw ModelFormatError("tensor " + p->name + " has shape " + std::to_string(rows) + "x" +
                             std::to_string(cols) + ", expected " +
                             std::to_string(p->value.rows()) + "x" +
                             std::to_string(p->value.cols()));
    }
    for (Eigen::Index i = 0; i < p->value.rows(); ++i) {
      for (Eigen::Index j = 0; j < p->value.cols(); ++j) p->value(i, j) = r.f64();
    }
  }
  if (r.position() != body) throw ModelFormatError("trailing bytes after tensors");
  return out;
}

inline void save_model(const std::string &path, const Model &model, const TrainConfig &config) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  const std::string bytes = serialize_model(model, config);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline ModelFile load_model(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_model(data);
}

}  // namespace rnncoref
