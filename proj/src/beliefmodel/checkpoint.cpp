// Copyright 2026 The NBF Authors.
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

#include "nbf/beliefmodel/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace nbf::beliefmodel {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'N', 'B', 'F', 'M', 'O', 'D', 'E', 'L'};

template <typename T>
void put(std::vector<char>& out, T v) {
  const auto* p = reinterpret_cast<const char*>(&v);
  out.insert(out.end(), p, p + sizeof(T));
}

void put_string(std::vector<char>& out, const std::string& s) {
  put<std::uint64_t>(out, s.size());
  out.insert(out.end(), s.begin(), s.end());
}

class Reader {
 public:
  explicit Reader(const std::vector<char>& bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string get_string() {
    const auto n = get<std::uint64_t>();
    need(n);
    std::string s(bytes_.data() + pos_, n);
    pos_ += n;
    return s;
  }

  void get_raw(void* dst, std::size_t n) {
    need(n);
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }

  [[nodiscard]] bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::uint64_t n) const {
    if (n > bytes_.size() - pos_) throw CheckpointError("checkpoint is truncated");
  }

  const std::vector<char>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<char> checkpoint_bytes(const BeliefModel& model) {
  std::vector<char> out(std::begin(kMagic), std::end(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put_string(out, to_yaml(model.config));
  put<std::uint64_t>(out, model.params.group_count());
  for (const auto& [name, arr] : model.params) {
    put_string(out, name);
    put<std::uint64_t>(out, arr.shape.size());
    for (std::size_t d : arr.shape) put<std::uint64_t>(out, d);
    put<std::uint64_t>(out, arr.data.size());
    const auto* p = reinterpret_cast<const char*>(arr.data.data());
    out.insert(out.end(), p, p + arr.data.size() * sizeof(double));
  }
  return out;
}

BeliefModel checkpoint_from_bytes(const std::vector<char>& bytes) {
  Reader r(bytes);
  char magic[8];
  r.get_raw(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(magic)) != 0) throw CheckpointError("not a model checkpoint (bad magic)");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  BeliefModel m;
  try {
    m.config = parse_model_config(r.get_string());
  } catch (const CheckpointError&) {
    throw;
  } catch (const std::exception& e) {
    throw CheckpointError(std::string("bad config header: ") + e.what());
  }
  const auto groups = r.get<std::uint64_t>();
  for (std::uint64_t g = 0; g < groups; ++g) {
    std::string name = r.get_string();
    const auto rank = r.get<std::uint64_t>();
    if (rank > 8) throw CheckpointError("group '" + name + "' has implausible rank");
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = r.get<std::uint64_t>();
    const auto count = r.get<std::uint64_t>();
    if (count != numkit::shape_size(shape)) throw CheckpointError("group '" + name + "' size does not match shape");
    if (count > bytes.size() / sizeof(double)) throw CheckpointError("checkpoint is truncated");
    std::vector<double> data(count);
    r.get_raw(data.data(), count * sizeof(double));
    m.params.add(std::move(name), numkit::DenseArray(std::move(shape), std::move(data)));
  }
  if (!r.done()) throw CheckpointError("trailing bytes after parameter groups");
  try {
    m.check();
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("checkpoint does not match its config: ") + e.what());
  }
  return m;
}

void save_checkpoint(const std::string& path, const BeliefModel& model) {
  const std::vector<char> bytes = checkpoint_bytes(model);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw CheckpointError("cannot open '" + path + "' for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw CheckpointError("write to '" + path + "' failed");
}

BeliefModel load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("cannot open checkpoint '" + path + "'");
  const std::vector<char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return checkpoint_from_bytes(bytes);
}

}  // namespace nbf::beliefmodel
