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

#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <span>

namespace nbf::numkit {

/// Counter-based random stream (Philox4x32-10). Streams are identified by
/// (seed, stream_id); a stream is a pure function of its key and the number
/// of values drawn so far, so independent tasks can be given their own
/// stream without any shared state.
///
/// Not thread-safe: give each concurrent task its own stream via split().
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream_id) noexcept;

  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
  [[nodiscard]] std::uint64_t stream_id() const noexcept { return stream_id_; }
  [[nodiscard]] std::uint64_t counter() const noexcept { return counter_; }

  std::uint64_t next_u64() noexcept;
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Uniform integer on [0, n). n must be > 0.
  std::uint64_t uniform_int(std::uint64_t n) noexcept;
  /// Standard normal draw (Box-Muller).
  double normal() noexcept;
  double normal(double mean, double stddev) noexcept { return mean + stddev * normal(); }
  /// Draws index i with probability w[i] / sum(w). Throws std::invalid_argument
  /// on negative, non-finite, or all-zero weights.
  std::size_t categorical(std::span<const double> weights);

  /// Child stream whose key depends on this stream's key and `child_id`,
  /// but not on how many values this stream has produced.
  [[nodiscard]] RngStream split(std::uint64_t child_id) const noexcept;

  // UniformRandomBitGenerator interface.
  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }
  result_type operator()() noexcept { return next_u64(); }

 private:
  void refill() noexcept;

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::array<std::uint32_t, 2> key_{};
  std::uint64_t counter_ = 0;  // number of 128-bit blocks generated
  std::array<std::uint32_t, 4> block_{};
  int block_pos_ = 4;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

}  // namespace nbf::numkit
