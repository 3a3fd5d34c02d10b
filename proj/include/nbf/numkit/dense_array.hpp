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

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace nbf::numkit {

/// Row-major array of doubles with an explicit shape.
struct DenseArray {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  DenseArray() = default;
  explicit DenseArray(std::vector<std::size_t> shape, double fill = 0.0);
  DenseArray(std::vector<std::size_t> shape, std::vector<double> data);

  [[nodiscard]] std::size_t size() const noexcept { return data.size(); }
  [[nodiscard]] std::size_t rank() const noexcept { return shape.size(); }
  /// Leading dimension; 1 for scalars.
  [[nodiscard]] std::size_t rows() const noexcept;
  /// Product of all trailing dimensions; 1 for rank <= 1.
  [[nodiscard]] std::size_t cols() const noexcept;
  [[nodiscard]] std::string shape_string() const;

  bool operator==(const DenseArray&) const = default;
};

[[nodiscard]] std::size_t shape_size(const std::vector<std::size_t>& shape) noexcept;

/// Named parameter groups in a fixed (insertion) order. The order is the
/// canonical order used by checkpoints and optimizers.
class ParamSet {
 public:
  using Entry = std::pair<std::string, DenseArray>;

  void add(std::string name, DenseArray value);
  [[nodiscard]] bool contains(std::string_view name) const noexcept;
  [[nodiscard]] const DenseArray& at(std::string_view name) const;
  [[nodiscard]] DenseArray& at(std::string_view name);

  [[nodiscard]] std::size_t group_count() const noexcept { return entries_.size(); }
  [[nodiscard]] std::size_t total_size() const noexcept;
  [[nodiscard]] ParamSet zeros_like() const;
  /// Throws std::invalid_argument unless `other` has the same groups and shapes.
  void check_same_layout(const ParamSet& other, std::string_view what) const;

  [[nodiscard]] auto begin() const noexcept { return entries_.begin(); }
  [[nodiscard]] auto end() const noexcept { return entries_.end(); }
  [[nodiscard]] auto begin() noexcept { return entries_.begin(); }
  [[nodiscard]] auto end() noexcept { return entries_.end(); }

  bool operator==(const ParamSet&) const = default;

 private:
  std::vector<Entry> entries_;
};

}  // namespace nbf::numkit
