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

#include "nbf/numkit/dense_array.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace nbf::numkit {

std::size_t shape_size(const std::vector<std::size_t>& shape) noexcept {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

DenseArray::DenseArray(std::vector<std::size_t> s, double fill)
    : shape(std::move(s)), data(shape_size(shape), fill) {}

DenseArray::DenseArray(std::vector<std::size_t> s, std::vector<double> d)
    : shape(std::move(s)), data(std::move(d)) {
  if (shape_size(shape) != data.size()) {
    throw std::invalid_argument("DenseArray: shape " + shape_string() + " does not match " +
                                std::to_string(data.size()) + " values");
  }
}

std::size_t DenseArray::rows() const noexcept { return shape.empty() ? 1 : shape.front(); }

std::size_t DenseArray::cols() const noexcept {
  std::size_t n = 1;
  for (std::size_t i = 1; i < shape.size(); ++i) n *= shape[i];
  return n;
}

std::string DenseArray::shape_string() const {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) out << (i ? "," : "") << shape[i];
  out << ']';
  return out.str();
}

void ParamSet::add(std::string name, DenseArray value) {
  if (contains(name)) throw std::invalid_argument("ParamSet: duplicate group '" + name + "'");
  entries_.emplace_back(std::move(name), std::move(value));
}

bool ParamSet::contains(std::string_view name) const noexcept {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const Entry& e) { return e.first == name; });
}

const DenseArray& ParamSet::at(std::string_view name) const {
  for (const auto& [key, value] : entries_) {
    if (key == name) return value;
  }
  throw std::out_of_range("ParamSet: no group '" + std::string(name) + "'");
}

DenseArray& ParamSet::at(std::string_view name) {
  return const_cast<DenseArray&>(static_cast<const ParamSet&>(*this).at(name));
}

std::size_t ParamSet::total_size() const noexcept {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.second.size();
  return n;
}

ParamSet ParamSet::zeros_like() const {
  ParamSet out;
  for (const auto& [key, value] : entries_) out.add(key, DenseArray(value.shape, 0.0));
  return out;
}

void ParamSet::check_same_layout(const ParamSet& other, std::string_view what) const {
  if (other.entries_.size() != entries_.size()) {
    throw std::invalid_argument(std::string(what) + ": group count mismatch");
  }
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& a = entries_[i];
    const auto& b = other.entries_[i];
    if (a.first != b.first || a.second.shape != b.second.shape) {
      throw std::invalid_argument(std::string(what) + ": group '" + a.first + "' " +
                                  a.second.shape_string() + " vs '" + b.first + "' " +
                                  b.second.shape_string());
    }
  }
}

}  // namespace nbf::numkit
