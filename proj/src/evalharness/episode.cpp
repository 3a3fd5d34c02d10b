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

#include "nbf/evalharness/episode.hpp"

#include <charconv>

namespace nbf::evalharness {

std::string FilterSpec::label() const {
  switch (kind) {
    case FilterKind::kOracle:
      return "oracle";
    case FilterKind::kParticle:
      return "pf:" + std::to_string(n);
    case FilterKind::kNeural:
      return "nbf:" + std::to_string(n);
    case FilterKind::kApprox:
      return "approx:" + std::to_string(n);
  }
  return {};
}

FilterSpec parse_filter(const std::string& text) {
  if (text == "oracle") return {FilterKind::kOracle, 0};
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("unknown filter '" + text + "'");
  const std::string name = text.substr(0, colon);
  const std::string count = text.substr(colon + 1);
  FilterSpec f;
  if (name == "pf") {
    f.kind = FilterKind::kParticle;
  } else if (name == "nbf") {
    f.kind = FilterKind::kNeural;
  } else if (name == "approx" || name == "approx_beliefs") {
    f.kind = FilterKind::kApprox;
  } else {
    throw std::invalid_argument("unknown filter '" + text + "'");
  }
  const auto res = std::from_chars(count.data(), count.data() + count.size(), f.n);
  if (count.empty() || res.ec != std::errc{} || res.ptr != count.data() + count.size() || f.n < 1) {
    throw std::invalid_argument("bad particle count in filter '" + text + "'");
  }
  return f;
}

std::vector<FilterSpec> parse_roster(const std::string& comma_separated) {
  std::vector<FilterSpec> out;
  std::size_t start = 0;
  while (start <= comma_separated.size()) {
    const auto end = comma_separated.find(',', start);
    std::string item = comma_separated.substr(start, end == std::string::npos ? std::string::npos : end - start);
    const auto first = item.find_first_not_of(" \t");
    const auto last = item.find_last_not_of(" \t");
    item = first == std::string::npos ? std::string{} : item.substr(first, last - first + 1);
    out.push_back(parse_filter(item));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (out[i] == out[j]) throw std::invalid_argument("duplicate filter '" + out[i].label() + "' in roster");
    }
  }
  return out;
}

void append_rows(std::vector<EpisodeRow>& rows, const EpisodeResult& result, const std::vector<FilterSpec>& roster,
                 const std::string& env, const std::string& condition, std::uint64_t seed, int episode) {
  if (result.filters.size() != roster.size()) throw std::invalid_argument("append_rows: roster size mismatch");
  const std::size_t steps = roster.empty() ? 0 : result.filters.front().js.size();
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t f = 0; f < roster.size(); ++f) {
      const FilterTrace& tr = result.filters[f];
      rows.push_back({env, condition, roster[f].label(), seed, episode, static_cast<int>(t), tr.js.at(t),
                      static_cast<bool>(tr.failed.at(t))});
    }
  }
}

}  // namespace nbf::evalharness
