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

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "nbf/beliefmodel/model.hpp"

namespace nbf::beliefmodel {

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Layout (little-endian):
///   "NBFMODEL" | u32 version | u64 n + n bytes of config YAML |
///   u64 groups | per group: u64 n + name, u64 rank, rank x u64 dims,
///   u64 count, count x f64.
std::vector<char> checkpoint_bytes(const BeliefModel& model);
BeliefModel checkpoint_from_bytes(const std::vector<char>& bytes);

void save_checkpoint(const std::string& path, const BeliefModel& model);
/// Throws CheckpointError on I/O failure, a bad header, truncation, or
/// parameters that do not fit the stored config.
BeliefModel load_checkpoint(const std::string& path);

}  // namespace nbf::beliefmodel
