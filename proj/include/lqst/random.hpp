// Copyright 2026 The LQST Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <random>

namespace lqst {

using Rng = std::mt19937_64;

/// Independent generator for stream `stream` (and optional sub-stream) of a
/// master seed. Streams with different ids never share a seed sequence.
inline Rng derive_stream(std::uint64_t master_seed, std::uint64_t stream, std::uint64_t sub = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(stream),      static_cast<std::uint32_t>(stream >> 32),
                    static_cast<std::uint32_t>(sub),         static_cast<std::uint32_t>(sub >> 32)};
  return Rng(seq);
}

}  // namespace lqst
