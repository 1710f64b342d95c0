// Copyright 2026 The divergescope Authors
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

// Shared test fixtures: the per-op gradient-check table and small VDPWI
// setups, used by unit tests and the acceptance binary.

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "divergescope/autodiff.hpp"
#include "divergescope/cipher.hpp"
#include "divergescope/embed.hpp"
#include "divergescope/vdpwi.hpp"

namespace fixtures {

using divergescope::ad::Shape;
using divergescope::ad::Tensor;

// Projects an op's output onto fixed random weights so every output cell
// contributes a distinct gradient.
Tensor project(const Tensor& out, std::uint64_t seed);

struct OpCase {
  std::string name;
  std::vector<Shape> shapes;
  std::function<Tensor(std::span<const Tensor>)> op;
  std::function<bool(std::span<const Tensor>)> near_kink;
  double low = -1.0;
  double high = 1.0;
  bool scalar_output = false;
};

// One entry per op kind (and per notable axis or broadcast variant).
std::vector<OpCase> op_cases();

// Worst relative error over `trials` seeded grad checks of one case.
double worst_op_error(const OpCase& c, std::size_t trials, std::uint64_t salt);

// Embedding 4, hidden 3, grid 8, one conv stage pooling straight to 1x1.
divergescope::VdpwiConfig tiny_config();

// Each cipher translation pair gets nearly identical random vectors.
divergescope::EmbeddingTable cipher_embeddings(const divergescope::CipherCorpus& corpus, std::size_t dim,
                                               std::uint64_t seed);

// Worst relative error of the end-to-end KL gradient over every parameter
// of a fresh tiny model, for both labels of each pair of a 3-pair cipher.
double tiny_vdpwi_worst_error();

}  // namespace fixtures
