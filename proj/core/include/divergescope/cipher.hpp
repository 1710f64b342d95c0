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

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "divergescope/corpus.hpp"

namespace divergescope {

// Synthetic bitext with a known word-level ground truth: every source word
// "e<k>" translates to exactly one target word "f<perm[k]>". Used as a test
// fixture throughout, and as the `pipeline` demo corpus.
struct CipherOptions {
  std::size_t pairs = 2000;
  std::size_t vocab = 50;
  std::size_t min_length = 3;
  std::size_t max_length = 12;
  // Per-target-token corruption probability. A corrupted token is replaced by
  // a uniformly drawn target word, dropped, or followed by an inserted random
  // word, each with equal probability.
  double noise = 0.1;
  // Source words are drawn from a Zipf distribution with this exponent.
  double zipf_exponent = 1.0;
  // Probability of swapping each adjacent target-word pair (0 = monotone).
  double swap_probability = 0.0;
  std::uint64_t seed = 1;
};

struct CipherCorpus {
  std::vector<SentencePair> pairs;
  std::map<std::string, std::string> cipher;  // source word -> target word
};

CipherCorpus make_cipher_corpus(const CipherOptions& options);

}  // namespace divergescope
