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

#include "divergescope/embed.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "divergescope/error.hpp"

namespace divergescope {

std::string_view language_tag(Language language) { return language == Language::kE ? "e:" : "f:"; }

std::string tagged(Language language, std::string_view word) {
  std::string key(language_tag(language));
  key += word;
  return key;
}

namespace {

bool has_language_tag(std::string_view key) {
  return key.size() > 2 && (key.starts_with("e:") || key.starts_with("f:"));
}

}  // namespace

EmbeddingTable::EmbeddingTable(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw UsageError("embedding dimension must be positive");
}

bool EmbeddingTable::insert(const std::string& key, std::vector<double> vector) {
  if (!has_language_tag(key)) throw DataError(fmt::format("embedding key '{}' lacks an e:/f: tag", key));
  if (vector.size() != dim_) {
    throw DataError(fmt::format("vector for '{}' has {} values, expected {}", key, vector.size(), dim_));
  }
  for (double v : vector) {
    if (!std::isfinite(v)) throw NumericalError(fmt::format("non-finite component in vector for '{}'", key));
  }
  return vectors_.insert_or_assign(key, std::move(vector)).second;
}

const std::vector<double>* EmbeddingTable::find(std::string_view key) const {
  const auto it = vectors_.find(std::string(key));
  return it == vectors_.end() ? nullptr : &it->second;
}

const std::vector<double>* EmbeddingTable::find(Language language, std::string_view word) const {
  return find(tagged(language, word));
}

void save_embeddings(std::ostream& out, const EmbeddingTable& table) {
  std::vector<const std::string*> keys;
  for (const auto& [key, vec] : table.vectors()) keys.push_back(&key);
  std::sort(keys.begin(), keys.end(), [](const auto* a, const auto* b) { return *a < *b; });
  out << table.size() << ' ' << table.dim() << '\n';
  for (const auto* key : keys) {
    out << *key;
    for (double v : *table.find(*key)) out << ' ' << fmt::format("{:.6f}", v);
    out << '\n';
  }
}

void save_embeddings_file(const std::filesystem::path& path, const EmbeddingTable& table) {
  std::ofstream out(path);
  if (!out) throw DataError(fmt::format("cannot write embeddings to {}", path.string()));
  save_embeddings(out, table);
}

EmbeddingTable load_embeddings(std::istream& in, std::vector<std::string>* warnings) {
  std::string line;
  if (!std::getline(in, line) || line.find_first_not_of(" \t\r") == std::string::npos) {
    throw DataError("embedding file: missing header");
  }
  std::istringstream header(line);
  long long count = 0;
  long long dim = 0;
  if (!(header >> count >> dim) || count < 0) throw DataError(fmt::format("embedding file: bad header '{}'", line));
  if (dim <= 0) throw DataError(fmt::format("embedding file: dimension must be positive, got {}", dim));
  EmbeddingTable table(static_cast<std::size_t>(dim));
  std::size_t line_number = 1;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream row(line);
    std::string key;
    row >> key;
    std::vector<double> values;
    std::string token;
    while (row >> token) {
      double v = 0.0;
      try {
        std::size_t used = 0;
        v = std::stod(token, &used);
        if (used != token.size()) throw std::invalid_argument(token);
      } catch (const std::exception&) {
        throw DataError(fmt::format("embedding file line {}: bad value '{}'", line_number, token));
      }
      values.push_back(v);
    }
    if (values.size() != table.dim()) {
      throw DataError(fmt::format("embedding file line {}: {} values for dimension {}", line_number, values.size(),
                                  table.dim()));
    }
    try {
      if (!table.insert(key, std::move(values)) && warnings) {
        warnings->push_back(fmt::format("embedding file line {}: duplicate token '{}', keeping the last", line_number, key));
      }
    } catch (const Error& e) {
      throw DataError(fmt::format("embedding file line {}: {}", line_number, e.what()));
    }
    ++rows;
  }
  if (rows != static_cast<std::size_t>(count) && warnings) {
    warnings->push_back(fmt::format("embedding file header declares {} rows, found {}", count, rows));
  }
  return table;
}

EmbeddingTable load_embeddings_file(const std::filesystem::path& path, std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open embeddings {}", path.string()));
  return load_embeddings(in, warnings);
}

namespace {

// Word2vec-style trainer state. Indices cover both languages.
class SkipGram {
 public:
  SkipGram(std::size_t vocab, std::size_t dim, std::mt19937_64& rng) : dim_(dim), input_(vocab * dim), output_(vocab * dim, 0.0) {
    std::uniform_real_distribution<double> init(-0.5 / static_cast<double>(dim), 0.5 / static_cast<double>(dim));
    for (auto& v : input_) v = init(rng);
    scratch_.resize(dim);
  }

  // One positive context plus `negatives` noise words drawn from `noise`.
  void update(int center, int context, std::discrete_distribution<int>& noise, const std::vector<int>& noise_ids,
              std::size_t negatives, double lr, std::mt19937_64& rng) {
    std::fill(scratch_.begin(), scratch_.end(), 0.0);
    double* w = &input_[static_cast<std::size_t>(center) * dim_];
    for (std::size_t k = 0; k <= negatives; ++k) {
      int target = context;
      double label = 1.0;
      if (k > 0) {
        target = noise_ids[static_cast<std::size_t>(noise(rng))];
        if (target == context) continue;
        label = 0.0;
      }
      double* c = &output_[static_cast<std::size_t>(target) * dim_];
      double dot = 0.0;
      for (std::size_t d = 0; d < dim_; ++d) dot += w[d] * c[d];
      dot = std::clamp(dot, -30.0, 30.0);
      const double g = (label - 1.0 / (1.0 + std::exp(-dot))) * lr;
      for (std::size_t d = 0; d < dim_; ++d) {
        scratch_[d] += g * c[d];
        c[d] += g * w[d];
      }
    }
    for (std::size_t d = 0; d < dim_; ++d) w[d] += scratch_[d];
  }

  std::vector<double> vector(int id) const {
    const auto begin = input_.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(id) * dim_);
    return {begin, begin + static_cast<std::ptrdiff_t>(dim_)};
  }

 private:
  std::size_t dim_;
  std::vector<double> input_;
  std::vector<double> output_;
  std::vector<double> scratch_;
};

struct NoiseTable {
  std::vector<int> ids;
  std::discrete_distribution<int> draw;
};

NoiseTable make_noise(const std::vector<int>& ids, const std::vector<std::size_t>& counts) {
  std::vector<double> weights;
  for (int id : ids) weights.push_back(std::pow(static_cast<double>(counts[static_cast<std::size_t>(id)]), 0.75));
  return {ids, std::discrete_distribution<int>(weights.begin(), weights.end())};
}

}  // namespace

EmbeddingTable train_bilingual_embeddings(const std::vector<SentencePair>& pairs,
                                          const std::vector<Alignment>& alignments,
                                          const EmbeddingOptions& options, std::vector<std::string>* warnings) {
  if (options.dim == 0) throw UsageError("embedding dimension must be positive");
  if (options.window == 0) throw UsageError("embedding window must be positive");
  if (!(options.learning_rate > 0)) throw UsageError("embedding learning rate must be positive");
  if (pairs.empty()) throw DataError("no sentence pairs to train embeddings on");
  const bool cross = !alignments.empty();
  if (!cross && warnings) warnings->push_back("no alignments given; training monolingual streams only");
  if (cross && alignments.size() != pairs.size()) {
    throw UsageError(fmt::format("{} alignments for {} pairs", alignments.size(), pairs.size()));
  }

  std::map<std::string, int> index;
  std::vector<std::string> keys;
  std::vector<std::size_t> counts;
  auto id_of = [&](Language lang, const std::string& word) {
    auto [it, fresh] = index.try_emplace(tagged(lang, word), static_cast<int>(keys.size()));
    if (fresh) {
      keys.push_back(it->first);
      counts.push_back(0);
    }
    ++counts[static_cast<std::size_t>(it->second)];
    return it->second;
  };
  std::vector<std::vector<int>> e_ids(pairs.size());
  std::vector<std::vector<int>> f_ids(pairs.size());
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    for (const auto& w : pairs[p].e_tokens) e_ids[p].push_back(id_of(Language::kE, w));
    for (const auto& w : pairs[p].f_tokens) f_ids[p].push_back(id_of(Language::kF, w));
    if (cross) {
      const auto& a = alignments[p];
      if (a.e_len != static_cast<int>(e_ids[p].size()) || a.f_len != static_cast<int>(f_ids[p].size())) {
        throw DataError(fmt::format("alignment {} does not match its pair's lengths", p));
      }
    }
  }
  std::vector<int> e_vocab;
  std::vector<int> f_vocab;
  for (std::size_t id = 0; id < keys.size(); ++id) {
    (keys[id].starts_with("e:") ? e_vocab : f_vocab).push_back(static_cast<int>(id));
  }

  std::mt19937_64 rng(options.seed);
  SkipGram model(keys.size(), options.dim, rng);
  NoiseTable e_noise = make_noise(e_vocab, counts);
  NoiseTable f_noise = make_noise(f_vocab, counts);

  const std::size_t window = options.window;
  const double total_steps = static_cast<double>(options.epochs * pairs.size());
  std::size_t step = 0;
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);

  // Monolingual window around each center, center excluded.
  auto mono = [&](const std::vector<int>& ids, NoiseTable& noise, double lr) {
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const std::size_t lo = i >= window ? i - window : 0;
      const std::size_t hi = std::min(ids.size(), i + window + 1);
      for (std::size_t k = lo; k < hi; ++k) {
        if (k != i) model.update(ids[i], ids[k], noise.draw, noise.ids, options.negatives, lr, rng);
      }
    }
  };
  // The center's window, center excluded, mapped through `links` into the
  // other sentence. Excluding the center keeps the cross-lingual contexts of
  // a word and of its translation the same.
  auto projected = [&](const std::vector<int>& centers, const std::vector<int>& others,
                       const std::vector<std::vector<int>>& links, NoiseTable& noise, double lr) {
    std::vector<int> context;
    for (std::size_t i = 0; i < centers.size(); ++i) {
      context.clear();
      const std::size_t lo = i >= window ? i - window : 0;
      const std::size_t hi = std::min(centers.size(), i + window + 1);
      for (std::size_t k = lo; k < hi; ++k) {
        if (k != i) context.insert(context.end(), links[k].begin(), links[k].end());
      }
      std::sort(context.begin(), context.end());
      context.erase(std::unique(context.begin(), context.end()), context.end());
      for (int j : context) {
        model.update(centers[i], others[static_cast<std::size_t>(j)], noise.draw, noise.ids, options.negatives, lr, rng);
      }
    }
  };

  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t p : order) {
      const double lr =
          options.learning_rate * std::max(1e-4, 1.0 - static_cast<double>(step++) / total_steps);
      mono(e_ids[p], e_noise, lr);
      mono(f_ids[p], f_noise, lr);
      if (!cross) continue;
      std::vector<std::vector<int>> e_links(e_ids[p].size());
      std::vector<std::vector<int>> f_links(f_ids[p].size());
      for (const auto& [i, j] : alignments[p].links) {
        e_links[static_cast<std::size_t>(i)].push_back(j);
        f_links[static_cast<std::size_t>(j)].push_back(i);
      }
      projected(e_ids[p], f_ids[p], e_links, f_noise, lr);
      projected(f_ids[p], e_ids[p], f_links, e_noise, lr);
    }
  }

  EmbeddingTable table(options.dim);
  for (std::size_t id = 0; id < keys.size(); ++id) table.insert(keys[id], model.vector(static_cast<int>(id)));
  return table;
}

SentenceEmbedding sentence_embedding(const Tokens& tokens, const EmbeddingTable& table, Language language) {
  SentenceEmbedding out{std::vector<double>(table.dim(), 0.0), true};
  std::size_t found = 0;
  for (const auto& word : tokens) {
    const auto* v = table.find(language, word);
    if (!v) continue;
    ++found;
    for (std::size_t d = 0; d < v->size(); ++d) out.vector[d] += (*v)[d];
  }
  if (found > 0) {
    out.all_oov = false;
    for (auto& x : out.vector) x /= static_cast<double>(found);
  }
  return out;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t d = 0; d < a.size() && d < b.size(); ++d) {
    dot += a[d] * b[d];
    na += a[d] * a[d];
    nb += b[d] * b[d];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

double cosine_score(const SentencePair& pair, const EmbeddingTable& table) {
  return cosine(sentence_embedding(pair.e_tokens, table, Language::kE).vector,
                sentence_embedding(pair.f_tokens, table, Language::kF).vector);
}

}  // namespace divergescope
