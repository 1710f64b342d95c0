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

#include "divergescope/align.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "divergescope/error.hpp"

namespace divergescope {
namespace {

constexpr std::size_t kChunkSize = 256;

struct EncodedPair {
  std::vector<int> source;  // without NULL
  std::vector<int> target;
};

const Tokens& source_side(const SentencePair& p, Direction d) {
  return d == Direction::kEtoF ? p.e_tokens : p.f_tokens;
}

const Tokens& target_side(const SentencePair& p, Direction d) {
  return d == Direction::kEtoF ? p.f_tokens : p.e_tokens;
}

std::vector<EncodedPair> encode_growing(const std::vector<SentencePair>& pairs, Direction d,
                                        TranslationTable& table) {
  std::vector<EncodedPair> encoded;
  encoded.reserve(pairs.size());
  for (const auto& p : pairs) {
    EncodedPair ep;
    for (const auto& w : source_side(p, d)) ep.source.push_back(table.source.add(w));
    for (const auto& w : target_side(p, d)) ep.target.push_back(table.target.add(w));
    encoded.push_back(std::move(ep));
  }
  return encoded;
}

std::vector<EncodedPair> encode_fixed(const std::vector<SentencePair>& pairs, Direction d,
                                      const TranslationTable& table) {
  std::vector<EncodedPair> encoded;
  encoded.reserve(pairs.size());
  for (const auto& p : pairs) {
    EncodedPair ep;
    for (const auto& w : source_side(p, d)) {
      auto id = table.source.find(w);
      if (!id) throw UsageError(fmt::format("initial table does not cover source word '{}'", w));
      ep.source.push_back(*id);
    }
    for (const auto& w : target_side(p, d)) {
      auto id = table.target.find(w);
      if (!id) throw UsageError(fmt::format("initial table does not cover target word '{}'", w));
      ep.target.push_back(*id);
    }
    encoded.push_back(std::move(ep));
  }
  return encoded;
}

std::uint64_t pack(int s, int t) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(s)) << 32) |
         static_cast<std::uint32_t>(t);
}

struct ChunkCounts {
  std::unordered_map<std::uint64_t, double> lexical;
  std::map<AlignKey, std::vector<double>> positional;
  double log_likelihood = 0.0;
};

// One E-step pass over pairs[begin, end). With `model_alignment` false the
// positional distribution is the Model 1 uniform one.
void expect_chunk(const std::vector<EncodedPair>& corpus, std::size_t begin, std::size_t end,
                  const Ibm2Model& model, bool model_alignment, bool collect,
                  ChunkCounts& out) {
  std::vector<double> joint;
  for (std::size_t n = begin; n < end; ++n) {
    const auto& ep = corpus[n];
    const int ls = static_cast<int>(ep.source.size());
    const int lt = static_cast<int>(ep.target.size());
    joint.assign(static_cast<std::size_t>(ls) + 1, 0.0);
    for (int i = 0; i < lt; ++i) {
      const AlignKey key{i, ls, lt};
      const int t = ep.target[static_cast<std::size_t>(i)];
      double total = 0.0;
      for (int j = 0; j <= ls; ++j) {
        const int s = j == 0 ? Vocabulary::kNull : ep.source[static_cast<std::size_t>(j - 1)];
        const double a = model_alignment ? model.alignment_prob(j, key) : 1.0 / (ls + 1);
        joint[static_cast<std::size_t>(j)] = model.table.prob(s, t) * a;
        total += joint[static_cast<std::size_t>(j)];
      }
      if (!(total > 0.0)) {
        throw NumericalError(fmt::format("EM: zero likelihood for target token {} of pair {}", i, n));
      }
      out.log_likelihood += std::log(total);
      if (!collect) continue;
      std::vector<double>* positional = nullptr;
      if (model_alignment) {
        auto [it, inserted] = out.positional.try_emplace(key);
        if (inserted) it->second.assign(static_cast<std::size_t>(ls) + 1, 0.0);
        positional = &it->second;
      }
      for (int j = 0; j <= ls; ++j) {
        const double posterior = joint[static_cast<std::size_t>(j)] / total;
        const int s = j == 0 ? Vocabulary::kNull : ep.source[static_cast<std::size_t>(j - 1)];
        out.lexical[pack(s, t)] += posterior;
        if (positional) (*positional)[static_cast<std::size_t>(j)] += posterior;
      }
    }
  }
}

// Runs the E-step over fixed-size chunks and reduces them in chunk order.
ChunkCounts expect(const std::vector<EncodedPair>& corpus, const Ibm2Model& model,
                   bool model_alignment, bool collect, std::size_t threads) {
  const std::size_t n_chunks = (corpus.size() + kChunkSize - 1) / kChunkSize;
  threads = std::max<std::size_t>(1, threads);
  ChunkCounts total;
  for (std::size_t batch = 0; batch < n_chunks; batch += threads) {
    const std::size_t batch_end = std::min(n_chunks, batch + threads);
    std::vector<ChunkCounts> partial(batch_end - batch);
    auto run = [&](std::size_t c) {
      const std::size_t begin = c * kChunkSize;
      const std::size_t end = std::min(corpus.size(), begin + kChunkSize);
      expect_chunk(corpus, begin, end, model, model_alignment, collect, partial[c - batch]);
    };
    if (threads == 1) {
      run(batch);
    } else {
      std::vector<std::thread> workers;
      std::vector<std::exception_ptr> errors(batch_end - batch);
      for (std::size_t c = batch; c < batch_end; ++c) {
        workers.emplace_back([&, c] {
          try {
            run(c);
          } catch (...) {
            errors[c - batch] = std::current_exception();
          }
        });
      }
      for (auto& w : workers) w.join();
      for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
    }
    for (auto& p : partial) {
      total.log_likelihood += p.log_likelihood;
      for (const auto& [k, v] : p.lexical) total.lexical[k] += v;
      for (auto& [k, v] : p.positional) {
        auto [it, inserted] = total.positional.try_emplace(k, v.size(), 0.0);
        for (std::size_t j = 0; j < v.size(); ++j) it->second[j] += v[j];
      }
    }
  }
  return total;
}

void maximize_lexical(const ChunkCounts& counts, TranslationTable& table) {
  // Sum per row in table order, not hash order, to keep the reduction fixed.
  for (std::size_t s = 0; s < table.rows.size(); ++s) {
    std::vector<std::pair<int, double>> entries;
    entries.reserve(table.rows[s].size());
    for (const auto& [t, _] : table.rows[s]) {
      auto it = counts.lexical.find(pack(static_cast<int>(s), t));
      entries.emplace_back(t, it == counts.lexical.end() ? 0.0 : it->second);
    }
    std::sort(entries.begin(), entries.end());
    double sum = 0.0;
    for (const auto& e : entries) sum += e.second;
    if (sum <= 0.0) continue;
    for (const auto& [t, c] : entries) table.rows[s][t] = c / sum;
  }
}

void maximize_positional(const ChunkCounts& counts, Ibm2Model& model) {
  for (const auto& [key, c] : counts.positional) {
    double sum = 0.0;
    for (double v : c) sum += v;
    if (sum <= 0.0) continue;
    std::vector<double> p(c.size());
    for (std::size_t j = 0; j < c.size(); ++j) p[j] = c[j] / sum;
    model.align_prob[key] = std::move(p);
  }
}

// Unknown words become -1: zero probability as a source, skipped as a target.
EncodedPair encode_for_viterbi(const SentencePair& pair, const Ibm2Model& model,
                               std::size_t& oov) {
  EncodedPair ep;
  for (const auto& w : source_side(pair, model.direction)) {
    ep.source.push_back(model.table.source.find(w).value_or(-1));
  }
  for (const auto& w : target_side(pair, model.direction)) {
    auto id = model.table.target.find(w);
    if (!id) ++oov;
    ep.target.push_back(id.value_or(-1));
  }
  return ep;
}

}  // namespace

std::string_view direction_name(Direction d) { return d == Direction::kEtoF ? "e2f" : "f2e"; }

Vocabulary::Vocabulary() {
  words_.emplace_back(kNullWord);
  ids_.emplace(std::string(kNullWord), kNull);
}

int Vocabulary::add(std::string_view word) {
  auto it = ids_.find(std::string(word));
  if (it != ids_.end()) return it->second;
  const int id = static_cast<int>(words_.size());
  words_.emplace_back(word);
  ids_.emplace(std::string(word), id);
  return id;
}

std::optional<int> Vocabulary::find(std::string_view word) const {
  auto it = ids_.find(std::string(word));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

double TranslationTable::prob(int source_id, int target_id) const {
  if (source_id < 0 || target_id < 0 || static_cast<std::size_t>(source_id) >= rows.size()) {
    return 0.0;
  }
  const auto& row = rows[static_cast<std::size_t>(source_id)];
  auto it = row.find(target_id);
  return it == row.end() ? 0.0 : it->second;
}

double TranslationTable::prob(std::string_view source_word, std::string_view target_word) const {
  auto s = source.find(source_word);
  auto t = target.find(target_word);
  if (!s || !t) return 0.0;
  return prob(*s, *t);
}

std::optional<std::string> TranslationTable::best_translation(std::string_view source_word) const {
  auto s = source.find(source_word);
  if (!s || static_cast<std::size_t>(*s) >= rows.size()) return std::nullopt;
  const std::string* best = nullptr;
  double best_p = -1.0;
  for (const auto& [t, p] : rows[static_cast<std::size_t>(*s)]) {
    const auto& w = target.word(t);
    if (p > best_p || (p == best_p && w < *best)) {
      best = &w;
      best_p = p;
    }
  }
  if (!best) return std::nullopt;
  return *best;
}

double Ibm2Model::alignment_prob(int j, const AlignKey& key) const {
  auto it = align_prob.find(key);
  if (it == align_prob.end()) return 1.0 / (key.source_length + 1);
  return it->second[static_cast<std::size_t>(j)];
}

Ibm1Result train_ibm1(const std::vector<SentencePair>& pairs, Direction direction,
                      int iterations, const EmOptions& options) {
  if (pairs.empty()) throw UsageError("IBM Model 1 needs a non-empty corpus");
  if (iterations < 0) throw UsageError("iteration count must be non-negative");

  Ibm2Model model;
  model.direction = direction;
  auto& table = model.table;
  const auto corpus = encode_growing(pairs, direction, table);

  // Uniform over co-occurring target words (NULL co-occurs with everything).
  table.rows.assign(table.source.size(), {});
  for (const auto& ep : corpus) {
    for (int t : ep.target) {
      table.rows[Vocabulary::kNull][t] = 0.0;
      for (int s : ep.source) table.rows[static_cast<std::size_t>(s)][t] = 0.0;
    }
  }
  for (auto& row : table.rows) {
    const double u = row.empty() ? 0.0 : 1.0 / static_cast<double>(row.size());
    for (auto& [t, p] : row) p = u;
  }

  Ibm1Result result;
  for (int it = 0; it < iterations; ++it) {
    auto counts = expect(corpus, model, false, true, options.threads);
    result.log_likelihood.push_back(counts.log_likelihood);
    maximize_lexical(counts, table);
  }
  result.log_likelihood.push_back(expect(corpus, model, false, false, options.threads).log_likelihood);
  result.table = std::move(table);
  return result;
}

Ibm2Result train_ibm2(const std::vector<SentencePair>& pairs, Direction direction,
                      int iterations, const TranslationTable& init, const EmOptions& options) {
  if (pairs.empty()) throw UsageError("IBM Model 2 needs a non-empty corpus");
  if (iterations < 0) throw UsageError("iteration count must be non-negative");

  Ibm2Result result;
  auto& model = result.model;
  model.direction = direction;
  model.table = init;
  const auto corpus = encode_fixed(pairs, direction, model.table);

  for (const auto& ep : corpus) {
    const int ls = static_cast<int>(ep.source.size());
    const int lt = static_cast<int>(ep.target.size());
    for (int i = 0; i < lt; ++i) {
      model.align_prob.try_emplace(AlignKey{i, ls, lt}, static_cast<std::size_t>(ls) + 1,
                                   1.0 / (ls + 1));
    }
  }

  for (int it = 0; it < iterations; ++it) {
    auto counts = expect(corpus, model, true, true, options.threads);
    result.log_likelihood.push_back(counts.log_likelihood);
    maximize_lexical(counts, model.table);
    maximize_positional(counts, model);
  }
  result.log_likelihood.push_back(expect(corpus, model, true, false, options.threads).log_likelihood);
  return result;
}

Ibm2Model train_aligner(const std::vector<SentencePair>& pairs, Direction direction,
                        int ibm1_iterations, int ibm2_iterations, const EmOptions& options) {
  auto ibm1 = train_ibm1(pairs, direction, ibm1_iterations, options);
  return train_ibm2(pairs, direction, ibm2_iterations, ibm1.table, options).model;
}

double corpus_log_likelihood(const Ibm2Model& model, const std::vector<SentencePair>& pairs) {
  const auto corpus = encode_fixed(pairs, model.direction, model.table);
  return expect(corpus, model, true, false, 1).log_likelihood;
}

void save_ibm2(std::ostream& out, const Ibm2Model& model) {
  out << "ibm2 " << direction_name(model.direction) << '\n';
  for (const Vocabulary* v : {&model.table.source, &model.table.target}) {
    out << "vocab " << v->size() - 1 << '\n';
    for (std::size_t id = 1; id < v->size(); ++id) out << v->word(static_cast<int>(id)) << '\n';
  }
  std::size_t entries = 0;
  for (const auto& row : model.table.rows) entries += row.size();
  out << "lexical " << entries << '\n';
  for (std::size_t s = 0; s < model.table.rows.size(); ++s) {
    std::vector<std::pair<int, double>> row(model.table.rows[s].begin(), model.table.rows[s].end());
    std::sort(row.begin(), row.end());
    for (const auto& [t, p] : row) out << fmt::format("{} {} {:.17g}\n", s, t, p);
  }
  out << "positional " << model.align_prob.size() << '\n';
  for (const auto& [key, probs] : model.align_prob) {
    out << key.target_position << ' ' << key.source_length << ' ' << key.target_length;
    for (double p : probs) out << fmt::format(" {:.17g}", p);
    out << '\n';
  }
}

Ibm2Model load_ibm2(std::istream& in) {
  auto fail = [](const std::string& what) { return DataError("aligner model: " + what); };
  auto expect_section = [&](const char* name) {
    std::string word;
    std::size_t count = 0;
    if (!(in >> word >> count) || word != name) throw fail(fmt::format("expected section '{}'", name));
    return count;
  };
  Ibm2Model model;
  std::string tag;
  std::string direction;
  if (!(in >> tag >> direction) || tag != "ibm2") throw fail("missing header");
  if (direction == "e2f") {
    model.direction = Direction::kEtoF;
  } else if (direction == "f2e") {
    model.direction = Direction::kFtoE;
  } else {
    throw fail("unknown direction " + direction);
  }
  for (Vocabulary* v : {&model.table.source, &model.table.target}) {
    const std::size_t n = expect_section("vocab");
    for (std::size_t i = 0; i < n; ++i) {
      std::string word;
      if (!(in >> word)) throw fail("truncated vocabulary");
      if (static_cast<std::size_t>(v->add(word)) != i + 1) throw fail("duplicate vocabulary word " + word);
    }
  }
  model.table.rows.resize(model.table.source.size());
  const std::size_t entries = expect_section("lexical");
  for (std::size_t k = 0; k < entries; ++k) {
    std::size_t s = 0;
    int t = 0;
    double p = 0.0;
    if (!(in >> s >> t >> p)) throw fail("truncated lexical table");
    if (s >= model.table.rows.size() || t < 0 || static_cast<std::size_t>(t) >= model.table.target.size()) {
      throw fail("lexical entry out of range");
    }
    model.table.rows[s][t] = p;
  }
  const std::size_t keys = expect_section("positional");
  for (std::size_t k = 0; k < keys; ++k) {
    AlignKey key{};
    if (!(in >> key.target_position >> key.source_length >> key.target_length) || key.source_length < 0) {
      throw fail("truncated positional table");
    }
    std::vector<double> probs(static_cast<std::size_t>(key.source_length) + 1);
    for (auto& p : probs) {
      if (!(in >> p)) throw fail("truncated positional table");
    }
    model.align_prob.emplace(key, std::move(probs));
  }
  return model;
}

void save_ibm2_file(const std::filesystem::path& path, const Ibm2Model& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(fmt::format("cannot write {}", path.string()));
  save_ibm2(out, model);
}

Ibm2Model load_ibm2_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot read {}", path.string()));
  return load_ibm2(in);
}

ViterbiResult viterbi_align(const Ibm2Model& model, const SentencePair& pair) {
  ViterbiResult result;
  const auto ep = encode_for_viterbi(pair, model, result.oov_tokens);
  const int ls = static_cast<int>(ep.source.size());
  const int lt = static_cast<int>(ep.target.size());
  auto& alignment = result.alignment;
  alignment.e_len = static_cast<int>(pair.e_tokens.size());
  alignment.f_len = static_cast<int>(pair.f_tokens.size());

  for (int i = 0; i < lt; ++i) {
    const int t = ep.target[static_cast<std::size_t>(i)];
    if (t < 0) continue;
    const AlignKey key{i, ls, lt};
    int best_j = 0;
    double best = -1.0;
    for (int j = 0; j <= ls; ++j) {
      const int s = j == 0 ? Vocabulary::kNull : ep.source[static_cast<std::size_t>(j - 1)];
      const double score = model.table.prob(s, t) * model.alignment_prob(j, key);
      if (score > best) {
        best = score;
        best_j = j;
      }
    }
    if (best_j == 0) continue;
    if (model.direction == Direction::kEtoF) {
      alignment.links.emplace(best_j - 1, i);
    } else {
      alignment.links.emplace(i, best_j - 1);
    }
  }
  return result;
}

std::string_view heuristic_name(Heuristic h) {
  switch (h) {
    case Heuristic::kUnion:
      return "union";
    case Heuristic::kIntersection:
      return "intersection";
    case Heuristic::kGrowDiagFinalAnd:
      return "grow-diag-final-and";
  }
  return "?";
}

Heuristic parse_heuristic(std::string_view name) {
  for (auto h : kAllHeuristics) {
    if (heuristic_name(h) == name) return h;
  }
  throw UsageError(fmt::format("unknown symmetrization heuristic '{}'", name));
}

Alignment symmetrize(const Alignment& forward, const Alignment& reverse, Heuristic heuristic) {
  if (forward.e_len != reverse.e_len || forward.f_len != reverse.f_len) {
    throw DataError(fmt::format("symmetrize: length mismatch {}x{} vs {}x{}", forward.e_len,
                                forward.f_len, reverse.e_len, reverse.f_len));
  }
  Alignment out;
  out.e_len = forward.e_len;
  out.f_len = forward.f_len;

  std::set<std::pair<int, int>> united = forward.links;
  united.insert(reverse.links.begin(), reverse.links.end());
  std::set<std::pair<int, int>> common;
  std::set_intersection(forward.links.begin(), forward.links.end(), reverse.links.begin(),
                        reverse.links.end(), std::inserter(common, common.end()));

  if (heuristic == Heuristic::kUnion) {
    out.links = std::move(united);
    return out;
  }
  if (heuristic == Heuristic::kIntersection) {
    out.links = std::move(common);
    return out;
  }

  std::vector<bool> e_aligned(static_cast<std::size_t>(out.e_len), false);
  std::vector<bool> f_aligned(static_cast<std::size_t>(out.f_len), false);
  auto add = [&](int e, int f) {
    out.links.emplace(e, f);
    e_aligned[static_cast<std::size_t>(e)] = true;
    f_aligned[static_cast<std::size_t>(f)] = true;
  };
  for (const auto& [e, f] : common) add(e, f);

  static constexpr std::pair<int, int> kNeighbors[] = {{-1, 0}, {0, -1}, {1, 0},  {0, 1},
                                                       {-1, -1}, {-1, 1}, {1, -1}, {1, 1}};
  bool added = true;
  while (added) {
    added = false;
    for (int e = 0; e < out.e_len; ++e) {
      for (int f = 0; f < out.f_len; ++f) {
        if (!out.links.count({e, f})) continue;
        for (const auto& [de, df] : kNeighbors) {
          const int ne = e + de, nf = f + df;
          if (ne < 0 || nf < 0 || ne >= out.e_len || nf >= out.f_len) continue;
          if ((e_aligned[static_cast<std::size_t>(ne)] && f_aligned[static_cast<std::size_t>(nf)]) ||
              !united.count({ne, nf})) {
            continue;
          }
          if (out.links.count({ne, nf})) continue;
          add(ne, nf);
          added = true;
        }
      }
    }
  }

  auto final_and = [&](const std::set<std::pair<int, int>>& directional) {
    for (int e = 0; e < out.e_len; ++e) {
      for (int f = 0; f < out.f_len; ++f) {
        if (!e_aligned[static_cast<std::size_t>(e)] && !f_aligned[static_cast<std::size_t>(f)] &&
            directional.count({e, f})) {
          add(e, f);
        }
      }
    }
  };
  final_and(forward.links);
  final_and(reverse.links);
  return out;
}

std::size_t BilingualDictionary::entry_count() const {
  std::size_t n = 0;
  for (const auto& [_, m] : e_to_f) n += m.size();
  for (const auto& [_, m] : f_to_e) n += m.size();
  return n;
}

BilingualDictionary extract_dictionary(const Ibm2Model& model_ef, const Ibm2Model& model_fe,
                                       double prob_threshold) {
  if (!(prob_threshold > 0.0 && prob_threshold <= 1.0)) {
    throw UsageError(fmt::format("dictionary threshold must be in (0,1], got {}", prob_threshold));
  }
  if (model_ef.direction != Direction::kEtoF || model_fe.direction != Direction::kFtoE) {
    throw UsageError("extract_dictionary expects an e->f and an f->e model, in that order");
  }
  BilingualDictionary dict;
  auto harvest = [prob_threshold](const TranslationTable& table, auto& out) {
    for (std::size_t s = 1; s < table.rows.size(); ++s) {
      for (const auto& [t, p] : table.rows[s]) {
        if (p >= prob_threshold) out[table.source.word(static_cast<int>(s))][table.target.word(t)] = p;
      }
    }
  };
  harvest(model_ef.table, dict.e_to_f);
  harvest(model_fe.table, dict.f_to_e);
  return dict;
}

void write_alignments(std::ostream& out, const std::vector<Alignment>& alignments) {
  for (const auto& a : alignments) {
    bool first = true;
    for (const auto& [e, f] : a.links) {
      if (!first) out << ' ';
      out << e << '-' << f;
      first = false;
    }
    out << '\n';
  }
}

std::vector<Alignment> read_alignments(std::istream& in, const std::vector<SentencePair>& pairs) {
  std::vector<Alignment> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    if (n >= pairs.size()) throw DataError("alignment file has more lines than the corpus");
    Alignment a;
    a.e_len = static_cast<int>(pairs[n].e_tokens.size());
    a.f_len = static_cast<int>(pairs[n].f_tokens.size());
    std::istringstream fields(line);
    std::string link;
    while (fields >> link) {
      int e = -1, f = -1;
      char dash = 0;
      std::istringstream parse(link);
      if (!(parse >> e >> dash >> f) || dash != '-' || e < 0 || f < 0 || e >= a.e_len ||
          f >= a.f_len) {
        throw DataError(fmt::format("alignment line {}: bad link '{}'", n + 1, link));
      }
      a.links.emplace(e, f);
    }
    out.push_back(std::move(a));
    ++n;
  }
  if (n != pairs.size()) {
    throw DataError(fmt::format("alignment file has {} lines, corpus has {} pairs", n, pairs.size()));
  }
  return out;
}

void write_alignments_file(const std::filesystem::path& path,
                           const std::vector<Alignment>& alignments) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(fmt::format("cannot write {}", path.string()));
  write_alignments(out, alignments);
}

std::vector<Alignment> read_alignments_file(const std::filesystem::path& path,
                                            const std::vector<SentencePair>& pairs) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot read {}", path.string()));
  return read_alignments(in, pairs);
}

void write_dictionary(const std::filesystem::path& e_to_f_path,
                      const std::filesystem::path& f_to_e_path,
                      const BilingualDictionary& dictionary) {
  auto dump = [](const std::filesystem::path& path, const auto& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError(fmt::format("cannot write {}", path.string()));
    for (const auto& [src, targets] : table) {
      for (const auto& [tgt, p] : targets) out << fmt::format("{}\t{}\t{:.6f}\n", src, tgt, p);
    }
  };
  dump(e_to_f_path, dictionary.e_to_f);
  dump(f_to_e_path, dictionary.f_to_e);
}

BilingualDictionary read_dictionary(const std::filesystem::path& e_to_f_path,
                                    const std::filesystem::path& f_to_e_path) {
  auto load = [](const std::filesystem::path& path, auto& table) {
    std::ifstream in(path);
    if (!in) throw DataError(fmt::format("cannot read {}", path.string()));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto t1 = line.find('\t');
      const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
      if (t2 == std::string::npos) {
        throw DataError(fmt::format("{}:{}: expected src<TAB>tgt<TAB>prob", path.string(), line_no));
      }
      double p = 0.0;
      try {
        std::size_t used = 0;
        p = std::stod(line.substr(t2 + 1), &used);
      } catch (const std::exception&) {
        throw DataError(fmt::format("{}:{}: bad probability", path.string(), line_no));
      }
      table[line.substr(0, t1)][line.substr(t1 + 1, t2 - t1 - 1)] = p;
    }
  };
  BilingualDictionary dict;
  load(e_to_f_path, dict.e_to_f);
  load(f_to_e_path, dict.f_to_e);
  return dict;
}

AlignedCorpus align_corpus(const Ibm2Model& model_ef, const Ibm2Model& model_fe,
                           const std::vector<SentencePair>& pairs) {
  AlignedCorpus out;
  out.forward.reserve(pairs.size());
  out.reverse.reserve(pairs.size());
  for (const auto& p : pairs) {
    auto fwd = viterbi_align(model_ef, p);
    auto rev = viterbi_align(model_fe, p);
    out.oov_tokens += fwd.oov_tokens + rev.oov_tokens;
    out.forward.push_back(std::move(fwd.alignment));
    out.reverse.push_back(std::move(rev.alignment));
  }
  for (auto h : kAllHeuristics) {
    auto& dst = out.symmetrized[h];
    dst.reserve(pairs.size());
    for (std::size_t n = 0; n < pairs.size(); ++n) {
      dst.push_back(symmetrize(out.forward[n], out.reverse[n], h));
    }
  }
  return out;
}

}  // namespace divergescope
