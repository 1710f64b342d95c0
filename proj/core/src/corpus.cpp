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

#include "divergescope/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "divergescope/error.hpp"

namespace divergescope {
namespace {

// Decodes one code point starting at s[i]; invalid bytes decode as themselves
// (Latin-1 reading) so tokenization never fails on dirty input.
char32_t decode_utf8(std::string_view s, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  auto cont = [&](std::size_t k) -> int {
    if (i + k >= s.size()) return -1;
    const auto b = static_cast<unsigned char>(s[i + k]);
    return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
  };
  if (b0 < 0x80) {
    i += 1;
    return b0;
  }
  if ((b0 & 0xE0) == 0xC0) {
    const int c1 = cont(1);
    if (c1 >= 0) {
      i += 2;
      return static_cast<char32_t>(((b0 & 0x1F) << 6) | c1);
    }
  } else if ((b0 & 0xF0) == 0xE0) {
    const int c1 = cont(1), c2 = cont(2);
    if (c1 >= 0 && c2 >= 0) {
      i += 3;
      return static_cast<char32_t>(((b0 & 0x0F) << 12) | (c1 << 6) | c2);
    }
  } else if ((b0 & 0xF8) == 0xF0) {
    const int c1 = cont(1), c2 = cont(2), c3 = cont(3);
    if (c1 >= 0 && c2 >= 0 && c3 >= 0) {
      i += 4;
      return static_cast<char32_t>(((b0 & 0x07) << 18) | (c1 << 12) | (c2 << 6) | c3);
    }
  }
  i += 1;
  return b0;
}

void encode_utf8(char32_t cp, std::string& out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

bool is_unicode_space(char32_t cp) {
  switch (cp) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

// Simple (one-to-one) lowercase mapping for the Latin, Greek, and Cyrillic
// blocks. Scripts without case pass through.
char32_t to_lower(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 32;
  if (cp < 0x80) return cp;
  if ((cp >= 0xC0 && cp <= 0xDE) && cp != 0xD7) return cp + 32;
  if (cp >= 0x100 && cp <= 0x17F) {
    if (cp == 0x130) return 'i';
    if (cp == 0x178) return 0xFF;
    if ((cp >= 0x139 && cp <= 0x148) || (cp >= 0x179 && cp <= 0x17E)) {
      return (cp % 2 == 1) ? cp + 1 : cp;
    }
    if (cp == 0x138 || cp == 0x149 || cp == 0x17F) return cp;
    return (cp % 2 == 0) ? cp + 1 : cp;
  }
  if (cp >= 0x391 && cp <= 0x3AB && cp != 0x3A2) return cp + 32;
  if (cp == 0x386) return 0x3AC;
  if (cp >= 0x388 && cp <= 0x38A) return cp + 37;
  if (cp == 0x38C) return 0x3CC;
  if (cp == 0x38E || cp == 0x38F) return cp + 63;
  if (cp >= 0x400 && cp <= 0x40F) return cp + 80;
  if (cp >= 0x410 && cp <= 0x42F) return cp + 32;
  if (cp >= 0x460 && cp <= 0x4FF && cp % 2 == 0 &&
      !(cp >= 0x482 && cp <= 0x489) && cp != 0x4C0) {
    if (cp >= 0x4C1 && cp <= 0x4CE) return cp;
    return cp + 1;
  }
  if (cp >= 0x4C1 && cp <= 0x4CE && cp % 2 == 1) return cp + 1;
  if (cp == 0x4C0) return 0x4CF;
  return cp;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot read {}", path.string()));
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(fmt::format("cannot write {}", path.string()));
  return out;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  if (in.bad()) throw DataError(fmt::format("I/O error while reading {}", path.string()));
  return lines;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

SentencePair parse_tsv_pair(const std::vector<std::string_view>& fields, std::size_t line_no) {
  SentencePair pair;
  std::uint64_t id = 0;
  const auto& id_field = fields[0];
  if (id_field.empty() || !std::all_of(id_field.begin(), id_field.end(),
                                       [](char c) { return c >= '0' && c <= '9'; })) {
    throw DataError(fmt::format("line {}: bad pair id '{}'", line_no, id_field));
  }
  id = std::stoull(std::string(id_field));
  pair.id = id;
  pair.e_tokens = tokenize(fields[1]);
  pair.f_tokens = tokenize(fields[2]);
  if (pair.e_tokens.empty() || pair.f_tokens.empty()) {
    throw DataError(fmt::format("line {}: empty side in pair {}", line_no, id));
  }
  return pair;
}

}  // namespace

std::string_view label_name(Label label) {
  return label == Label::kEquivalent ? "equivalent" : "divergent";
}

Label parse_label(std::string_view text) {
  if (text == "equivalent") return Label::kEquivalent;
  if (text == "divergent") return Label::kDivergent;
  throw DataError(fmt::format("unknown label '{}'", text));
}

Tokens tokenize(std::string_view line) {
  Tokens tokens;
  std::string current;
  std::size_t i = 0;
  while (i < line.size()) {
    const char32_t cp = decode_utf8(line, i);
    if (is_unicode_space(cp)) {
      if (!current.empty()) tokens.push_back(std::exchange(current, {}));
    } else {
      encode_utf8(to_lower(cp), current);
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

LoadResult load_parallel(const std::filesystem::path& source_path,
                         const std::filesystem::path& target_path) {
  const auto source = read_lines(source_path);
  const auto target = read_lines(target_path);
  if (source.size() != target.size()) {
    throw DataError(fmt::format("line count mismatch {} vs {}", source.size(), target.size()));
  }
  LoadResult result;
  result.pairs.reserve(source.size());
  for (std::size_t i = 0; i < source.size(); ++i) {
    SentencePair pair;
    pair.e_tokens = tokenize(source[i]);
    pair.f_tokens = tokenize(target[i]);
    if (pair.e_tokens.empty() || pair.f_tokens.empty()) {
      ++result.rejected;
      continue;
    }
    pair.id = result.pairs.size();
    result.pairs.push_back(std::move(pair));
  }
  return result;
}

DedupResult deduplicate(const std::vector<SentencePair>& pairs) {
  DedupResult result;
  std::set<std::pair<const Tokens*, const Tokens*>,
           bool (*)(const std::pair<const Tokens*, const Tokens*>&,
                    const std::pair<const Tokens*, const Tokens*>&)>
      seen([](const auto& a, const auto& b) {
        if (*a.first != *b.first) return *a.first < *b.first;
        return *a.second < *b.second;
      });
  for (const auto& pair : pairs) {
    if (seen.insert({&pair.e_tokens, &pair.f_tokens}).second) {
      result.pairs.push_back(pair);
    } else {
      ++result.removed;
    }
  }
  return result;
}

template <typename T>
CorpusSplit<T> split_corpus(const std::vector<T>& items, const std::array<double, 3>& fractions,
                            std::uint64_t seed) {
  for (double f : fractions) {
    if (!(f >= 0.0) || !std::isfinite(f)) {
      throw UsageError(fmt::format("split fractions must be non-negative, got {}", f));
    }
  }
  const double total = fractions[0] + fractions[1] + fractions[2];
  if (std::abs(total - 1.0) > 1e-9) {
    throw UsageError(fmt::format("split fractions must sum to 1, got {}", total));
  }
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const auto n = static_cast<double>(items.size());
  const auto n_dev = static_cast<std::size_t>(std::floor(fractions[1] * n + 1e-9));
  const auto n_test = static_cast<std::size_t>(std::floor(fractions[2] * n + 1e-9));
  const std::size_t n_train = items.size() - n_dev - n_test;

  CorpusSplit<T> split;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& item = items[order[k]];
    if (k < n_train) {
      split.train.push_back(item);
    } else if (k < n_train + n_dev) {
      split.dev.push_back(item);
    } else {
      split.test.push_back(item);
    }
  }
  return split;
}

template CorpusSplit<SentencePair> split_corpus(const std::vector<SentencePair>&,
                                                const std::array<double, 3>&, std::uint64_t);
template CorpusSplit<LabeledPair> split_corpus(const std::vector<LabeledPair>&,
                                               const std::array<double, 3>&, std::uint64_t);

std::string join_tokens(const Tokens& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

void write_tsv(std::ostream& out, const std::vector<SentencePair>& pairs) {
  for (const auto& p : pairs) {
    out << p.id << '\t' << join_tokens(p.e_tokens) << '\t' << join_tokens(p.f_tokens) << '\n';
  }
}

void write_labeled_tsv(std::ostream& out, const std::vector<LabeledPair>& pairs) {
  for (const auto& lp : pairs) {
    const auto& p = lp.pair;
    out << p.id << '\t' << join_tokens(p.e_tokens) << '\t' << join_tokens(p.f_tokens) << '\t'
        << label_name(lp.label) << '\n';
  }
}

std::vector<SentencePair> read_tsv(std::istream& in) {
  std::vector<SentencePair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 3) {
      throw DataError(fmt::format("line {}: expected 3 tab-separated fields, got {}", line_no,
                                  fields.size()));
    }
    pairs.push_back(parse_tsv_pair(fields, line_no));
  }
  return pairs;
}

std::vector<LabeledPair> read_labeled_tsv(std::istream& in) {
  std::vector<LabeledPair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 4) {
      throw DataError(fmt::format("line {}: expected 4 tab-separated fields, got {}", line_no,
                                  fields.size()));
    }
    LabeledPair lp;
    lp.pair = parse_tsv_pair(fields, line_no);
    try {
      lp.label = parse_label(fields[3]);
    } catch (const DataError& e) {
      throw DataError(fmt::format("line {}: {}", line_no, e.what()));
    }
    pairs.push_back(std::move(lp));
  }
  return pairs;
}

void write_tsv_file(const std::filesystem::path& path, const std::vector<SentencePair>& pairs) {
  auto out = open_output(path);
  write_tsv(out, pairs);
}

void write_labeled_tsv_file(const std::filesystem::path& path,
                            const std::vector<LabeledPair>& pairs) {
  auto out = open_output(path);
  write_labeled_tsv(out, pairs);
}

std::vector<SentencePair> read_tsv_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_tsv(in);
}

std::vector<LabeledPair> read_labeled_tsv_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_labeled_tsv(in);
}

void write_parallel(const std::filesystem::path& source_path,
                    const std::filesystem::path& target_path,
                    const std::vector<SentencePair>& pairs) {
  auto e_out = open_output(source_path);
  auto f_out = open_output(target_path);
  for (const auto& p : pairs) {
    e_out << join_tokens(p.e_tokens) << '\n';
    f_out << join_tokens(p.f_tokens) << '\n';
  }
}

std::vector<SentencePair> unlabeled(const std::vector<LabeledPair>& pairs) {
  std::vector<SentencePair> out;
  out.reserve(pairs.size());
  for (const auto& lp : pairs) out.push_back(lp.pair);
  return out;
}

}  // namespace divergescope
