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

#include "divergescope/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <thread>

#include <fmt/format.h>
#include "json.hpp"

#include "divergescope/datagen.hpp"
#include "divergescope/error.hpp"

namespace divergescope {

std::vector<std::string> feature_names(std::span<const Heuristic> heuristics) {
  std::vector<std::string> names{"len_f", "len_e", "ratio_f_e", "ratio_e_f"};
  for (const auto h : heuristics) {
    for (const char* side : {"e", "f"}) {
      const auto prefix = fmt::format("{}.{}.", heuristic_name(h), side);
      for (const char* stat : {"unaligned_count", "unaligned_ratio", "fertility_1", "fertility_2", "fertility_3",
                               "longest_unaligned", "longest_aligned"}) {
        names.push_back(prefix + stat);
      }
    }
  }
  names.emplace_back("coverage_e_f");
  names.emplace_back("coverage_f_e");
  return names;
}

std::size_t feature_count(std::span<const Heuristic> heuristics) { return 6 + heuristics.size() * 2 * kSideFeatures; }

namespace {

// Seven statistics of one side given how many links touch each position.
void side_features(const std::vector<int>& fertility, Features& out) {
  const std::size_t n = fertility.size();
  std::size_t unaligned = 0;
  std::size_t run_unaligned = 0;
  std::size_t run_aligned = 0;
  std::size_t best_unaligned = 0;
  std::size_t best_aligned = 0;
  for (int links : fertility) {
    if (links == 0) {
      ++unaligned;
      ++run_unaligned;
      run_aligned = 0;
    } else {
      ++run_aligned;
      run_unaligned = 0;
    }
    best_unaligned = std::max(best_unaligned, run_unaligned);
    best_aligned = std::max(best_aligned, run_aligned);
  }
  std::vector<int> top = fertility;
  std::sort(top.rbegin(), top.rend());
  top.resize(3, 0);
  out.push_back(static_cast<double>(unaligned));
  out.push_back(n == 0 ? 0.0 : static_cast<double>(unaligned) / static_cast<double>(n));
  for (int t : top) out.push_back(static_cast<double>(t));
  out.push_back(static_cast<double>(best_unaligned));
  out.push_back(static_cast<double>(best_aligned));
}

}  // namespace

Features extract_features(const SentencePair& pair, const std::map<Heuristic, Alignment>& alignments,
                          const BilingualDictionary& dictionary, std::span<const Heuristic> heuristics) {
  const std::size_t le = pair.e_tokens.size();
  const std::size_t lf = pair.f_tokens.size();
  if (le == 0 || lf == 0) throw DataError(fmt::format("pair {} has an empty side", pair.id));
  Features out;
  out.reserve(feature_count(heuristics));
  out.push_back(static_cast<double>(lf));
  out.push_back(static_cast<double>(le));
  out.push_back(static_cast<double>(lf) / static_cast<double>(le));
  out.push_back(static_cast<double>(le) / static_cast<double>(lf));
  for (const auto h : heuristics) {
    const auto it = alignments.find(h);
    if (it == alignments.end()) {
      throw UsageError(fmt::format("features: no {} alignment for pair {}", heuristic_name(h), pair.id));
    }
    const auto& a = it->second;
    if (a.e_len != static_cast<int>(le) || a.f_len != static_cast<int>(lf)) {
      throw DataError(fmt::format("features: {} alignment of pair {} is {}x{}, pair is {}x{}", heuristic_name(h),
                                  pair.id, a.e_len, a.f_len, le, lf));
    }
    std::vector<int> e_fert(le, 0);
    std::vector<int> f_fert(lf, 0);
    for (const auto& [i, j] : a.links) {
      ++e_fert[static_cast<std::size_t>(i)];
      ++f_fert[static_cast<std::size_t>(j)];
    }
    side_features(e_fert, out);
    side_features(f_fert, out);
  }
  out.push_back(coverage(pair.e_tokens, pair.f_tokens, dictionary, Direction::kEtoF));
  out.push_back(coverage(pair.e_tokens, pair.f_tokens, dictionary, Direction::kFtoE));
  return out;
}

std::vector<Features> extract_all(const std::vector<SentencePair>& pairs, const AlignedCorpus& aligned,
                                  const BilingualDictionary& dictionary, std::span<const Heuristic> heuristics,
                                  unsigned threads) {
  for (const auto h : heuristics) {
    const auto it = aligned.symmetrized.find(h);
    if (it == aligned.symmetrized.end()) throw UsageError(fmt::format("features: no {} alignments", heuristic_name(h)));
    if (it->second.size() != pairs.size()) {
      throw DataError(fmt::format("features: {} {} alignments for {} pairs", it->second.size(), heuristic_name(h),
                                  pairs.size()));
    }
  }
  std::vector<Features> out(pairs.size());
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      std::map<Heuristic, Alignment> per_pair;
      for (const auto h : heuristics) per_pair.emplace(h, aligned.symmetrized.at(h)[k]);
      out[k] = extract_features(pairs[k], per_pair, dictionary, heuristics);
    }
  };
  threads = std::max(1u, threads);
  if (threads == 1 || pairs.size() < 2) {
    work(0, pairs.size());
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (pairs.size() + threads - 1) / threads;
    for (std::size_t b = 0; b < pairs.size(); b += chunk) pool.emplace_back(work, b, std::min(pairs.size(), b + chunk));
  }
  return out;
}

namespace {

double logistic(double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

struct Standardized {
  std::vector<std::vector<double>> rows;
  std::vector<double> y;  // 1 for Equivalent
};

double regularized_loss(const Standardized& data, const std::vector<double>& w, double b, double l2) {
  double total = 0.0;
  for (std::size_t i = 0; i < data.rows.size(); ++i) {
    double z = b;
    for (std::size_t k = 0; k < w.size(); ++k) z += w[k] * data.rows[i][k];
    // Cross-entropy of logistic(z) against y.
    total += softplus(z) - data.y[i] * z;
  }
  double norm = 0.0;
  for (double x : w) norm += x * x;
  return total / static_cast<double>(data.rows.size()) + 0.5 * l2 * norm;
}

}  // namespace

LinearModel train_linear(const std::vector<Features>& features, const std::vector<Label>& labels,
                         const std::vector<std::string>& names, const LinearOptions& options) {
  if (features.size() != labels.size()) throw UsageError("train_linear: features and labels differ in length");
  if (features.empty()) throw DataError("train_linear: no training examples");
  if (!(options.learning_rate > 0) || options.l2_strength < 0) throw UsageError("train_linear: bad learning rate or l2");
  const std::size_t dim = names.size();
  for (const auto& f : features) {
    if (f.size() != dim) throw UsageError(fmt::format("train_linear: {} features, layout has {}", f.size(), dim));
  }
  const auto positives = std::count(labels.begin(), labels.end(), Label::kEquivalent);
  if (positives == 0 || positives == static_cast<std::ptrdiff_t>(labels.size())) {
    throw DataError("train_linear: training data has a single class");
  }

  LinearModel model;
  model.feature_names = names;
  model.mean.assign(dim, 0.0);
  model.stddev.assign(dim, 0.0);
  const double n = static_cast<double>(features.size());
  for (const auto& f : features) {
    for (std::size_t k = 0; k < dim; ++k) model.mean[k] += f[k] / n;
  }
  for (const auto& f : features) {
    for (std::size_t k = 0; k < dim; ++k) model.stddev[k] += (f[k] - model.mean[k]) * (f[k] - model.mean[k]) / n;
  }
  for (auto& s : model.stddev) s = s > 1e-24 ? std::sqrt(s) : 1.0;

  Standardized data;
  for (std::size_t i = 0; i < features.size(); ++i) {
    std::vector<double> row(dim);
    for (std::size_t k = 0; k < dim; ++k) row[k] = (features[i][k] - model.mean[k]) / model.stddev[k];
    data.rows.push_back(std::move(row));
    data.y.push_back(labels[i] == Label::kEquivalent ? 1.0 : 0.0);
  }

  std::vector<double> w(dim, 0.0);
  double b = 0.0;
  double lr = options.learning_rate;
  double loss = regularized_loss(data, w, b, options.l2_strength);
  model.loss_history.push_back(loss);
  std::vector<double> grad(dim);
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double grad_b = 0.0;
    for (std::size_t i = 0; i < data.rows.size(); ++i) {
      double z = b;
      for (std::size_t k = 0; k < dim; ++k) z += w[k] * data.rows[i][k];
      const double r = logistic(z) - data.y[i];
      for (std::size_t k = 0; k < dim; ++k) grad[k] += r * data.rows[i][k] / n;
      grad_b += r / n;
    }
    for (std::size_t k = 0; k < dim; ++k) grad[k] += options.l2_strength * w[k];
    for (int attempt = 0; attempt < 60; ++attempt) {
      std::vector<double> w_next(dim);
      for (std::size_t k = 0; k < dim; ++k) w_next[k] = w[k] - lr * grad[k];
      const double b_next = b - lr * grad_b;
      const double next = regularized_loss(data, w_next, b_next, options.l2_strength);
      if (next <= loss) {
        w = std::move(w_next);
        b = b_next;
        loss = next;
        break;
      }
      lr *= 0.5;
    }
    if (!std::isfinite(loss)) throw NumericalError("train_linear: loss is not finite");
    model.loss_history.push_back(loss);
  }
  model.weights = std::move(w);
  model.bias = b;

  std::size_t correct = 0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    const bool predicted_equivalent = score_linear(model, features[i]) >= 0.5;
    correct += predicted_equivalent == (labels[i] == Label::kEquivalent);
  }
  model.training_accuracy = static_cast<double>(correct) / n;
  return model;
}

double score_linear(const LinearModel& model, const Features& features) {
  if (features.size() != model.weights.size()) {
    throw UsageError(fmt::format("score_linear: {} features, model expects {}", features.size(), model.weights.size()));
  }
  double z = model.bias;
  for (std::size_t k = 0; k < features.size(); ++k) {
    z += model.weights[k] * (features[k] - model.mean[k]) / model.stddev[k];
  }
  return logistic(z);
}

void save_linear_model(std::ostream& out, const LinearModel& model) {
  nlohmann::json j;
  j["kind"] = "logistic";
  j["feature_names"] = model.feature_names;
  j["weights"] = model.weights;
  j["bias"] = model.bias;
  j["mean"] = model.mean;
  j["stddev"] = model.stddev;
  j["training_accuracy"] = model.training_accuracy;
  out << j.dump(2) << '\n';
}

void save_linear_model_file(const std::filesystem::path& path, const LinearModel& model) {
  std::ofstream out(path);
  if (!out) throw DataError(fmt::format("cannot write model to {}", path.string()));
  save_linear_model(out, model);
}

LinearModel load_linear_model(std::istream& in) {
  LinearModel model;
  try {
    const auto j = nlohmann::json::parse(in);
    if (j.at("kind") != "logistic") throw DataError("linear model file: unknown kind");
    model.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    model.weights = j.at("weights").get<std::vector<double>>();
    model.bias = j.at("bias").get<double>();
    model.mean = j.at("mean").get<std::vector<double>>();
    model.stddev = j.at("stddev").get<std::vector<double>>();
    model.training_accuracy = j.at("training_accuracy").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(fmt::format("linear model file: {}", e.what()));
  }
  const std::size_t n = model.feature_names.size();
  if (model.weights.size() != n || model.mean.size() != n || model.stddev.size() != n) {
    throw DataError("linear model file: inconsistent layout lengths");
  }
  for (double s : model.stddev) {
    if (!(s > 0) || !std::isfinite(s)) throw DataError("linear model file: bad scaling parameter");
  }
  return model;
}

LinearModel load_linear_model_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open model {}", path.string()));
  return load_linear_model(in);
}

void write_features(std::ostream& out, const std::vector<std::string>& names, const std::vector<SentencePair>& pairs,
                    const std::vector<Features>& features) {
  if (pairs.size() != features.size()) throw UsageError("write_features: pairs and features differ in length");
  out << "pair_id";
  for (const auto& n : names) out << '\t' << n;
  out << '\n';
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    out << pairs[i].id;
    for (double v : features[i]) out << '\t' << fmt::format("{:.6f}", v);
    out << '\n';
  }
}

}  // namespace divergescope
