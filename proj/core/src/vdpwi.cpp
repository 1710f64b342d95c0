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

#include "divergescope/vdpwi.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "divergescope/error.hpp"

namespace divergescope {

using ad::Shape;
using ad::Tensor;

VdpwiConfig VdpwiConfig::desk(std::size_t embedding_dim) {
  VdpwiConfig c;
  c.embedding_dim = embedding_dim;
  c.lstm_hidden_dim = 64;
  c.grid_size = 16;
  c.max_sentence_length = 16;
  c.cnn = {{32, 3, 4}, {32, 3, 4}};
  c.fc_dim = 64;
  return c;
}

std::size_t VdpwiConfig::clamp_length() const { return std::min(max_sentence_length, grid_size); }

void VdpwiConfig::validate() const {
  if (embedding_dim == 0 || lstm_hidden_dim == 0 || grid_size == 0 || max_sentence_length == 0 || fc_dim == 0) {
    throw UsageError("vdpwi: all dimensions must be positive");
  }
  if (cnn.empty()) throw UsageError("vdpwi: at least one CNN stage is required");
  if (epochs == 0 || batch_size == 0) throw UsageError("vdpwi: epochs and batch size must be positive");
  if (!(learning_rate > 0)) throw UsageError("vdpwi: learning rate must be positive");
  if (!(focus_low_weight > 0 && focus_low_weight <= 1)) throw UsageError("vdpwi: focus weight must be in (0, 1]");
  std::size_t size = grid_size;
  for (const auto& stage : cnn) {
    if (stage.filters == 0 || stage.kernel == 0 || stage.pool == 0 || stage.kernel % 2 == 0) {
      throw UsageError(fmt::format("vdpwi: bad CNN stage {}", format_cnn_spec({stage})));
    }
    if (stage.pool > size) {
      throw UsageError(fmt::format("vdpwi: CNN {} cannot pool a {}x{} grid by {}", format_cnn_spec(cnn), size, size,
                                   stage.pool));
    }
    size = (size - stage.pool) / stage.pool + 1;
  }
  if (size != 1) {
    throw UsageError(fmt::format("vdpwi: CNN {} leaves a {}x{} grid from {}x{}, not 1x1", format_cnn_spec(cnn), size,
                                 size, grid_size, grid_size));
  }
}

namespace {

Tensor uniform(Shape shape, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-bound, bound);
  std::vector<double> v(ad::shape_size(shape));
  for (auto& x : v) x = u(rng);
  return Tensor::from(std::move(shape), std::move(v), true);
}

}  // namespace

VdpwiModel VdpwiModel::initialize(const VdpwiConfig& config) {
  config.validate();
  VdpwiModel model;
  model.config = config;
  std::mt19937_64 rng(config.seed);
  const std::size_t d = config.embedding_dim;
  const std::size_t h = config.lstm_hidden_dim;
  const double lstm_bound = 1.0 / std::sqrt(static_cast<double>(h));
  for (const char* dir : {"fwd", "bwd"}) {
    model.parameters.emplace_back(fmt::format("lstm.{}.w_ih", dir), uniform({d, 4 * h}, lstm_bound, rng));
    model.parameters.emplace_back(fmt::format("lstm.{}.w_hh", dir), uniform({h, 4 * h}, lstm_bound, rng));
    std::vector<double> bias(4 * h, 0.0);
    std::fill(bias.begin() + static_cast<std::ptrdiff_t>(h), bias.begin() + static_cast<std::ptrdiff_t>(2 * h), 1.0);
    model.parameters.emplace_back(fmt::format("lstm.{}.b", dir), Tensor::from({4 * h}, std::move(bias), true));
  }
  std::size_t channels = kCubeChannels;
  for (std::size_t s = 0; s < config.cnn.size(); ++s) {
    const auto& st = config.cnn[s];
    const double fan_in = static_cast<double>(channels * st.kernel * st.kernel);
    model.parameters.emplace_back(fmt::format("cnn.{}.kernel", s),
                                  uniform({st.filters, channels, st.kernel, st.kernel}, std::sqrt(6.0 / fan_in), rng));
    model.parameters.emplace_back(fmt::format("cnn.{}.bias", s), Tensor::zeros({st.filters}, true));
    channels = st.filters;
  }
  model.parameters.emplace_back("fc.w", uniform({channels, config.fc_dim}, std::sqrt(6.0 / static_cast<double>(channels)), rng));
  model.parameters.emplace_back("fc.b", Tensor::zeros({config.fc_dim}, true));
  model.parameters.emplace_back("out.w", uniform({config.fc_dim, 2}, std::sqrt(6.0 / static_cast<double>(config.fc_dim + 2)), rng));
  model.parameters.emplace_back("out.b", Tensor::zeros({2}, true));
  return model;
}

const Tensor& VdpwiModel::parameter(const std::string& name) const {
  for (const auto& [n, t] : parameters) {
    if (n == name) return t;
  }
  throw UsageError(fmt::format("vdpwi: no parameter named '{}'", name));
}

std::vector<Tensor> VdpwiModel::tensors() const {
  std::vector<Tensor> out;
  for (const auto& [n, t] : parameters) out.push_back(t);
  return out;
}

namespace {

VdpwiModel clone(const VdpwiModel& model) {
  VdpwiModel copy;
  copy.config = model.config;
  for (const auto& [n, t] : model.parameters) copy.parameters.emplace_back(n, t.detach(true));
  return copy;
}

// Hidden states (L, H) of one LSTM direction over (L, D) inputs.
Tensor run_lstm(const Tensor& inputs, const Tensor& w_ih, const Tensor& w_hh, const Tensor& bias, std::size_t h) {
  const std::size_t length = inputs.dim(0);
  const Tensor projected = ad::add(ad::matmul(inputs, w_ih), bias);
  std::vector<Tensor> states;
  Tensor hidden;
  Tensor cell;
  for (std::size_t t = 0; t < length; ++t) {
    Tensor gates = ad::slice(projected, 0, t, 1);
    if (hidden.defined()) gates = ad::add(gates, ad::matmul(hidden, w_hh));
    const Tensor in_gate = ad::sigmoid(ad::slice(gates, 1, 0, h));
    const Tensor forget_gate = ad::sigmoid(ad::slice(gates, 1, h, h));
    const Tensor candidate = ad::tanh(ad::slice(gates, 1, 2 * h, h));
    const Tensor out_gate = ad::sigmoid(ad::slice(gates, 1, 3 * h, h));
    cell = cell.defined() ? ad::add(ad::mul(forget_gate, cell), ad::mul(in_gate, candidate))
                          : ad::mul(in_gate, candidate);
    hidden = ad::mul(out_gate, ad::tanh(cell));
    states.push_back(hidden);
  }
  return ad::concat(states, 0);
}

Tensor as_channel(const Tensor& matrix) { return ad::reshape(matrix, {1, matrix.dim(0), matrix.dim(1)}); }

}  // namespace

BiStates contextualize(const VdpwiModel& model, const Tensor& sequence) {
  if (sequence.rank() != 2 || sequence.dim(0) == 0) throw UsageError("contextualize: need a non-empty (L, D) sequence");
  if (sequence.dim(1) != model.config.embedding_dim) {
    throw UsageError(fmt::format("contextualize: embedding width {} but model expects {}", sequence.dim(1),
                                 model.config.embedding_dim));
  }
  const std::size_t h = model.config.lstm_hidden_dim;
  BiStates out;
  out.forward = run_lstm(sequence, model.parameter("lstm.fwd.w_ih"), model.parameter("lstm.fwd.w_hh"),
                         model.parameter("lstm.fwd.b"), h);
  out.backward = ad::reverse(run_lstm(ad::reverse(sequence, 0), model.parameter("lstm.bwd.w_ih"),
                                      model.parameter("lstm.bwd.w_hh"), model.parameter("lstm.bwd.b"), h),
                             0);
  return out;
}

Tensor build_similarity_cube(const BiStates& e, const BiStates& f) {
  if (e.forward.dim(1) != f.forward.dim(1) || e.backward.dim(1) != f.backward.dim(1)) {
    throw UsageError("build_similarity_cube: state widths differ");
  }
  const std::vector<std::pair<Tensor, Tensor>> variants{
      {e.forward, f.forward},
      {e.backward, f.backward},
      {ad::concat({e.forward, e.backward}, 1), ad::concat({f.forward, f.backward}, 1)},
      {ad::add(e.forward, e.backward), ad::add(f.forward, f.backward)},
  };
  std::vector<Tensor> channels;
  for (const auto& [a, b] : variants) {
    channels.push_back(as_channel(ad::pairwise_cosine(a, b)));
    channels.push_back(as_channel(ad::scale(ad::pairwise_l2(a, b), -1.0)));
    channels.push_back(as_channel(ad::pairwise_dot(a, b)));
  }
  channels.push_back(Tensor::filled({1, e.forward.dim(0), f.forward.dim(0)}, 1.0));
  return ad::concat(channels, 0);
}

std::vector<double> focus_mask(const Tensor& cube, double low_weight) {
  if (cube.rank() != 3 || cube.dim(0) != kCubeChannels) {
    throw UsageError(fmt::format("focus: expected a ({}, m, n) cube, got {}", kCubeChannels,
                                 ad::shape_string(cube.shape())));
  }
  const std::size_t m = cube.dim(1);
  const std::size_t n = cube.dim(2);
  const auto data = cube.data();
  std::vector<double> mask(m * n, low_weight);
  for (std::size_t channel : {kConcatCosineChannel, kConcatDotChannel}) {
    const double* values = &data[channel * m * n];
    std::vector<std::size_t> order(m * n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
    std::vector<bool> row_used(m, false);
    std::vector<bool> col_used(n, false);
    for (std::size_t cell : order) {
      const std::size_t i = cell / n;
      const std::size_t j = cell % n;
      if (row_used[i] || col_used[j]) continue;
      row_used[i] = true;
      col_used[j] = true;
      mask[cell] = 1.0;
    }
  }
  return mask;
}

Tensor apply_focus(const Tensor& cube, double low_weight) {
  auto mask = focus_mask(cube, low_weight);
  return ad::mul(cube, Tensor::from({cube.dim(1), cube.dim(2)}, std::move(mask)));
}

Tensor cnn_score(const VdpwiModel& model, const Tensor& focus_cube) {
  const auto& config = model.config;
  if (focus_cube.rank() != 3 || focus_cube.dim(0) != kCubeChannels) {
    throw UsageError(fmt::format("cnn_score: bad cube shape {}", ad::shape_string(focus_cube.shape())));
  }
  if (focus_cube.dim(1) > config.grid_size || focus_cube.dim(2) > config.grid_size) {
    throw UsageError(fmt::format("cnn_score: {}x{} cube overflows the {}x{} grid", focus_cube.dim(1),
                                 focus_cube.dim(2), config.grid_size, config.grid_size));
  }
  Tensor x = ad::reshape(ad::pad2d(focus_cube, config.grid_size, config.grid_size),
                         {1, kCubeChannels, config.grid_size, config.grid_size});
  for (std::size_t s = 0; s < config.cnn.size(); ++s) {
    const auto& st = config.cnn[s];
    x = ad::conv2d(x, model.parameter(fmt::format("cnn.{}.kernel", s)), model.parameter(fmt::format("cnn.{}.bias", s)),
                   1, st.kernel / 2);
    x = ad::maxpool2d(ad::relu(x), st.pool, st.pool);
  }
  x = ad::reshape(x, {1, x.size()});
  x = ad::relu(ad::add(ad::matmul(x, model.parameter("fc.w")), model.parameter("fc.b")));
  x = ad::add(ad::matmul(x, model.parameter("out.w")), model.parameter("out.b"));
  return ad::reshape(ad::softmax(x, 1), {2});
}

Tensor embed_sentence(const Tokens& tokens, const EmbeddingTable& table, Language language, std::size_t max_length) {
  if (tokens.empty()) throw DataError("vdpwi: cannot embed an empty sentence");
  const std::size_t length = std::min(tokens.size(), max_length);
  const std::size_t d = table.dim();
  std::vector<double> rows(length * d, 0.0);
  for (std::size_t t = 0; t < length; ++t) {
    if (const auto* v = table.find(language, tokens[t])) std::copy(v->begin(), v->end(), rows.begin() + static_cast<std::ptrdiff_t>(t * d));
  }
  return Tensor::from({length, d}, std::move(rows));
}

Tensor forward(const VdpwiModel& model, const SentencePair& pair, const EmbeddingTable& embeddings) {
  const std::size_t limit = model.config.clamp_length();
  const auto e = contextualize(model, embed_sentence(pair.e_tokens, embeddings, Language::kE, limit));
  const auto f = contextualize(model, embed_sentence(pair.f_tokens, embeddings, Language::kF, limit));
  Tensor cube = build_similarity_cube(e, f);
  if (model.config.focus) cube = apply_focus(cube, model.config.focus_low_weight);
  return cnn_score(model, cube);
}

double score_pair(const VdpwiModel& model, const SentencePair& pair, const EmbeddingTable& embeddings) {
  return forward(model, pair, embeddings).data()[1];
}

std::vector<ScoredPair> score_pairs(const VdpwiModel& model, const std::vector<SentencePair>& pairs,
                                    const EmbeddingTable& embeddings, unsigned threads) {
  std::vector<ScoredPair> out(pairs.size());
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) out[k] = {pairs[k].id, score_pair(model, pairs[k], embeddings)};
  };
  threads = std::max(1u, threads);
  if (threads == 1 || pairs.size() < 2) {
    work(0, pairs.size());
  } else {
    // Each worker builds its own graphs; parameters are only read.
    std::vector<std::jthread> pool;
    const std::size_t chunk = (pairs.size() + threads - 1) / threads;
    for (std::size_t b = 0; b < pairs.size(); b += chunk) pool.emplace_back(work, b, std::min(pairs.size(), b + chunk));
  }
  return out;
}

std::size_t count_truncated(const std::vector<SentencePair>& pairs, const VdpwiConfig& config) {
  const std::size_t limit = config.clamp_length();
  return static_cast<std::size_t>(std::count_if(pairs.begin(), pairs.end(), [&](const SentencePair& p) {
    return p.e_tokens.size() > limit || p.f_tokens.size() > limit;
  }));
}

std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw UsageError("pearson: length mismatch");
  const std::size_t n = x.size();
  if (n < 2) return std::nullopt;
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

namespace {

Tensor gold_distribution(Label label) {
  return label == Label::kEquivalent ? Tensor::from({2}, {0.0, 1.0}) : Tensor::from({2}, {1.0, 0.0});
}

double mean_kl(const VdpwiModel& model, const std::vector<LabeledPair>& data, const EmbeddingTable& embeddings) {
  double total = 0.0;
  for (const auto& ex : data) {
    total += ad::kl_loss(forward(model, ex.pair, embeddings), gold_distribution(ex.label)).item();
  }
  return total / static_cast<double>(data.size());
}

}  // namespace

VdpwiTrainResult train_vdpwi(const std::vector<LabeledPair>& train, const std::vector<LabeledPair>& validation,
                             const VdpwiConfig& config, const EmbeddingTable& embeddings,
                             const VdpwiTrainOptions& options) {
  if (train.empty()) throw DataError("vdpwi: empty training set");
  if (embeddings.dim() != config.embedding_dim) {
    throw UsageError(fmt::format("vdpwi: embeddings have dimension {}, config says {}", embeddings.dim(),
                                 config.embedding_dim));
  }
  VdpwiTrainResult result;
  VdpwiModel model = VdpwiModel::initialize(config);
  const auto params = model.tensors();
  ad::OptimizerState optimizer;
  optimizer.kind = ad::OptimizerKind::kAdam;
  optimizer.learning_rate = config.learning_rate;

  std::vector<SentencePair> all;
  for (const auto& ex : train) all.push_back(ex.pair);
  if (const auto truncated = count_truncated(all, config)) {
    result.warnings.push_back(fmt::format("{} training pairs truncated to {} tokens", truncated, config.clamp_length()));
  }
  if (validation.empty()) result.warnings.push_back("no validation data; the last epoch is selected");

  std::vector<double> validation_gold;
  for (const auto& ex : validation) validation_gold.push_back(ex.label == Label::kEquivalent ? 1.0 : 0.0);

  result.initial_train_kl = mean_kl(model, train, embeddings);
  std::mt19937_64 rng(config.seed ^ 0x5851f42d4c957f2dULL);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  const double batch_scale = 1.0 / static_cast<double>(config.batch_size);
  double best = -std::numeric_limits<double>::infinity();
  bool warned_undefined = false;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double kl_total = 0.0;
    std::size_t in_batch = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
      const auto& ex = train[order[k]];
      const Tensor loss = ad::kl_loss(forward(model, ex.pair, embeddings), gold_distribution(ex.label));
      if (!std::isfinite(loss.item())) {
        throw NumericalError(fmt::format("vdpwi: non-finite loss at epoch {} example {}", epoch, ex.pair.id));
      }
      kl_total += loss.item();
      ad::backward(ad::scale(loss, batch_scale));
      if (++in_batch == config.batch_size || k + 1 == order.size()) {
        ad::optimizer_step(optimizer, params);
        in_batch = 0;
      }
    }

    EpochRecord record{epoch, kl_total / static_cast<double>(train.size()), -1.0};
    if (!validation.empty()) {
      std::vector<double> scores;
      for (const auto& ex : validation) scores.push_back(score_pair(model, ex.pair, embeddings));
      if (const auto r = pearson(scores, validation_gold)) {
        record.validation_pearson = *r;
      } else if (!warned_undefined) {
        warned_undefined = true;
        result.warnings.push_back("validation Pearson undefined (zero variance); treated as -1");
      }
    }
    result.history.push_back(record);
    if (options.on_epoch) options.on_epoch(epoch, model);
    // Later epochs win ties.
    if (record.validation_pearson >= best) {
      best = record.validation_pearson;
      result.selected_epoch = epoch;
      result.model = clone(model);
    }
  }
  return result;
}

std::string format_cnn_spec(const std::vector<CnnStage>& stages) {
  std::string out;
  for (const auto& s : stages) {
    if (!out.empty()) out += ",";
    out += fmt::format("{}x{}x{}", s.filters, s.kernel, s.pool);
  }
  return out;
}

std::vector<CnnStage> parse_cnn_spec(const std::string& text) {
  std::vector<CnnStage> stages;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    CnnStage s;
    char x1 = 0;
    char x2 = 0;
    std::istringstream parts(item);
    if (!(parts >> s.filters >> x1 >> s.kernel >> x2 >> s.pool) || x1 != 'x' || x2 != 'x' || !(parts >> std::ws).eof()) {
      throw UsageError(fmt::format("bad CNN stage '{}', expected FILTERSxKERNELxPOOL", item));
    }
    stages.push_back(s);
  }
  if (stages.empty()) throw UsageError("empty CNN spec");
  return stages;
}

void save_vdpwi(std::ostream& out, const VdpwiModel& model) {
  const auto& c = model.config;
  out << "# vdpwi embedding_dim " << c.embedding_dim << '\n'
      << "# vdpwi lstm_hidden_dim " << c.lstm_hidden_dim << '\n'
      << "# vdpwi grid_size " << c.grid_size << '\n'
      << "# vdpwi max_sentence_length " << c.max_sentence_length << '\n'
      << "# vdpwi cnn " << format_cnn_spec(c.cnn) << '\n'
      << "# vdpwi fc_dim " << c.fc_dim << '\n'
      << "# vdpwi focus " << (c.focus ? 1 : 0) << '\n'
      << "# vdpwi focus_low_weight " << fmt::format("{:.17g}", c.focus_low_weight) << '\n'
      << "# vdpwi epochs " << c.epochs << '\n'
      << "# vdpwi batch_size " << c.batch_size << '\n'
      << "# vdpwi learning_rate " << fmt::format("{:.17g}", c.learning_rate) << '\n'
      << "# vdpwi seed " << c.seed << '\n';
  ad::save_parameters(out, model.parameters);
}

void save_vdpwi_file(const std::filesystem::path& path, const VdpwiModel& model) {
  std::ofstream out(path);
  if (!out) throw DataError(fmt::format("cannot write model to {}", path.string()));
  save_vdpwi(out, model);
}

VdpwiModel load_vdpwi(std::istream& in) {
  VdpwiConfig c;
  std::stringstream rest;
  std::string line;
  bool saw_header = false;
  while (std::getline(in, line)) {
    if (!line.starts_with("# vdpwi ")) {
      rest << line << '\n';
      break;
    }
    saw_header = true;
    std::istringstream fields(line.substr(8));
    std::string key;
    std::string value;
    fields >> key >> value;
    try {
      if (key == "embedding_dim") c.embedding_dim = std::stoull(value);
      else if (key == "lstm_hidden_dim") c.lstm_hidden_dim = std::stoull(value);
      else if (key == "grid_size") c.grid_size = std::stoull(value);
      else if (key == "max_sentence_length") c.max_sentence_length = std::stoull(value);
      else if (key == "cnn") c.cnn = parse_cnn_spec(value);
      else if (key == "fc_dim") c.fc_dim = std::stoull(value);
      else if (key == "focus") c.focus = value == "1";
      else if (key == "focus_low_weight") c.focus_low_weight = std::stod(value);
      else if (key == "epochs") c.epochs = std::stoull(value);
      else if (key == "batch_size") c.batch_size = std::stoull(value);
      else if (key == "learning_rate") c.learning_rate = std::stod(value);
      else if (key == "seed") c.seed = std::stoull(value);
      else throw DataError(fmt::format("model header: unknown key '{}'", key));
    } catch (const std::logic_error&) {
      throw DataError(fmt::format("model header: bad value '{}' for {}", value, key));
    } catch (const UsageError& e) {
      throw DataError(fmt::format("model header: {}", e.what()));
    }
  }
  if (!saw_header) throw DataError("model file lacks the vdpwi header");
  if (in.peek() != std::char_traits<char>::eof()) rest << in.rdbuf();
  const auto loaded = ad::load_parameters(rest);
  VdpwiModel model = VdpwiModel::initialize(c);
  if (loaded.size() != model.parameters.size()) {
    throw DataError(fmt::format("model file has {} parameters, config implies {}", loaded.size(),
                                model.parameters.size()));
  }
  for (auto& [name, tensor] : model.parameters) {
    const auto it = loaded.find(name);
    if (it == loaded.end()) throw DataError(fmt::format("model file lacks parameter '{}'", name));
    if (it->second.shape() != tensor.shape()) {
      throw DataError(fmt::format("parameter '{}' has shape {}, config implies {}", name,
                                  ad::shape_string(it->second.shape()), ad::shape_string(tensor.shape())));
    }
    tensor = it->second;
  }
  return model;
}

VdpwiModel load_vdpwi_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open model {}", path.string()));
  return load_vdpwi(in);
}

}  // namespace divergescope
