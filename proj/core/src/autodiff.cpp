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

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <unordered_set>

#include <fmt/format.h>

#include "divergescope/autodiff.hpp"
#include "divergescope/error.hpp"

namespace divergescope::ad {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

std::vector<double>& Node::ensure_grad() {
  if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
  return grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return filled(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::filled(Shape shape, double value, bool requires_grad) {
  const auto n = shape_size(shape);
  return from(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  for (auto d : shape) {
    if (d == 0) throw UsageError(fmt::format("tensor dimensions must be positive: {}", shape_string(shape)));
  }
  if (values.size() != shape_size(shape)) {
    throw UsageError(fmt::format("tensor of shape {} needs {} values, got {}", shape_string(shape),
                                 shape_size(shape), values.size()));
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->data = std::move(values);
  node->requires_grad = requires_grad;
  if (requires_grad) node->ensure_grad();
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value, bool requires_grad) { return from({1}, {value}, requires_grad); }

const Shape& Tensor::shape() const { return node_->shape; }
std::size_t Tensor::size() const { return node_->data.size(); }
std::span<const double> Tensor::data() const { return node_->data; }
std::span<double> Tensor::mutable_data() { return node_->data; }
std::span<const double> Tensor::grad() const { return node_->grad; }
std::span<double> Tensor::mutable_grad() { return node_->ensure_grad(); }
bool Tensor::requires_grad() const { return node_->requires_grad; }
const std::string& Tensor::op_name() const { return node_->op; }
const std::vector<Tensor>& Tensor::inputs() const { return node_->inputs; }

void Tensor::zero_grad() {
  if (node_->requires_grad) std::fill(node_->ensure_grad().begin(), node_->grad.end(), 0.0);
}

double Tensor::item() const {
  if (size() != 1) throw UsageError(fmt::format("item() on tensor of shape {}", shape_string(shape())));
  return node_->data[0];
}

double Tensor::at(std::initializer_list<std::size_t> index) const {
  if (index.size() != rank()) throw UsageError("at(): index rank mismatch");
  std::size_t offset = 0;
  std::size_t axis = 0;
  for (auto i : index) {
    if (i >= shape()[axis]) throw UsageError("at(): index out of range");
    offset = offset * shape()[axis] + i;
    ++axis;
  }
  return node_->data[offset];
}

Tensor Tensor::detach(bool requires_grad) const { return from(shape(), node_->data, requires_grad); }

std::vector<Tensor> topological_order(const Tensor& root) {
  std::vector<Tensor> order;
  std::unordered_set<const Node*> visited;
  // Iterative post-order DFS; recursion depth would track LSTM length otherwise.
  std::vector<std::pair<Tensor, std::size_t>> stack;
  stack.emplace_back(root, 0);
  visited.insert(root.node());
  while (!stack.empty()) {
    auto& [t, next] = stack.back();
    const auto& inputs = t.inputs();
    if (next < inputs.size()) {
      const Tensor child = inputs[next++];
      if (visited.insert(child.node()).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(t);
      stack.pop_back();
    }
  }
  return order;
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw UsageError(fmt::format("backward() needs a scalar loss, got shape {}",
                                 loss.defined() ? shape_string(loss.shape()) : "undefined"));
  }
  if (!loss.requires_grad()) return;
  const auto order = topological_order(loss);
  for (const auto& t : order) {
    if (!t.node()->is_leaf() && t.node()->requires_grad) {
      auto& g = t.node()->ensure_grad();
      std::fill(g.begin(), g.end(), 0.0);
    }
  }
  Node& root = *loss.node();
  if (root.is_leaf()) {
    root.ensure_grad()[0] += 1.0;
    return;
  }
  root.ensure_grad()[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node& n = *it->node();
    if (!n.is_leaf() && n.requires_grad && n.backward) n.backward(n);
  }
}

void optimizer_step(OptimizerState& state, std::span<const Tensor> parameters) {
  if (state.kind == OptimizerKind::kAdam && state.first_moment.empty()) {
    for (const auto& p : parameters) {
      state.first_moment.emplace_back(p.size(), 0.0);
      state.second_moment.emplace_back(p.size(), 0.0);
    }
  }
  if (state.kind == OptimizerKind::kAdam && state.first_moment.size() != parameters.size()) {
    throw UsageError("optimizer state was built for a different parameter list");
  }
  ++state.step;
  const double bias1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bias2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < parameters.size(); ++k) {
    Tensor p = parameters[k];
    if (!p.requires_grad() || p.grad().size() != p.size()) {
      throw UsageError(fmt::format("optimizer_step: parameter {} has no gradient", k));
    }
    auto values = p.mutable_data();
    auto grads = p.mutable_grad();
    if (state.kind == OptimizerKind::kSgd) {
      for (std::size_t i = 0; i < values.size(); ++i) values[i] -= state.learning_rate * grads[i];
    } else {
      auto& m = state.first_moment[k];
      auto& v = state.second_moment[k];
      if (m.size() != values.size()) throw UsageError("optimizer moment buffer shape mismatch");
      for (std::size_t i = 0; i < values.size(); ++i) {
        const double g = grads[i];
        m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
        v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
        const double m_hat = m[i] / bias1;
        const double v_hat = v[i] / bias2;
        values[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
      }
    }
    std::fill(grads.begin(), grads.end(), 0.0);
  }
}

namespace {

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
}

}  // namespace

GradCheckResult grad_check_at(const ScalarFunction& fn, std::span<const Tensor> inputs, double eps) {
  GradCheckResult result;
  std::vector<Tensor> leaves(inputs.begin(), inputs.end());
  for (auto& t : leaves) t.zero_grad();
  const Tensor loss = fn(leaves);
  backward(loss);
  for (auto& t : leaves) {
    if (!t.requires_grad()) continue;
    const std::vector<double> analytic(t.grad().begin(), t.grad().end());
    auto values = t.mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + eps;
      const double plus = fn(leaves).item();
      values[i] = saved - eps;
      const double minus = fn(leaves).item();
      values[i] = saved;
      const double numeric = (plus - minus) / (2.0 * eps);
      result.max_relative_error = std::max(result.max_relative_error, relative_error(analytic[i], numeric));
    }
  }
  return result;
}

GradCheckResult grad_check(const ScalarFunction& fn, const std::vector<Shape>& input_shapes,
                           const GradCheckOptions& options) {
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> draw(options.low, options.high);
  std::size_t resamples = 0;
  while (true) {
    std::vector<Tensor> inputs;
    for (const auto& shape : input_shapes) {
      std::vector<double> values(shape_size(shape));
      for (auto& v : values) v = draw(rng);
      inputs.push_back(Tensor::from(shape, std::move(values), true));
    }
    if (options.near_kink && options.near_kink(inputs)) {
      if (++resamples > 1000) throw NumericalError("grad_check: could not find a smooth point");
      continue;
    }
    auto result = grad_check_at(fn, inputs, options.eps);
    result.resamples = resamples;
    return result;
  }
}

void save_parameters(std::ostream& out, const NamedParameters& params) {
  for (const auto& [name, t] : params) {
    if (name.empty() || name.find_first_of(" \t\n") != std::string::npos) {
      throw UsageError(fmt::format("parameter name '{}' must be non-empty without whitespace", name));
    }
    out << name << ' ' << t.rank();
    for (auto d : t.shape()) out << ' ' << d;
    out << '\n';
    const auto values = t.data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) out << ' ';
      out << fmt::format("{:.17g}", values[i]);
    }
    out << '\n';
  }
}

std::map<std::string, Tensor> load_parameters(std::istream& in) {
  std::map<std::string, Tensor> params;
  std::string header;
  while (std::getline(in, header)) {
    if (header.empty()) continue;
    std::istringstream hs(header);
    std::string name;
    std::size_t rank = 0;
    if (!(hs >> name >> rank)) throw DataError(fmt::format("bad parameter header '{}'", header));
    Shape shape(rank);
    for (auto& d : shape) {
      if (!(hs >> d) || d == 0) throw DataError(fmt::format("bad shape for parameter '{}'", name));
    }
    std::string line;
    if (!std::getline(in, line)) throw DataError(fmt::format("missing values for parameter '{}'", name));
    std::istringstream vs(line);
    std::vector<double> values;
    std::string token;
    while (vs >> token) {
      try {
        values.push_back(std::stod(token));
      } catch (const std::exception&) {
        throw DataError(fmt::format("bad value '{}' in parameter '{}'", token, name));
      }
    }
    if (values.size() != shape_size(shape)) {
      throw DataError(fmt::format("parameter '{}' expects {} values, found {}", name,
                                  shape_size(shape), values.size()));
    }
    params[name] = Tensor::from(shape, std::move(values), true);
  }
  return params;
}

}  // namespace divergescope::ad
