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

// A small define-by-run reverse-mode autodiff engine. Every op returns a new
// Tensor that remembers its inputs and how to push gradients back to them;
// backward() walks that graph in reverse topological order.
//
// Tensors are cheap shared handles. Storage is dense row-major double.

#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace divergescope::ad {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

struct Node;

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor filled(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t dim(std::size_t axis) const { return shape().at(axis); }
  std::size_t rank() const { return shape().size(); }
  std::size_t size() const;

  std::span<const double> data() const;
  // Writes bypass the graph; only use on leaves (parameters, inputs).
  std::span<double> mutable_data();
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  bool requires_grad() const;
  void zero_grad();

  double item() const;
  double at(std::initializer_list<std::size_t> index) const;

  // Copy of the values as a fresh leaf.
  Tensor detach(bool requires_grad = false) const;

  const std::string& op_name() const;
  const std::vector<Tensor>& inputs() const;

  Node* node() const { return node_.get(); }
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<Node> node_;
};

struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // sized lazily, only when requires_grad
  bool requires_grad = false;
  std::string op = "leaf";
  std::vector<Tensor> inputs;
  // Pushes this node's grad into its inputs' grads.
  std::function<void(Node& self)> backward;

  bool is_leaf() const { return inputs.empty(); }
  std::vector<double>& ensure_grad();
};

// Nodes reachable from `root`, inputs before consumers, each exactly once.
std::vector<Tensor> topological_order(const Tensor& root);

// Accumulates d(loss)/d(leaf) into every reachable leaf that requires grad.
// Intermediate gradients are reset on each call, leaf gradients add up.
void backward(const Tensor& loss);

// ---- forward ops -----------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);  // (m,k) x (k,n)
Tensor transpose(const Tensor& a);                // 2-D only
// Elementwise with broadcasting over leading axes: the smaller operand's
// shape must be a suffix of the larger one's.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
Tensor slice(const Tensor& a, std::size_t axis, std::size_t start, std::size_t length);
Tensor reshape(const Tensor& a, Shape shape);
Tensor reverse(const Tensor& a, std::size_t axis);
Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor softmax(const Tensor& a, std::size_t axis);
Tensor sum(const Tensor& a);   // -> scalar
Tensor mean(const Tensor& a);  // -> scalar
Tensor max(const Tensor& a);   // -> scalar; first maximal element wins ties
// input (N,C,H,W), kernel (O,C,KH,KW), optional bias (O). Cross-correlation.
Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias, std::size_t stride,
              std::size_t padding);
Tensor maxpool2d(const Tensor& input, std::size_t window, std::size_t stride);
// Zero-pads the last two axes (bottom/right) up to (height, width).
Tensor pad2d(const Tensor& a, std::size_t height, std::size_t width);

// Row-vs-row similarity matrices for A (m,d), B (n,d) -> (m,n).
Tensor pairwise_dot(const Tensor& a, const Tensor& b);
// Zero (with zero gradient) when either row has zero norm.
Tensor pairwise_cosine(const Tensor& a, const Tensor& b);
// Euclidean distance; the gradient at coincident rows is taken as zero.
Tensor pairwise_l2(const Tensor& a, const Tensor& b);

// sum_i gold_i (ln gold_i - ln max(pred_i, 1e-12)), with 0 ln 0 = 0.
// Gold is treated as a constant.
Tensor kl_loss(const Tensor& predicted, const Tensor& gold);

// Output spatial size of conv/pool along one axis.
std::size_t conv_output_size(std::size_t input, std::size_t kernel, std::size_t stride,
                             std::size_t padding);

// ---- optimizers -------------------------------------------------------------

enum class OptimizerKind { kSgd, kAdam };

struct OptimizerState {
  OptimizerKind kind = OptimizerKind::kAdam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
};

// Updates every parameter from its gradient, then zeroes the gradients.
void optimizer_step(OptimizerState& state, std::span<const Tensor> parameters);

// ---- gradient checking -----------------------------------------------------

struct GradCheckOptions {
  double eps = 1e-4;
  std::uint64_t seed = 0;
  // Inputs are drawn uniformly from [low, high].
  double low = -1.0;
  double high = 1.0;
  // Optional: return true if the sampled point sits too close to a kink
  // (relu at 0, ties under max); the point is then resampled.
  std::function<bool(std::span<const Tensor>)> near_kink;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t resamples = 0;
};

using ScalarFunction = std::function<Tensor(std::span<const Tensor>)>;

// Central differences vs backward(); error per component is
// |a - n| / max(1e-8, |a| + |n|), maximized over all input components.
GradCheckResult grad_check(const ScalarFunction& fn, const std::vector<Shape>& input_shapes,
                           const GradCheckOptions& options = {});
// Same, at caller-provided points (their values are restored afterwards).
GradCheckResult grad_check_at(const ScalarFunction& fn, std::span<const Tensor> inputs,
                              double eps = 1e-4);

// ---- parameter containers ---------------------------------------------------

using NamedParameters = std::vector<std::pair<std::string, Tensor>>;

// Text container: `name rank d1..dk` then the row-major values at full
// (round-trip) precision, one parameter per two lines.
void save_parameters(std::ostream& out, const NamedParameters& params);
std::map<std::string, Tensor> load_parameters(std::istream& in);

}  // namespace divergescope::ad
