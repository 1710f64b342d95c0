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
#include <limits>

#include <fmt/format.h>

#include "divergescope/autodiff.hpp"
#include "divergescope/error.hpp"

namespace divergescope::ad {
namespace {

using Backward = std::function<void(Node&)>;

// Builds an op node. The graph edge is only kept when some input needs a
// gradient; otherwise the result is a plain constant.
Tensor make_op(Shape shape, std::vector<double> data, std::string op, std::vector<Tensor> inputs,
               Backward fn) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->op = std::move(op);
  const bool needs = std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return t.requires_grad(); });
  if (needs) {
    node->requires_grad = true;
    node->inputs = std::move(inputs);
    node->backward = std::move(fn);
  }
  return Tensor(std::move(node));
}

Node& in(Node& self, std::size_t k) { return *self.inputs[k].node(); }

// Gradient buffer of input k, or nullptr when it takes none.
double* grad_of(Node& self, std::size_t k) {
  Node& n = in(self, k);
  return n.requires_grad ? n.ensure_grad().data() : nullptr;
}

struct AxisLayout {
  std::size_t outer = 1;
  std::size_t mid = 1;
  std::size_t inner = 1;
};

AxisLayout layout(const Shape& shape, std::size_t axis) {
  AxisLayout l;
  for (std::size_t i = 0; i < axis; ++i) l.outer *= shape[i];
  l.mid = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) l.inner *= shape[i];
  return l;
}

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.rank() != rank) {
    throw UsageError(fmt::format("{}: expected rank {}, got shape {}", op, rank, shape_string(t.shape())));
  }
}

void require_axis(const Tensor& t, std::size_t axis, const char* op) {
  if (axis >= t.rank()) {
    throw UsageError(fmt::format("{}: axis {} out of range for shape {}", op, axis, shape_string(t.shape())));
  }
}

bool is_suffix(const Shape& small, const Shape& large) {
  if (small.size() > large.size()) return false;
  return std::equal(small.rbegin(), small.rend(), large.rbegin());
}

enum class Binary { kAdd, kSub, kMul };

Tensor binary(const Tensor& a, const Tensor& b, Binary kind) {
  const char* name = kind == Binary::kAdd ? "add" : kind == Binary::kSub ? "sub" : "mul";
  const bool a_large = a.size() >= b.size();
  const Shape& large_shape = a_large ? a.shape() : b.shape();
  const Shape& small_shape = a_large ? b.shape() : a.shape();
  if (!is_suffix(small_shape, large_shape)) {
    throw UsageError(fmt::format("{}: shapes {} and {} do not broadcast", name, shape_string(a.shape()),
                                 shape_string(b.shape())));
  }
  const std::size_t n = std::max(a.size(), b.size());
  const std::size_t na = a.size();
  const std::size_t nb = b.size();
  const auto da = a.data();
  const auto db = b.data();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = da[i % na];
    const double y = db[i % nb];
    out[i] = kind == Binary::kAdd ? x + y : kind == Binary::kSub ? x - y : x * y;
  }
  return make_op(large_shape, std::move(out), name, {a, b}, [kind, n, na, nb](Node& self) {
    const auto& g = self.grad;
    double* ga = grad_of(self, 0);
    double* gb = grad_of(self, 1);
    const auto& xa = in(self, 0).data;
    const auto& xb = in(self, 1).data;
    for (std::size_t i = 0; i < n; ++i) {
      switch (kind) {
        case Binary::kAdd:
          if (ga) ga[i % na] += g[i];
          if (gb) gb[i % nb] += g[i];
          break;
        case Binary::kSub:
          if (ga) ga[i % na] += g[i];
          if (gb) gb[i % nb] -= g[i];
          break;
        case Binary::kMul:
          if (ga) ga[i % na] += g[i] * xb[i % nb];
          if (gb) gb[i % nb] += g[i] * xa[i % na];
          break;
      }
    }
  });
}

// Elementwise unary op whose derivative is expressed through input x and output y.
template <typename Forward, typename Derivative>
Tensor unary(const Tensor& a, const char* name, Forward f, Derivative df) {
  const auto x = a.data();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  return make_op(a.shape(), std::move(out), name, {a}, [df](Node& self) {
    double* ga = grad_of(self, 0);
    const auto& x = in(self, 0).data;
    for (std::size_t i = 0; i < self.data.size(); ++i) ga[i] += self.grad[i] * df(x[i], self.data[i]);
  });
}

}  // namespace

std::size_t conv_output_size(std::size_t input, std::size_t kernel, std::size_t stride, std::size_t padding) {
  if (stride == 0) throw UsageError("stride must be positive");
  if (input + 2 * padding < kernel) {
    throw UsageError(fmt::format("window {} larger than padded input {}", kernel, input + 2 * padding));
  }
  return (input + 2 * padding - kernel) / stride + 1;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = a.dim(0);
  const std::size_t k = a.dim(1);
  const std::size_t n = b.dim(1);
  if (b.dim(0) != k) {
    throw UsageError(fmt::format("matmul: inner dimensions differ {} x {}", shape_string(a.shape()),
                                 shape_string(b.shape())));
  }
  const auto x = a.data();
  const auto y = b.data();
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double v = x[i * k + p];
      if (v == 0.0) continue;
      const double* row = &y[p * n];
      double* dst = &out[i * n];
      for (std::size_t j = 0; j < n; ++j) dst[j] += v * row[j];
    }
  }
  return make_op({m, n}, std::move(out), "matmul", {a, b}, [m, k, n](Node& self) {
    const auto& g = self.grad;
    const auto& x = in(self, 0).data;
    const auto& y = in(self, 1).data;
    if (double* ga = grad_of(self, 0)) {
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += g[i * n + j] * y[p * n + j];
          ga[i * k + p] += s;
        }
      }
    }
    if (double* gb = grad_of(self, 1)) {
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const double v = x[i * k + p];
          if (v == 0.0) continue;
          for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += v * g[i * n + j];
        }
      }
    }
  });
}

Tensor transpose(const Tensor& a) {
  require_rank(a, 2, "transpose");
  const std::size_t r = a.dim(0);
  const std::size_t c = a.dim(1);
  const auto x = a.data();
  std::vector<double> out(r * c);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = x[i * c + j];
  }
  return make_op({c, r}, std::move(out), "transpose", {a}, [r, c](Node& self) {
    double* ga = grad_of(self, 0);
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += self.grad[j * r + i];
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) { return binary(a, b, Binary::kAdd); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary(a, b, Binary::kSub); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary(a, b, Binary::kMul); }

Tensor scale(const Tensor& a, double factor) {
  return unary(a, "scale", [factor](double x) { return x * factor; }, [factor](double, double) { return factor; });
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw UsageError("concat: no inputs");
  require_axis(parts[0], axis, "concat");
  Shape shape = parts[0].shape();
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.rank() != shape.size()) throw UsageError("concat: rank mismatch");
    for (std::size_t i = 0; i < shape.size(); ++i) {
      if (i != axis && p.dim(i) != shape[i]) {
        throw UsageError(fmt::format("concat: shape {} does not match {} off axis {}", shape_string(p.shape()),
                                     shape_string(shape), axis));
      }
    }
    total += p.dim(axis);
  }
  shape[axis] = total;
  const auto l = layout(shape, axis);
  std::vector<double> out(shape_size(shape));
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    offsets.push_back(offset);
    const std::size_t width = p.dim(axis) * l.inner;
    const auto x = p.data();
    for (std::size_t o = 0; o < l.outer; ++o) {
      std::copy_n(&x[o * width], width, &out[o * total * l.inner + offset * l.inner]);
    }
    offset += p.dim(axis);
  }
  return make_op(shape, std::move(out), "concat", parts, [l, total, offsets, axis](Node& self) {
    for (std::size_t k = 0; k < self.inputs.size(); ++k) {
      double* gk = grad_of(self, k);
      if (!gk) continue;
      const std::size_t width = in(self, k).shape[axis] * l.inner;
      for (std::size_t o = 0; o < l.outer; ++o) {
        const double* src = &self.grad[o * total * l.inner + offsets[k] * l.inner];
        for (std::size_t i = 0; i < width; ++i) gk[o * width + i] += src[i];
      }
    }
  });
}

Tensor slice(const Tensor& a, std::size_t axis, std::size_t start, std::size_t length) {
  require_axis(a, axis, "slice");
  if (length == 0 || start + length > a.dim(axis)) {
    throw UsageError(fmt::format("slice: [{}, {}) out of range for axis of size {}", start, start + length,
                                 a.dim(axis)));
  }
  const auto l = layout(a.shape(), axis);
  Shape shape = a.shape();
  shape[axis] = length;
  const auto x = a.data();
  std::vector<double> out(shape_size(shape));
  const std::size_t width = length * l.inner;
  for (std::size_t o = 0; o < l.outer; ++o) {
    std::copy_n(&x[o * l.mid * l.inner + start * l.inner], width, &out[o * width]);
  }
  return make_op(shape, std::move(out), "slice", {a}, [l, start, width](Node& self) {
    double* ga = grad_of(self, 0);
    for (std::size_t o = 0; o < l.outer; ++o) {
      double* dst = &ga[o * l.mid * l.inner + start * l.inner];
      for (std::size_t i = 0; i < width; ++i) dst[i] += self.grad[o * width + i];
    }
  });
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_size(shape) != a.size()) {
    throw UsageError(fmt::format("reshape: {} to {} changes the element count", shape_string(a.shape()),
                                 shape_string(shape)));
  }
  std::vector<double> out(a.data().begin(), a.data().end());
  return make_op(std::move(shape), std::move(out), "reshape", {a}, [](Node& self) {
    double* ga = grad_of(self, 0);
    for (std::size_t i = 0; i < self.grad.size(); ++i) ga[i] += self.grad[i];
  });
}

Tensor reverse(const Tensor& a, std::size_t axis) {
  require_axis(a, axis, "reverse");
  const auto l = layout(a.shape(), axis);
  const auto x = a.data();
  std::vector<double> out(x.size());
  auto mirror = [l](std::size_t o, std::size_t m, std::size_t i) {
    return (o * l.mid + (l.mid - 1 - m)) * l.inner + i;
  };
  for (std::size_t o = 0; o < l.outer; ++o) {
    for (std::size_t m = 0; m < l.mid; ++m) {
      for (std::size_t i = 0; i < l.inner; ++i) out[(o * l.mid + m) * l.inner + i] = x[mirror(o, m, i)];
    }
  }
  return make_op(a.shape(), std::move(out), "reverse", {a}, [l, mirror](Node& self) {
    double* ga = grad_of(self, 0);
    for (std::size_t o = 0; o < l.outer; ++o) {
      for (std::size_t m = 0; m < l.mid; ++m) {
        for (std::size_t i = 0; i < l.inner; ++i) ga[mirror(o, m, i)] += self.grad[(o * l.mid + m) * l.inner + i];
      }
    }
  });
}

Tensor tanh(const Tensor& a) {
  return unary(a, "tanh", [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      a, "sigmoid",
      [](double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor relu(const Tensor& a) {
  return unary(a, "relu", [](double x) { return x > 0 ? x : 0.0; }, [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Tensor exp(const Tensor& a) {
  return unary(a, "exp", [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  for (double v : a.data()) {
    if (!(v > 0)) throw NumericalError(fmt::format("log of non-positive value {}", v));
  }
  return unary(a, "log", [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor softmax(const Tensor& a, std::size_t axis) {
  require_axis(a, axis, "softmax");
  const auto l = layout(a.shape(), axis);
  const auto x = a.data();
  std::vector<double> out(x.size());
  for (std::size_t o = 0; o < l.outer; ++o) {
    for (std::size_t i = 0; i < l.inner; ++i) {
      const std::size_t base = o * l.mid * l.inner + i;
      double hi = -std::numeric_limits<double>::infinity();
      for (std::size_t m = 0; m < l.mid; ++m) hi = std::max(hi, x[base + m * l.inner]);
      double total = 0.0;
      for (std::size_t m = 0; m < l.mid; ++m) {
        out[base + m * l.inner] = std::exp(x[base + m * l.inner] - hi);
        total += out[base + m * l.inner];
      }
      for (std::size_t m = 0; m < l.mid; ++m) out[base + m * l.inner] /= total;
    }
  }
  return make_op(a.shape(), std::move(out), "softmax", {a}, [l](Node& self) {
    double* ga = grad_of(self, 0);
    const auto& y = self.data;
    const auto& g = self.grad;
    for (std::size_t o = 0; o < l.outer; ++o) {
      for (std::size_t i = 0; i < l.inner; ++i) {
        const std::size_t base = o * l.mid * l.inner + i;
        double dot = 0.0;
        for (std::size_t m = 0; m < l.mid; ++m) dot += g[base + m * l.inner] * y[base + m * l.inner];
        for (std::size_t m = 0; m < l.mid; ++m) {
          const std::size_t idx = base + m * l.inner;
          ga[idx] += y[idx] * (g[idx] - dot);
        }
      }
    }
  });
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  return make_op({1}, {s}, "sum", {a}, [](Node& self) {
    double* ga = grad_of(self, 0);
    const std::size_t n = in(self, 0).data.size();
    for (std::size_t i = 0; i < n; ++i) ga[i] += self.grad[0];
  });
}

Tensor mean(const Tensor& a) { return scale(sum(a), 1.0 / static_cast<double>(a.size())); }

Tensor max(const Tensor& a) {
  const auto x = a.data();
  const std::size_t best = static_cast<std::size_t>(std::max_element(x.begin(), x.end()) - x.begin());
  return make_op({1}, {x[best]}, "max", {a}, [best](Node& self) { grad_of(self, 0)[best] += self.grad[0]; });
}

Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias, std::size_t stride,
              std::size_t padding) {
  require_rank(input, 4, "conv2d");
  require_rank(kernel, 4, "conv2d");
  const std::size_t N = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
  const std::size_t O = kernel.dim(0), KH = kernel.dim(2), KW = kernel.dim(3);
  if (kernel.dim(1) != C) {
    throw UsageError(fmt::format("conv2d: kernel {} expects {} channels, input has {}",
                                 shape_string(kernel.shape()), kernel.dim(1), C));
  }
  const bool has_bias = bias.defined();
  if (has_bias && (bias.rank() != 1 || bias.dim(0) != O)) {
    throw UsageError(fmt::format("conv2d: bias shape {} does not match {} filters", shape_string(bias.shape()), O));
  }
  const std::size_t OH = conv_output_size(H, KH, stride, padding);
  const std::size_t OW = conv_output_size(W, KW, stride, padding);
  const long pad = static_cast<long>(padding);
  const long st = static_cast<long>(stride);

  // Valid output column range for kernel column kw: 0 <= ow*stride + kw - pad < W.
  auto ow_range = [=](std::size_t kw) {
    const long lo_num = pad - static_cast<long>(kw);
    const long lo = lo_num <= 0 ? 0 : (lo_num + st - 1) / st;
    const long hi_num = static_cast<long>(W) - 1 + pad - static_cast<long>(kw);
    const long hi = hi_num < 0 ? -1 : std::min<long>(static_cast<long>(OW) - 1, hi_num / st);
    return std::pair<long, long>{lo, hi};
  };

  const auto x = input.data();
  const auto w = kernel.data();
  std::vector<double> out(N * O * OH * OW, 0.0);
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t o = 0; o < O; ++o) {
      double* plane = &out[(n * O + o) * OH * OW];
      if (has_bias) std::fill_n(plane, OH * OW, bias.data()[o]);
      for (std::size_t c = 0; c < C; ++c) {
        const double* src = &x[(n * C + c) * H * W];
        for (std::size_t kh = 0; kh < KH; ++kh) {
          for (std::size_t kw = 0; kw < KW; ++kw) {
            const double wv = w[((o * C + c) * KH + kh) * KW + kw];
            const auto [lo, hi] = ow_range(kw);
            for (std::size_t oh = 0; oh < OH; ++oh) {
              const long ih = static_cast<long>(oh) * st + static_cast<long>(kh) - pad;
              if (ih < 0 || ih >= static_cast<long>(H)) continue;
              const double* row = src + ih * static_cast<long>(W);
              double* dst = plane + oh * OW;
              for (long ow = lo; ow <= hi; ++ow) dst[ow] += wv * row[ow * st + static_cast<long>(kw) - pad];
            }
          }
        }
      }
    }
  }

  std::vector<Tensor> inputs{input, kernel};
  if (has_bias) inputs.push_back(bias);
  return make_op({N, O, OH, OW}, std::move(out), "conv2d", std::move(inputs),
                 [=](Node& self) {
                   const auto& g = self.grad;
                   const auto& x = in(self, 0).data;
                   const auto& w = in(self, 1).data;
                   double* gx = grad_of(self, 0);
                   double* gw = grad_of(self, 1);
                   double* gb = has_bias ? grad_of(self, 2) : nullptr;
                   for (std::size_t n = 0; n < N; ++n) {
                     for (std::size_t o = 0; o < O; ++o) {
                       const double* gplane = &g[(n * O + o) * OH * OW];
                       if (gb) {
                         for (std::size_t i = 0; i < OH * OW; ++i) gb[o] += gplane[i];
                       }
                       for (std::size_t c = 0; c < C; ++c) {
                         const std::size_t in_off = (n * C + c) * H * W;
                         for (std::size_t kh = 0; kh < KH; ++kh) {
                           for (std::size_t kw = 0; kw < KW; ++kw) {
                             const std::size_t widx = ((o * C + c) * KH + kh) * KW + kw;
                             const double wv = w[widx];
                             const auto [lo, hi] = ow_range(kw);
                             double wsum = 0.0;
                             for (std::size_t oh = 0; oh < OH; ++oh) {
                               const long ih = static_cast<long>(oh) * st + static_cast<long>(kh) - pad;
                               if (ih < 0 || ih >= static_cast<long>(H)) continue;
                               const std::size_t row = in_off + static_cast<std::size_t>(ih) * W;
                               const double* grow = gplane + oh * OW;
                               for (long ow = lo; ow <= hi; ++ow) {
                                 const std::size_t idx = row + static_cast<std::size_t>(ow * st + static_cast<long>(kw) - pad);
                                 if (gx) gx[idx] += wv * grow[ow];
                                 wsum += x[idx] * grow[ow];
                               }
                             }
                             if (gw) gw[widx] += wsum;
                           }
                         }
                       }
                     }
                   }
                 });
}

Tensor maxpool2d(const Tensor& input, std::size_t window, std::size_t stride) {
  require_rank(input, 4, "maxpool2d");
  if (window == 0) throw UsageError("maxpool2d: window must be positive");
  const std::size_t N = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
  const std::size_t OH = conv_output_size(H, window, stride, 0);
  const std::size_t OW = conv_output_size(W, window, stride, 0);
  const auto x = input.data();
  std::vector<double> out(N * C * OH * OW);
  std::vector<std::size_t> argmax(out.size());
  for (std::size_t nc = 0; nc < N * C; ++nc) {
    for (std::size_t oh = 0; oh < OH; ++oh) {
      for (std::size_t ow = 0; ow < OW; ++ow) {
        std::size_t best = nc * H * W + oh * stride * W + ow * stride;
        for (std::size_t dh = 0; dh < window; ++dh) {
          for (std::size_t dw = 0; dw < window; ++dw) {
            const std::size_t idx = nc * H * W + (oh * stride + dh) * W + ow * stride + dw;
            if (x[idx] > x[best]) best = idx;
          }
        }
        const std::size_t o = (nc * OH + oh) * OW + ow;
        out[o] = x[best];
        argmax[o] = best;
      }
    }
  }
  return make_op({N, C, OH, OW}, std::move(out), "maxpool2d", {input}, [argmax = std::move(argmax)](Node& self) {
    double* gx = grad_of(self, 0);
    for (std::size_t i = 0; i < argmax.size(); ++i) gx[argmax[i]] += self.grad[i];
  });
}

Tensor pad2d(const Tensor& a, std::size_t height, std::size_t width) {
  if (a.rank() < 2) throw UsageError("pad2d: need at least two axes");
  const std::size_t H = a.dim(a.rank() - 2);
  const std::size_t W = a.dim(a.rank() - 1);
  if (height < H || width < W) {
    throw UsageError(fmt::format("pad2d: cannot pad {} down to {}x{}", shape_string(a.shape()), height, width));
  }
  Shape shape = a.shape();
  shape[shape.size() - 2] = height;
  shape[shape.size() - 1] = width;
  const std::size_t planes = a.size() / (H * W);
  const auto x = a.data();
  std::vector<double> out(planes * height * width, 0.0);
  for (std::size_t p = 0; p < planes; ++p) {
    for (std::size_t h = 0; h < H; ++h) std::copy_n(&x[(p * H + h) * W], W, &out[(p * height + h) * width]);
  }
  return make_op(shape, std::move(out), "pad2d", {a}, [=](Node& self) {
    double* ga = grad_of(self, 0);
    for (std::size_t p = 0; p < planes; ++p) {
      for (std::size_t h = 0; h < H; ++h) {
        for (std::size_t w = 0; w < W; ++w) ga[(p * H + h) * W + w] += self.grad[(p * height + h) * width + w];
      }
    }
  });
}

namespace {

struct PairDims {
  std::size_t m, n, d;
};

PairDims pair_dims(const Tensor& a, const Tensor& b, const char* op) {
  require_rank(a, 2, op);
  require_rank(b, 2, op);
  if (a.dim(1) != b.dim(1)) {
    throw UsageError(fmt::format("{}: row widths differ {} vs {}", op, shape_string(a.shape()), shape_string(b.shape())));
  }
  return {a.dim(0), b.dim(0), a.dim(1)};
}

std::vector<double> row_norms(std::span<const double> x, std::size_t rows, std::size_t d) {
  std::vector<double> norms(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) s += x[i * d + k] * x[i * d + k];
    norms[i] = std::sqrt(s);
  }
  return norms;
}

}  // namespace

Tensor pairwise_dot(const Tensor& a, const Tensor& b) {
  const auto [m, n, d] = pair_dims(a, b, "pairwise_dot");
  return reshape(matmul(a, transpose(b)), {m, n});
}

Tensor pairwise_cosine(const Tensor& a, const Tensor& b) {
  const auto [m, n, d] = pair_dims(a, b, "pairwise_cosine");
  const auto x = a.data();
  const auto y = b.data();
  const auto na = row_norms(x, m, d);
  const auto nb = row_norms(y, n, d);
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (na[i] == 0.0 || nb[j] == 0.0) continue;
      double dot = 0.0;
      for (std::size_t k = 0; k < d; ++k) dot += x[i * d + k] * y[j * d + k];
      out[i * n + j] = dot / (na[i] * nb[j]);
    }
  }
  return make_op({m, n}, std::move(out), "pairwise_cosine", {a, b}, [=](Node& self) {
    const auto& x = in(self, 0).data;
    const auto& y = in(self, 1).data;
    double* ga = grad_of(self, 0);
    double* gb = grad_of(self, 1);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (na[i] == 0.0 || nb[j] == 0.0) continue;
        const double g = self.grad[i * n + j];
        if (g == 0.0) continue;
        const double c = self.data[i * n + j];
        const double inv = 1.0 / (na[i] * nb[j]);
        for (std::size_t k = 0; k < d; ++k) {
          if (ga) ga[i * d + k] += g * (y[j * d + k] * inv - c * x[i * d + k] / (na[i] * na[i]));
          if (gb) gb[j * d + k] += g * (x[i * d + k] * inv - c * y[j * d + k] / (nb[j] * nb[j]));
        }
      }
    }
  });
}

Tensor pairwise_l2(const Tensor& a, const Tensor& b) {
  const auto [m, n, d] = pair_dims(a, b, "pairwise_l2");
  const auto x = a.data();
  const auto y = b.data();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = x[i * d + k] - y[j * d + k];
        s += diff * diff;
      }
      out[i * n + j] = std::sqrt(s);
    }
  }
  return make_op({m, n}, std::move(out), "pairwise_l2", {a, b}, [=](Node& self) {
    const auto& x = in(self, 0).data;
    const auto& y = in(self, 1).data;
    double* ga = grad_of(self, 0);
    double* gb = grad_of(self, 1);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double dist = self.data[i * n + j];
        if (dist == 0.0) continue;
        const double g = self.grad[i * n + j] / dist;
        for (std::size_t k = 0; k < d; ++k) {
          const double diff = x[i * d + k] - y[j * d + k];
          if (ga) ga[i * d + k] += g * diff;
          if (gb) gb[j * d + k] -= g * diff;
        }
      }
    }
  });
}

Tensor kl_loss(const Tensor& predicted, const Tensor& gold) {
  if (predicted.size() != gold.size()) {
    throw UsageError(fmt::format("kl_loss: predicted {} vs gold {}", shape_string(predicted.shape()),
                                 shape_string(gold.shape())));
  }
  constexpr double kFloor = 1e-12;
  const auto p = predicted.data();
  const auto q = gold.data();
  double gold_total = 0.0;
  for (double v : q) {
    if (v < 0) throw UsageError("kl_loss: gold distribution has a negative entry");
    gold_total += v;
  }
  if (std::abs(gold_total - 1.0) > 1e-6) {
    throw UsageError(fmt::format("kl_loss: gold distribution sums to {}", gold_total));
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (q[i] > 0) loss += q[i] * (std::log(q[i]) - std::log(std::max(p[i], kFloor)));
  }
  std::vector<double> target(q.begin(), q.end());
  return make_op({1}, {loss}, "kl_loss", {predicted}, [target = std::move(target)](Node& self) {
    double* gp = grad_of(self, 0);
    const auto& p = in(self, 0).data;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (target[i] > 0 && p[i] > kFloor) gp[i] -= self.grad[0] * target[i] / p[i];
    }
  });
}

}  // namespace divergescope::ad
