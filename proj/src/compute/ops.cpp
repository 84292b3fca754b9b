// SPDX-License-Identifier: Apache-2.0
#include "oleo/compute/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "oleo/error.hpp"

namespace oleo::compute {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

[[noreturn]] void shape_fail(const char* op, const Tensor& a, const Tensor& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a.shape()) + " and " +
                   shape_str(b.shape()));
}

void require_rank(const char* op, const Tensor& x, std::size_t rank) {
  if (x.rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got shape " +
                     shape_str(x.shape()));
  }
}

Node& in(Node& self, std::size_t i) { return *self.inputs[i]; }

// Elementwise unary op given f(x) and f'(x, y).
template <typename F, typename DF>
Tensor unary(const char* op, const Tensor& x, F f, DF df) {
  std::vector<double> out(x.size());
  auto xv = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(xv[i]);
  return detail::make_result(op, x.shape(), std::move(out), {x}, [df](Node& self) {
    Node& a = in(self, 0);
    if (!a.requires_grad) return;
    a.ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) a.grad[i] += self.grad[i] * df(a.value[i], self.value[i]);
  });
}

void accumulate(Node& target, std::span<const double> g, double factor = 1.0) {
  if (!target.requires_grad) return;
  target.ensure_grad();
  for (std::size_t i = 0; i < g.size(); ++i) target.grad[i] += factor * g[i];
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) shape_fail("matmul", a, b);
  const auto n = a.dim(0), k = a.dim(1), m = b.dim(1);
  std::vector<double> out(n * m);
  MapMat(out.data(), n, m).noalias() = ConstMapMat(a.data().data(), n, k) * ConstMapMat(b.data().data(), k, m);
  return detail::make_result("matmul", {n, m}, std::move(out), {a, b}, [n, k, m](Node& self) {
    ConstMapMat g(self.grad.data(), n, m);
    Node& A = in(self, 0);
    Node& B = in(self, 1);
    if (A.requires_grad) {
      A.ensure_grad();
      MapMat(A.grad.data(), n, k).noalias() += g * ConstMapMat(B.value.data(), k, m).transpose();
    }
    if (B.requires_grad) {
      B.ensure_grad();
      MapMat(B.grad.data(), k, m).noalias() += ConstMapMat(A.value.data(), n, k).transpose() * g;
    }
  });
}

Tensor bmm(const Tensor& a, const Tensor& b, bool transpose_b) {
  if (a.rank() != 3 || b.rank() != 3 || a.dim(0) != b.dim(0)) shape_fail("bmm", a, b);
  const auto batch = a.dim(0), n = a.dim(1), k = a.dim(2);
  const auto bk = transpose_b ? b.dim(2) : b.dim(1);
  const auto m = transpose_b ? b.dim(1) : b.dim(2);
  if (bk != k) shape_fail("bmm", a, b);
  std::vector<double> out(batch * n * m);
  for (std::size_t s = 0; s < batch; ++s) {
    ConstMapMat A(a.data().data() + s * n * k, n, k);
    MapMat C(out.data() + s * n * m, n, m);
    if (transpose_b) {
      C.noalias() = A * ConstMapMat(b.data().data() + s * m * k, m, k).transpose();
    } else {
      C.noalias() = A * ConstMapMat(b.data().data() + s * k * m, k, m);
    }
  }
  return detail::make_result("bmm", {batch, n, m}, std::move(out), {a, b},
                             [batch, n, k, m, transpose_b](Node& self) {
                               Node& A = in(self, 0);
                               Node& B = in(self, 1);
                               if (A.requires_grad) A.ensure_grad();
                               if (B.requires_grad) B.ensure_grad();
                               for (std::size_t s = 0; s < batch; ++s) {
                                 ConstMapMat g(self.grad.data() + s * n * m, n, m);
                                 if (transpose_b) {
                                   // C = A B^T with B stored [m,k]
                                   if (A.requires_grad) {
                                     MapMat(A.grad.data() + s * n * k, n, k).noalias() +=
                                         g * ConstMapMat(B.value.data() + s * m * k, m, k);
                                   }
                                   if (B.requires_grad) {
                                     MapMat(B.grad.data() + s * m * k, m, k).noalias() +=
                                         g.transpose() * ConstMapMat(A.value.data() + s * n * k, n, k);
                                   }
                                 } else {
                                   if (A.requires_grad) {
                                     MapMat(A.grad.data() + s * n * k, n, k).noalias() +=
                                         g * ConstMapMat(B.value.data() + s * k * m, k, m).transpose();
                                   }
                                   if (B.requires_grad) {
                                     MapMat(B.grad.data() + s * k * m, k, m).noalias() +=
                                         ConstMapMat(A.value.data() + s * n * k, n, k).transpose() * g;
                                   }
                                 }
                               }
                             });
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_fail("add", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  return detail::make_result("add", a.shape(), std::move(out), {a, b}, [](Node& self) {
    accumulate(in(self, 0), self.grad);
    accumulate(in(self, 1), self.grad);
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_fail("sub", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
  return detail::make_result("sub", a.shape(), std::move(out), {a, b}, [](Node& self) {
    accumulate(in(self, 0), self.grad);
    accumulate(in(self, 1), self.grad, -1.0);
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_fail("mul", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  return detail::make_result("mul", a.shape(), std::move(out), {a, b}, [](Node& self) {
    Node& A = in(self, 0);
    Node& B = in(self, 1);
    if (A.requires_grad) {
      A.ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) A.grad[i] += self.grad[i] * B.value[i];
    }
    if (B.requires_grad) {
      B.ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) B.grad[i] += self.grad[i] * A.value[i];
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * factor;
  return detail::make_result("scale", a.shape(), std::move(out), {a},
                             [factor](Node& self) { accumulate(in(self, 0), self.grad, factor); });
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  if (x.rank() < 1 || bias.rank() != 1 || x.shape().back() != bias.dim(0)) shape_fail("add_bias", x, bias);
  const auto d = bias.dim(0);
  std::vector<double> out(x.data().begin(), x.data().end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bias.data()[i % d];
  return detail::make_result("add_bias", x.shape(), std::move(out), {x, bias}, [d](Node& self) {
    accumulate(in(self, 0), self.grad);
    Node& b = in(self, 1);
    if (b.requires_grad) {
      b.ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) b.grad[i % d] += self.grad[i];
    }
  });
}

Tensor scale_rows(const Tensor& x, const Tensor& s) {
  if (x.rank() != 2 || s.size() != x.dim(0) || (s.rank() == 2 && s.dim(1) != 1) || s.rank() > 2) {
    shape_fail("scale_rows", x, s);
  }
  const auto n = x.dim(0), d = x.dim(1);
  std::vector<double> out(n * d);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) out[r * d + c] = x.data()[r * d + c] * s.data()[r];
  }
  return detail::make_result("scale_rows", x.shape(), std::move(out), {x, s}, [n, d](Node& self) {
    Node& X = in(self, 0);
    Node& S = in(self, 1);
    if (X.requires_grad) {
      X.ensure_grad();
      for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < d; ++c) X.grad[r * d + c] += self.grad[r * d + c] * S.value[r];
      }
    }
    if (S.requires_grad) {
      S.ensure_grad();
      for (std::size_t r = 0; r < n; ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < d; ++c) acc += self.grad[r * d + c] * X.value[r * d + c];
        S.grad[r] += acc;
      }
    }
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (numel(shape) != x.size()) {
    throw ShapeError("reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  return detail::make_result("reshape", std::move(shape), std::move(out), {x},
                             [](Node& self) { accumulate(in(self, 0), self.grad); });
}

Tensor permute(const Tensor& x, std::span<const std::size_t> axes) {
  const auto rank = x.rank();
  if (axes.size() != rank) {
    throw ShapeError("permute: " + std::to_string(axes.size()) + " axes given for shape " + shape_str(x.shape()));
  }
  std::vector<bool> seen(rank, false);
  for (auto ax : axes) {
    if (ax >= rank || seen[ax]) throw ShapeError("permute: invalid axis order for shape " + shape_str(x.shape()));
    seen[ax] = true;
  }
  Shape out_shape(rank);
  for (std::size_t i = 0; i < rank; ++i) out_shape[i] = x.dim(axes[i]);
  std::vector<std::size_t> in_strides(rank, 1);
  for (std::size_t i = rank; i-- > 1;) in_strides[i - 1] = in_strides[i] * x.dim(i);
  // src_index[j] = flat input index of output element j
  const auto n = x.size();
  std::vector<std::size_t> src(n);
  std::vector<std::size_t> idx(rank, 0);
  for (std::size_t j = 0; j < n; ++j) {
    std::size_t off = 0;
    for (std::size_t i = 0; i < rank; ++i) off += idx[i] * in_strides[axes[i]];
    src[j] = off;
    for (std::size_t i = rank; i-- > 0;) {
      if (++idx[i] < out_shape[i]) break;
      idx[i] = 0;
    }
  }
  std::vector<double> out(n);
  for (std::size_t j = 0; j < n; ++j) out[j] = x.data()[src[j]];
  return detail::make_result("permute", std::move(out_shape), std::move(out), {x},
                             [src = std::move(src)](Node& self) {
                               Node& X = in(self, 0);
                               if (!X.requires_grad) return;
                               X.ensure_grad();
                               for (std::size_t j = 0; j < src.size(); ++j) X.grad[src[j]] += self.grad[j];
                             });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(0) != b.dim(0)) shape_fail("concat_cols", a, b);
  const auto n = a.dim(0), p = a.dim(1), q = b.dim(1);
  std::vector<double> out(n * (p + q));
  for (std::size_t r = 0; r < n; ++r) {
    std::copy_n(a.data().begin() + r * p, p, out.begin() + r * (p + q));
    std::copy_n(b.data().begin() + r * q, q, out.begin() + r * (p + q) + p);
  }
  return detail::make_result("concat_cols", {n, p + q}, std::move(out), {a, b}, [n, p, q](Node& self) {
    Node& A = in(self, 0);
    Node& B = in(self, 1);
    if (A.requires_grad) A.ensure_grad();
    if (B.requires_grad) B.ensure_grad();
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < p; ++c) {
        if (A.requires_grad) A.grad[r * p + c] += self.grad[r * (p + q) + c];
      }
      for (std::size_t c = 0; c < q; ++c) {
        if (B.requires_grad) B.grad[r * q + c] += self.grad[r * (p + q) + p + c];
      }
    }
  });
}

Tensor embedding_lookup(const Tensor& table, std::span<const std::size_t> ids) {
  require_rank("embedding_lookup", table, 2);
  const auto rows = table.dim(0), d = table.dim(1);
  std::vector<std::size_t> index(ids.begin(), ids.end());
  std::vector<double> out(index.size() * d);
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= rows) {
      throw ShapeError("embedding_lookup: id " + std::to_string(index[i]) + " out of range for table " +
                       shape_str(table.shape()));
    }
    std::copy_n(table.data().begin() + index[i] * d, d, out.begin() + i * d);
  }
  const auto n = index.size();
  return detail::make_result("embedding_lookup", {n, d}, std::move(out), {table},
                             [index = std::move(index), d](Node& self) {
                               Node& T = in(self, 0);
                               if (!T.requires_grad) return;
                               T.ensure_grad();
                               for (std::size_t i = 0; i < index.size(); ++i) {
                                 for (std::size_t c = 0; c < d; ++c) T.grad[index[i] * d + c] += self.grad[i * d + c];
                               }
                             });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  if (x.rank() < 1 || gamma.rank() != 1 || beta.shape() != gamma.shape() || x.shape().back() != gamma.dim(0)) {
    shape_fail("layer_norm", x, gamma);
  }
  const auto d = gamma.dim(0);
  const auto rows = x.size() / d;
  std::vector<double> out(x.size());
  std::vector<double> xhat(x.size());
  std::vector<double> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x.data().data() + r * d;
    double mu = 0.0;
    for (std::size_t c = 0; c < d; ++c) mu += xr[c];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t c = 0; c < d; ++c) var += (xr[c] - mu) * (xr[c] - mu);
    var /= static_cast<double>(d);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < d; ++c) {
      xhat[r * d + c] = (xr[c] - mu) * inv_std[r];
      out[r * d + c] = xhat[r * d + c] * gamma.data()[c] + beta.data()[c];
    }
  }
  return detail::make_result(
      "layer_norm", x.shape(), std::move(out), {x, gamma, beta},
      [xhat = std::move(xhat), inv_std = std::move(inv_std), d, rows](Node& self) {
        Node& X = in(self, 0);
        Node& G = in(self, 1);
        Node& B = in(self, 2);
        if (G.requires_grad) G.ensure_grad();
        if (B.requires_grad) B.ensure_grad();
        if (X.requires_grad) X.ensure_grad();
        const double dd = static_cast<double>(d);
        for (std::size_t r = 0; r < rows; ++r) {
          const double* g = self.grad.data() + r * d;
          const double* xh = xhat.data() + r * d;
          double sum_dxh = 0.0, sum_dxh_xh = 0.0;
          for (std::size_t c = 0; c < d; ++c) {
            const double dxh = g[c] * G.value[c];
            sum_dxh += dxh;
            sum_dxh_xh += dxh * xh[c];
            if (G.requires_grad) G.grad[c] += g[c] * xh[c];
            if (B.requires_grad) B.grad[c] += g[c];
          }
          if (X.requires_grad) {
            for (std::size_t c = 0; c < d; ++c) {
              const double dxh = g[c] * G.value[c];
              X.grad[r * d + c] += inv_std[r] * (dxh - sum_dxh / dd - xh[c] * sum_dxh_xh / dd);
            }
          }
        }
      });
}

Tensor softmax(const Tensor& x, std::size_t axis) {
  if (axis >= x.rank()) {
    throw ShapeError("softmax: axis " + std::to_string(axis) + " invalid for shape " + shape_str(x.shape()));
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= x.dim(i);
  for (std::size_t i = axis + 1; i < x.rank(); ++i) inner *= x.dim(i);
  const auto len = x.dim(axis);
  std::vector<double> out(x.size());
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      const std::size_t base = o * len * inner + i;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < len; ++k) mx = std::max(mx, x.data()[base + k * inner]);
      double z = 0.0;
      for (std::size_t k = 0; k < len; ++k) {
        const double e = std::exp(x.data()[base + k * inner] - mx);
        out[base + k * inner] = e;
        z += e;
      }
      for (std::size_t k = 0; k < len; ++k) out[base + k * inner] /= z;
    }
  }
  return detail::make_result("softmax", x.shape(), std::move(out), {x}, [outer, inner, len](Node& self) {
    Node& X = in(self, 0);
    if (!X.requires_grad) return;
    X.ensure_grad();
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t i = 0; i < inner; ++i) {
        const std::size_t base = o * len * inner + i;
        double dot = 0.0;
        for (std::size_t k = 0; k < len; ++k) dot += self.grad[base + k * inner] * self.value[base + k * inner];
        for (std::size_t k = 0; k < len; ++k) {
          const auto j = base + k * inner;
          X.grad[j] += self.value[j] * (self.grad[j] - dot);
        }
      }
    }
  });
}

Tensor gelu(const Tensor& x) {
  return unary(
      "gelu", x, [](double v) { return 0.5 * v * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0)); },
      [](double v, double) {
        const double cdf = 0.5 * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0));
        const double pdf = std::exp(-0.5 * v * v) / std::sqrt(2.0 * std::numbers::pi);
        return cdf + v * pdf;
      });
}

Tensor tanh(const Tensor& x) {
  return unary(
      "tanh", x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& x) {
  return unary(
      "sigmoid", x,
      [](double v) { return v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v)); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor relu(const Tensor& x) {
  return unary(
      "relu", x, [](double v) { return v > 0.0 ? v : 0.0; }, [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor mean(const Tensor& x, std::size_t axis) {
  if (axis >= x.rank()) {
    throw ShapeError("mean: axis " + std::to_string(axis) + " invalid for shape " + shape_str(x.shape()));
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= x.dim(i);
  for (std::size_t i = axis + 1; i < x.rank(); ++i) inner *= x.dim(i);
  const auto len = x.dim(axis);
  Shape out_shape = x.shape();
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  std::vector<double> out(outer * inner, 0.0);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t k = 0; k < len; ++k) {
      for (std::size_t i = 0; i < inner; ++i) out[o * inner + i] += x.data()[(o * len + k) * inner + i];
    }
  }
  for (auto& v : out) v /= static_cast<double>(len);
  return detail::make_result("mean", std::move(out_shape), std::move(out), {x}, [outer, inner, len](Node& self) {
    Node& X = in(self, 0);
    if (!X.requires_grad) return;
    X.ensure_grad();
    const double f = 1.0 / static_cast<double>(len);
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t k = 0; k < len; ++k) {
        for (std::size_t i = 0; i < inner; ++i) X.grad[(o * len + k) * inner + i] += f * self.grad[o * inner + i];
      }
    }
  });
}

Tensor sum(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  return detail::make_result("sum", {}, {acc}, {x}, [](Node& self) {
    Node& X = in(self, 0);
    if (!X.requires_grad) return;
    X.ensure_grad();
    for (auto& g : X.grad) g += self.grad[0];
  });
}

Tensor cross_entropy(const Tensor& logits, std::span<const std::size_t> targets, Reduction reduction) {
  require_rank("cross_entropy", logits, 2);
  const auto n = logits.dim(0), k = logits.dim(1);
  if (targets.size() != n) {
    throw ShapeError("cross_entropy: " + std::to_string(targets.size()) + " targets for logits " +
                     shape_str(logits.shape()));
  }
  std::vector<double> probs(n * k);
  double total = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    if (targets[r] >= k) {
      throw ShapeError("cross_entropy: target " + std::to_string(targets[r]) + " out of range for logits " +
                       shape_str(logits.shape()));
    }
    const double* z = logits.data().data() + r * k;
    const double mx = *std::max_element(z, z + k);
    double s = 0.0;
    for (std::size_t c = 0; c < k; ++c) s += std::exp(z[c] - mx);
    const double lse = mx + std::log(s);
    for (std::size_t c = 0; c < k; ++c) probs[r * k + c] = std::exp(z[c] - lse);
    total += lse - z[targets[r]];
  }
  const double norm = reduction == Reduction::Mean && n > 0 ? 1.0 / static_cast<double>(n) : 1.0;
  std::vector<std::size_t> tgt(targets.begin(), targets.end());
  return detail::make_result("cross_entropy", {}, {total * norm}, {logits},
                             [probs = std::move(probs), tgt = std::move(tgt), n, k, norm](Node& self) {
                               Node& L = in(self, 0);
                               if (!L.requires_grad) return;
                               L.ensure_grad();
                               const double g = self.grad[0] * norm;
                               for (std::size_t r = 0; r < n; ++r) {
                                 for (std::size_t c = 0; c < k; ++c) {
                                   L.grad[r * k + c] += g * (probs[r * k + c] - (c == tgt[r] ? 1.0 : 0.0));
                                 }
                               }
                             });
}

Tensor binary_cross_entropy_with_logits(const Tensor& logits, std::span<const double> labels) {
  const auto n = logits.size();
  if (labels.size() != n) {
    throw ShapeError("binary_cross_entropy_with_logits: " + std::to_string(labels.size()) + " labels for logits " +
                     shape_str(logits.shape()));
  }
  double total = 0.0;
  std::vector<double> p(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double z = logits.data()[i];
    // log(1 + e^z) − y z; softplus written to avoid overflow
    const double softplus = std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
    total += softplus - labels[i] * z;
    p[i] = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
  }
  const double norm = n > 0 ? 1.0 / static_cast<double>(n) : 1.0;
  std::vector<double> y(labels.begin(), labels.end());
  return detail::make_result("binary_cross_entropy_with_logits", {}, {total * norm}, {logits},
                             [p = std::move(p), y = std::move(y), norm](Node& self) {
                               Node& L = in(self, 0);
                               if (!L.requires_grad) return;
                               L.ensure_grad();
                               for (std::size_t i = 0; i < p.size(); ++i) L.grad[i] += self.grad[0] * norm * (p[i] - y[i]);
                             });
}

}  // namespace oleo::compute
