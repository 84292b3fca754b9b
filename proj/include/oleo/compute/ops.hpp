// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>

#include "oleo/compute/tensor.hpp"

namespace oleo::compute {

// Shape errors name the op and both operand shapes.

Tensor matmul(const Tensor& a, const Tensor& b);                         // [n,k] x [k,m]
Tensor bmm(const Tensor& a, const Tensor& b, bool transpose_b = false);  // [B,n,k] x [B,k,m]

Tensor add(const Tensor& a, const Tensor& b);  // same shape
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise, same shape
Tensor scale(const Tensor& a, double factor);
// x[..., d] + bias[d]; the only broadcasting add.
Tensor add_bias(const Tensor& x, const Tensor& bias);
// x[n, d] * s[n] (or [n,1]); each row scaled by its own scalar.
Tensor scale_rows(const Tensor& x, const Tensor& s);

Tensor reshape(const Tensor& x, Shape shape);
Tensor permute(const Tensor& x, std::span<const std::size_t> axes);
Tensor concat_cols(const Tensor& a, const Tensor& b);  // [n,p] ++ [n,q] -> [n,p+q]

// Row gather from a 2-D table; gradient scatter-adds into the gathered rows.
Tensor embedding_lookup(const Tensor& table, std::span<const std::size_t> ids);
inline Tensor gather_rows(const Tensor& x, std::span<const std::size_t> rows) { return embedding_lookup(x, rows); }

// Normalises over the last axis, then applies gamma[d], beta[d].
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);
Tensor softmax(const Tensor& x, std::size_t axis);

Tensor gelu(const Tensor& x);  // exact erf form
Tensor tanh(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor relu(const Tensor& x);

Tensor mean(const Tensor& x, std::size_t axis);  // removes `axis`
Tensor sum(const Tensor& x);                      // scalar

enum class Reduction { Mean, Sum };

// logits[n, K], one target class per row. Returns scalar −Σ log softmax(logits)_target
// divided by n for Mean.
Tensor cross_entropy(const Tensor& logits, std::span<const std::size_t> targets,
                     Reduction reduction = Reduction::Mean);
// logits with n elements, labels in {0,1}; mean binary cross-entropy computed stably.
Tensor binary_cross_entropy_with_logits(const Tensor& logits, std::span<const double> labels);

}  // namespace oleo::compute
