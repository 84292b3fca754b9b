// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "oleo/compute/checkpoint.hpp"
#include "oleo/compute/ops.hpp"
#include "oleo/compute/optim.hpp"
#include "oleo/compute/parameters.hpp"
#include "oleo/error.hpp"
#include "oleo/util/binary_io.hpp"
#include "support/gradcheck.hpp"

using namespace oleo;
using namespace oleo::compute;

namespace {

Tensor random_tensor(Shape shape, util::Rng& rng, bool requires_grad = true) {
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> v(numel(shape));
  for (auto& x : v) x = dist(rng);
  return Tensor::from(std::move(shape), std::move(v), requires_grad);
}

}  // namespace

TEST_CASE("softmax of equal logits is uniform") {
  auto y = softmax(Tensor::from({3}, {0, 0, 0}), 0);
  for (double v : y.data()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("softmax rows are non-negative and sum to one") {
  util::Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t rows = 1 + trial % 5, cols = 1 + trial % 7;
    auto x = scale(random_tensor({rows, cols}, rng, false), 1.0 + trial);
    for (std::size_t axis : {0u, 1u}) {
      auto y = softmax(x, axis);
      const auto outer = axis == 0 ? cols : rows;
      const auto len = axis == 0 ? rows : cols;
      for (std::size_t o = 0; o < outer; ++o) {
        double s = 0;
        for (std::size_t k = 0; k < len; ++k) {
          const double v = axis == 1 ? y.at(o * cols + k) : y.at(k * cols + o);
          CHECK(v >= 0.0);
          s += v;
        }
        CHECK(std::abs(s - 1.0) <= 1e-9);
      }
    }
  }
}

TEST_CASE("cross-entropy of uniform logits is ln K") {
  for (std::size_t k : {2u, 5u, 100u}) {
    auto logits = Tensor::zeros({3, k});
    std::vector<std::size_t> targets{0, k - 1, k / 2};
    CHECK(cross_entropy(logits, targets).item() == doctest::Approx(std::log(static_cast<double>(k))).epsilon(1e-14));
  }
}

TEST_CASE("layer_norm of a constant vector is zero before the affine part") {
  auto x = Tensor::full({2, 6}, 3.25);
  auto y = layer_norm(x, Tensor::full({6}, 1.0), Tensor::zeros({6}));
  for (double v : y.data()) CHECK(v == 0.0);
}

TEST_CASE("backward of sum(x*x) is 2x") {
  auto x = Tensor::from({3}, {1, 2, 3}, true);
  backward(sum(mul(x, x)));
  REQUIRE(x.has_grad());
  CHECK(x.grad()[0] == 2.0);
  CHECK(x.grad()[1] == 4.0);
  CHECK(x.grad()[2] == 6.0);
}

TEST_CASE("frozen inputs receive no gradient") {
  auto w = Tensor::from({2, 2}, {1, 2, 3, 4}, true);
  auto frozen = Tensor::from({1, 2}, {0.5, -1.0}).detach();
  backward(sum(matmul(frozen, w)));
  CHECK(w.has_grad());
  CHECK_FALSE(frozen.has_grad());
  CHECK_FALSE(frozen.requires_grad());
}

TEST_CASE("second backward without zero_grad is refused") {
  auto x = Tensor::from({2}, {1, 2}, true);
  backward(sum(mul(x, x)));
  CHECK_THROWS_AS(backward(sum(mul(x, x))), GradientStateError);
  x.zero_grad();
  CHECK_NOTHROW(backward(sum(mul(x, x))));

  auto y = Tensor::from({2}, {1, 2}, true);
  auto loss = sum(mul(y, y));
  backward(loss);
  y.zero_grad();
  CHECK_THROWS_AS(backward(loss), GradientStateError);
}

TEST_CASE("shape mismatch names the op and both shapes") {
  auto a = Tensor::zeros({2, 3});
  auto b = Tensor::zeros({2, 3});
  try {
    matmul(a, b);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("matmul") != std::string::npos);
    CHECK(msg.find("[2,3]") != std::string::npos);
  }
  CHECK_THROWS_AS(add(Tensor::zeros({2}), Tensor::zeros({3})), ShapeError);
  CHECK_THROWS_AS(softmax(Tensor::zeros({2}), 1), ShapeError);
}

TEST_CASE("non-finite values are hard errors") {
  CHECK_THROWS_AS(Tensor::from({1}, {std::nan("")}), NonFiniteError);
  auto big = Tensor::from({1, 1}, {1e200});
  CHECK_THROWS_AS(matmul(big, big), NonFiniteError);
}

TEST_CASE("composite graph matches central finite differences") {
  util::Rng rng(11);
  ParameterSet ps;
  ps.add("w1", random_tensor({4, 6}, rng));
  ps.add("b1", random_tensor({6}, rng));
  ps.add("g", random_tensor({6}, rng));
  ps.add("beta", random_tensor({6}, rng));
  ps.add("w2", random_tensor({6, 3}, rng));
  ps.add("s", random_tensor({5, 1}, rng));
  const auto x = random_tensor({5, 4}, rng, false);
  const auto y = random_tensor({2, 5, 3}, rng, false);
  const std::vector<std::size_t> targets{0, 2, 1, 1, 0};
  const std::vector<std::size_t> gather{4, 0, 0, 2};
  const std::array<std::size_t, 3> perm{1, 0, 2};
  auto build = [&]() {
    auto h = add_bias(matmul(x, ps.get("w1")), ps.get("b1"));
    h = layer_norm(gelu(h), ps.get("g"), ps.get("beta"));
    auto z = matmul(tanh(h), ps.get("w2"));
    z = scale_rows(z, ps.get("s"));
    auto ce = cross_entropy(z, targets);
    auto three = reshape(concat_cols(z, sigmoid(z)), {5, 2, 3});
    auto p = permute(three, perm);  // [2,5,3]
    auto att = softmax(bmm(p, y, true), 2);
    auto pooled = mean(bmm(att, y), 1);
    auto extra = sum(mul(relu(gather_rows(z, gather)), gather_rows(z, gather)));
    return add(add(ce, scale(sum(pooled), 0.3)), scale(extra, 0.1));
  };
  for (const auto& e : testing::gradient_check(ps, build, 1e-5)) {
    INFO(e.name);
    CHECK(e.relative_error < 1e-4);
    CHECK(e.autodiff_norm > 0.0);
  }
}

TEST_CASE("binary cross-entropy gradient matches finite differences") {
  util::Rng rng(3);
  ParameterSet ps;
  ps.add("z", random_tensor({6}, rng));
  const std::vector<double> labels{1, 0, 0, 1, 1, 0};
  auto build = [&]() { return binary_cross_entropy_with_logits(ps.get("z"), labels); };
  for (const auto& e : testing::gradient_check(ps, build)) CHECK(e.relative_error < 1e-6);
}

TEST_CASE("adam moves a quadratic downhill and stops on zero gradient") {
  ParameterSet ps;
  auto& w = ps.add("w", Tensor::from({1}, {1.0}, true));
  Adam adam({.lr = 0.1});
  backward(sum(mul(w, w)));
  adam.step(ps);
  CHECK(w.at(0) < 1.0);

  ParameterSet still;
  auto& v = still.add("v", Tensor::from({2}, {0.25, -3.0}, true));
  Adam adam2({.lr = 0.1});
  backward(scale(sum(v), 0.0));
  adam2.step(still);
  CHECK(v.at(0) == 0.25);
  CHECK(v.at(1) == -3.0);
}

TEST_CASE("adam converges on a two-parameter quadratic") {
  // f(w) = (w0 - 3)^2 + 2 (w1 + 1)^2 + w0 w1 / 2 ; closed-form minimum solves
  // [2 0.5; 0.5 4] w = [6; -4]
  const double det = 2.0 * 4.0 - 0.25;
  const double m0 = (6.0 * 4.0 - 0.5 * -4.0) / det;
  const double m1 = (2.0 * -4.0 - 0.5 * 6.0) / det;
  ParameterSet ps;
  auto& w = ps.add("w", Tensor::from({2}, {0.0, 0.0}, true));
  Adam adam({.lr = 0.05});
  for (int i = 0; i < 500; ++i) {
    ps.zero_grad();
    const auto a = Tensor::from({2}, {1.0, 0.0});
    const auto b = Tensor::from({2}, {0.0, 1.0});
    auto w0 = sum(mul(w, a));
    auto w1 = sum(mul(w, b));
    auto t0 = sub(w0, Tensor::scalar(3.0));
    auto t1 = add(w1, Tensor::scalar(1.0));
    auto f = add(add(mul(t0, t0), scale(mul(t1, t1), 2.0)), scale(mul(w0, w1), 0.5));
    backward(f);
    adam.step(ps);
  }
  CHECK(std::abs(w.at(0) - m0) < 1e-3);
  CHECK(std::abs(w.at(1) - m1) < 1e-3);
}

TEST_CASE("adam rejects non-finite gradients") {
  ParameterSet ps;
  ps.add("w", Tensor::from({1}, {1.0}, true));
  // force a NaN into the gradient buffer through the node
  ps.get("w").node()->grad = {std::nan("")};
  Adam adam({});
  CHECK_THROWS_AS(adam.step(ps), NonFiniteError);
}

TEST_CASE("parameter names must be unique") {
  ParameterSet ps;
  ps.add("a", zeros_param({1}));
  CHECK_THROWS_AS(ps.add("a", zeros_param({2})), ConfigError);
}

TEST_CASE("checkpoint round-trips values and rejects damage") {
  util::Rng rng(5);
  ParameterSet ps;
  ps.add("mft.layer0.attn.wq", random_tensor({3, 4}, rng));
  ps.add("bias", random_tensor({4}, rng));
  ps.add("scalarish", random_tensor({1, 1, 2}, rng));
  const auto bytes = encode_checkpoint(ps);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "OLEO");

  ParameterSet other;
  other.add("bias", zeros_param({4}));
  other.add("scalarish", zeros_param({1, 1, 2}));
  other.add("mft.layer0.attn.wq", zeros_param({3, 4}));
  load_arrays_into(decode_checkpoint(bytes), other);
  for (const auto& p : ps.items()) {
    const auto& q = other.get(p.name);
    for (std::size_t i = 0; i < p.tensor.size(); ++i) CHECK(q.at(i) == p.tensor.at(i));
  }
  CHECK(encode_checkpoint(ps) == bytes);

  std::vector<std::uint8_t> truncated(bytes.begin(), bytes.end() - 3);
  CHECK_THROWS_AS(decode_checkpoint(truncated), FormatError);
  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(decode_checkpoint(bad), FormatError);

  ParameterSet wrong;
  wrong.add("bias", zeros_param({5}));
  wrong.add("scalarish", zeros_param({1, 1, 2}));
  wrong.add("mft.layer0.attn.wq", zeros_param({3, 4}));
  CHECK_THROWS_AS(load_arrays_into(decode_checkpoint(bytes), wrong), ShapeError);
}

TEST_CASE("little-endian header layout") {
  ParameterSet ps;
  ps.add("x", Tensor::from({1}, {1.0}, true));
  const auto b = encode_checkpoint(ps);
  // magic(4) version(4) count(4) namelen(4) name(1) rank(4) dim(8) payload(8)
  REQUIRE(b.size() == 4 + 4 + 4 + 4 + 1 + 4 + 8 + 8);
  CHECK(b[4] == 1);
  CHECK(b[8] == 1);
  CHECK(b[12] == 1);
  CHECK(b[16] == 'x');
  CHECK(b[17] == 1);
  CHECK(b[21] == 1);
  CHECK(b.back() == 0x3F);  // 1.0 = 0x3FF0000000000000
}
