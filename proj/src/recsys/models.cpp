// SPDX-License-Identifier: Apache-2.0
#include "oleo/recsys/models.hpp"

#include <array>
#include <cmath>

#include "oleo/compute/ops.hpp"
#include "oleo/error.hpp"

namespace oleo::recsys {

using compute::Tensor;
namespace ops = compute;

namespace {

constexpr double kMaskedScore = -1e30;

void check_history(const HistoryView& h, std::size_t d) {
  if (h.rows->shape() != compute::Shape{h.batch * h.length, d} || h.mask->size() != h.batch * h.length) {
    throw ShapeError("history: expected rows " + compute::shape_str({h.batch * h.length, d}) + " with " +
                     std::to_string(h.batch * h.length) + " mask entries, got " + compute::shape_str(h.rows->shape()));
  }
}

std::vector<double> mask_values(const std::vector<bool>& mask) {
  std::vector<double> m(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) m[i] = mask[i] ? 1.0 : 0.0;
  return m;
}

}  // namespace

ModelKind parse_kind(std::string_view text) {
  if (text == "matching") return ModelKind::Matching;
  if (text == "ranking") return ModelKind::Ranking;
  throw ConfigError("unknown model kind '" + std::string(text) + "' (expected matching or ranking)");
}

std::string_view kind_name(ModelKind kind) { return kind == ModelKind::Matching ? "matching" : "ranking"; }

ModelKind variant_kind(ModelVariant v) {
  switch (v) {
    case ModelVariant::Nrms:
    case ModelVariant::Naml:
    case ModelVariant::Lstur: return ModelKind::Matching;
    default: return ModelKind::Ranking;
  }
}

void require_implemented(ModelVariant v) {
  static constexpr std::array<const char*, 6> names{"NRMS", "DCN", "NAML", "LSTUR", "BST", "DIN"};
  if (v != ModelVariant::Nrms && v != ModelVariant::Dcn) {
    throw ConfigError(std::string(names[static_cast<std::size_t>(v)]) + " is a declared extension point and is not implemented");
  }
}

MatchingModel::MatchingModel(std::size_t d_src, RecsysConfig cfg, std::uint64_t seed) : d_src_(d_src), cfg_(std::move(cfg)) {
  const auto d = cfg_.d_model;
  if (d_src == 0 || d == 0 || cfg_.heads == 0 || d % cfg_.heads != 0) {
    throw ConfigError("matching: d_model must be a positive multiple of heads");
  }
  util::Rng rng(seed);
  params_.add("match.proj", compute::xavier_uniform(d_src, d, rng));
  params_.add("match.attn.wq", compute::xavier_uniform(d, d, rng));
  params_.add("match.attn.wk", compute::xavier_uniform(d, d, rng));
  params_.add("match.attn.wv", compute::xavier_uniform(d, d, rng));
  params_.add("match.pool.w", compute::xavier_uniform(d, cfg_.attention_hidden, rng));
  params_.add("match.pool.b", compute::zeros_param({cfg_.attention_hidden}));
  params_.add("match.pool.q", compute::xavier_uniform(cfg_.attention_hidden, 1, rng));
}

Tensor MatchingModel::project(const Tensor& src) const { return ops::matmul(src, params_.get("match.proj")); }

Tensor MatchingModel::user_vectors(const HistoryView& h) const {
  const auto d = cfg_.d_model, H = cfg_.heads, dh = d / H, B = h.batch, L = h.length;
  check_history(h, d);
  const std::array<std::size_t, 4> to_heads{0, 2, 1, 3};
  auto split = [&](const Tensor& t) {
    return ops::reshape(ops::permute(ops::reshape(t, {B, L, H, dh}), to_heads), {B * H, L, dh});
  };
  const auto& x = *h.rows;
  auto q = split(ops::matmul(x, params_.get("match.attn.wq")));
  auto k = split(ops::matmul(x, params_.get("match.attn.wk")));
  auto v = split(ops::matmul(x, params_.get("match.attn.wv")));
  std::vector<double> key_bias(B * H * L * L, 0.0);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t j = 0; j < L; ++j)
      if (!(*h.mask)[b * L + j])
        for (std::size_t hd = 0; hd < H; ++hd)
          for (std::size_t i = 0; i < L; ++i) key_bias[((b * H + hd) * L + i) * L + j] = kMaskedScore;
  auto scores = ops::add(ops::scale(ops::bmm(q, k, true), 1.0 / std::sqrt(static_cast<double>(dh))),
                         Tensor::from({B * H, L, L}, std::move(key_bias)));
  auto ctx = ops::reshape(ops::bmm(ops::softmax(scores, 2), v), {B, H, L, dh});
  auto o = ops::reshape(ops::permute(ctx, to_heads), {B * L, d});

  // additive attention: alpha = masked softmax(q^T tanh(W o + b)), multiplied by the
  // mask so an all-PAD history pools to the zero vector
  auto a = ops::matmul(ops::tanh(ops::add_bias(ops::matmul(o, params_.get("match.pool.w")), params_.get("match.pool.b"))),
                       params_.get("match.pool.q"));
  std::vector<double> slot_bias(B * L, 0.0);
  for (std::size_t i = 0; i < B * L; ++i) slot_bias[i] = (*h.mask)[i] ? 0.0 : kMaskedScore;
  auto alpha = ops::softmax(ops::add(ops::reshape(a, {B, L}), Tensor::from({B, L}, std::move(slot_bias))), 1);
  alpha = ops::mul(alpha, Tensor::from({B, L}, mask_values(*h.mask)));
  auto u = ops::bmm(ops::reshape(alpha, {B, 1, L}), ops::reshape(o, {B, L, d}));
  return ops::reshape(u, {B, d});
}

Tensor MatchingModel::scores(const Tensor& user, const Tensor& candidates, std::size_t k) const {
  const auto d = cfg_.d_model;
  const auto B = user.shape().at(0);
  if (user.shape() != compute::Shape{B, d} || candidates.shape() != compute::Shape{B * k, d}) {
    throw ShapeError("matching scores: incompatible shapes " + compute::shape_str(user.shape()) + " and " +
                     compute::shape_str(candidates.shape()));
  }
  auto s = ops::bmm(ops::reshape(user, {B, 1, d}), ops::reshape(candidates, {B, k, d}), true);
  return ops::reshape(s, {B, k});
}

RankingModel::RankingModel(std::size_t d_src, RecsysConfig cfg, std::uint64_t seed) : d_src_(d_src), cfg_(std::move(cfg)) {
  const auto d = cfg_.d_model;
  if (d_src == 0 || d == 0) throw ConfigError("ranking: dimensions must be positive");
  util::Rng rng(seed);
  params_.add("rank.proj", compute::xavier_uniform(d_src, d, rng));
  const auto x = 2 * d;
  for (std::size_t l = 0; l < cfg_.cross_layers; ++l) {
    params_.add("rank.cross" + std::to_string(l) + ".w", compute::xavier_uniform(x, 1, rng));
    params_.add("rank.cross" + std::to_string(l) + ".b", compute::zeros_param({x}));
  }
  std::size_t in = x;
  for (std::size_t l = 0; l < cfg_.mlp.size(); ++l) {
    params_.add("rank.mlp" + std::to_string(l) + ".w", compute::xavier_uniform(in, cfg_.mlp[l], rng));
    params_.add("rank.mlp" + std::to_string(l) + ".b", compute::zeros_param({cfg_.mlp[l]}));
    in = cfg_.mlp[l];
  }
  params_.add("rank.out.w", compute::xavier_uniform(x + (cfg_.mlp.empty() ? 0 : in), 1, rng));
  params_.add("rank.out.b", compute::zeros_param({1}));
}

Tensor RankingModel::project(const Tensor& src) const { return ops::matmul(src, params_.get("rank.proj")); }

Tensor RankingModel::history_mean(const HistoryView& h) const {
  check_history(h, cfg_.d_model);
  std::vector<double> w(h.batch * h.batch * h.length, 0.0);
  for (std::size_t b = 0; b < h.batch; ++b) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < h.length; ++i) n += (*h.mask)[b * h.length + i];
    for (std::size_t i = 0; i < h.length; ++i) {
      if ((*h.mask)[b * h.length + i]) w[b * h.batch * h.length + b * h.length + i] = 1.0 / static_cast<double>(n);
    }
  }
  return ops::matmul(Tensor::from({h.batch, h.batch * h.length}, std::move(w)), *h.rows);
}

Tensor RankingModel::cross(const Tensor& x0) const {
  auto x = x0;
  for (std::size_t l = 0; l < cfg_.cross_layers; ++l) {
    const auto p = "rank.cross" + std::to_string(l);
    auto s = ops::matmul(x, params_.get(p + ".w"));  // [R, 1] = x_k . w_k
    x = ops::add(ops::add_bias(ops::scale_rows(x0, s), params_.get(p + ".b")), x);
  }
  return x;
}

Tensor RankingModel::logits(const Tensor& user, const Tensor& candidate) const {
  if (user.shape() != candidate.shape() || user.shape().size() != 2 || user.shape()[1] != cfg_.d_model) {
    throw ShapeError("ranking logits: incompatible shapes " + compute::shape_str(user.shape()) + " and " +
                     compute::shape_str(candidate.shape()));
  }
  auto x0 = ops::concat_cols(user, candidate);
  auto features = cross(x0);
  if (!cfg_.mlp.empty()) {
    auto deep = x0;
    for (std::size_t l = 0; l < cfg_.mlp.size(); ++l) {
      const auto p = "rank.mlp" + std::to_string(l);
      deep = ops::relu(ops::add_bias(ops::matmul(deep, params_.get(p + ".w")), params_.get(p + ".b")));
    }
    features = ops::concat_cols(features, deep);
  }
  return ops::add_bias(ops::matmul(features, params_.get("rank.out.w")), params_.get("rank.out.b"));
}

namespace {

void check_single(std::size_t d_src, const Tensor& history, const std::vector<bool>& mask, const Tensor& candidate) {
  const auto& hs = history.shape();
  if (hs.size() != 2 || hs[1] != d_src || hs[0] != mask.size()) {
    throw ShapeError("history: incompatible shapes " + compute::shape_str(hs) + " and [" + std::to_string(mask.size()) +
                     "," + std::to_string(d_src) + "]");
  }
  if (candidate.shape() != compute::Shape{1, d_src}) {
    throw ShapeError("candidate: incompatible shapes " + compute::shape_str(candidate.shape()) + " and [1," +
                     std::to_string(d_src) + "]");
  }
}

}  // namespace

double score_matching(const MatchingModel& model, const Tensor& history, const std::vector<bool>& mask,
                      const Tensor& candidate) {
  check_single(model.input_dim(), history, mask, candidate);
  compute::NoGradGuard ng;
  auto c = model.project(candidate);
  if (mask.empty()) return 0.0;  // no history: u = 0
  auto rows = model.project(history);
  auto u = model.user_vectors({&rows, &mask, 1, mask.size()});
  return model.scores(u, c, 1).item();
}

double predict_ranking(const RankingModel& model, const Tensor& history, const std::vector<bool>& mask,
                       const Tensor& candidate) {
  check_single(model.input_dim(), history, mask, candidate);
  compute::NoGradGuard ng;
  auto c = model.project(candidate);
  Tensor user = Tensor::zeros({1, model.config().d_model});
  if (!mask.empty()) {
    auto rows = model.project(history);
    user = model.history_mean({&rows, &mask, 1, mask.size()});
  }
  return ops::sigmoid(model.logits(user, c)).item();
}

}  // namespace oleo::recsys
