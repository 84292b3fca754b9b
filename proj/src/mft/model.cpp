// SPDX-License-Identifier: Apache-2.0
#include "oleo/mft/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "oleo/compute/ops.hpp"
#include "oleo/error.hpp"

namespace oleo::mft {

using compute::Tensor;
namespace ops = compute;

namespace {

// Large finite negative: exp() underflows to exactly 0 so masked keys carry no weight.
constexpr double kMaskedScore = -1e30;

std::string layer_name(std::size_t layer, const char* rest) {
  return "mft.layer" + std::to_string(layer) + "." + rest;
}

}  // namespace

void MftConfig::validate() const {
  if (vocab_size < corpus::kSpecialCount) throw ConfigError("mft: vocab_size must be >= 5");
  if (d == 0 || heads == 0 || d % heads != 0) throw ConfigError("mft: d must be a positive multiple of heads");
  if (layers < 1) throw ConfigError("mft: at least one Transformer layer is required");
  if (!(mask_ratio > 0.0 && mask_ratio < 1.0)) throw ConfigError("mft: mask_ratio must lie in (0, 1)");
  if (!(fa_negative_ratio >= 0.0 && fa_negative_ratio <= 1.0)) {
    throw ConfigError("mft: fa_negative_ratio must lie in [0, 1]");
  }
  if (limits.title < 1 || limits.category < 1 || limits.abstract < 1) {
    throw ConfigError("mft: every field limit must be >= 1");
  }
}

AssembledSequence assemble(const corpus::NewsArticle& article, const MftConfig& cfg) {
  return assemble(article, cfg, cfg.max_len());
}

AssembledSequence assemble(const corpus::NewsArticle& article, const MftConfig& cfg, std::size_t padded_length) {
  if (article.title_tokens.size() > cfg.limits.title || article.category_tokens.size() > cfg.limits.category ||
      article.abstract_tokens.size() > cfg.limits.abstract) {
    throw ShapeError("assemble: article " + article.news_id + " exceeds the configured field limits");
  }
  AssembledSequence s;
  auto push = [&](corpus::TokenId id, FieldLabel f) {
    s.token_ids.push_back(id);
    s.field_ids.push_back(f);
  };
  push(corpus::kCls, FieldLabel::Special);
  for (auto t : article.title_tokens) push(t, FieldLabel::Title);
  push(corpus::kSep, FieldLabel::Special);
  for (auto t : article.category_tokens) push(t, FieldLabel::Category);
  push(corpus::kSep, FieldLabel::Special);
  for (auto t : article.abstract_tokens) push(t, FieldLabel::Abstract);
  push(corpus::kSep, FieldLabel::Special);
  s.effective_length = s.token_ids.size();
  if (padded_length < s.effective_length) {
    throw ShapeError("assemble: padded length " + std::to_string(padded_length) + " shorter than effective length " +
                     std::to_string(s.effective_length));
  }
  s.attention_mask.assign(s.effective_length, true);
  while (s.token_ids.size() < padded_length) push(corpus::kPad, FieldLabel::Special);
  s.attention_mask.resize(padded_length, false);
  s.positions.resize(padded_length);
  for (std::size_t i = 0; i < padded_length; ++i) s.positions[i] = i;
  return s;
}

MftModel::MftModel(MftConfig config, std::uint64_t seed)
    : config_(std::move(config)), forward_calls_(std::make_unique<std::atomic<std::uint64_t>>(0)) {
  config_.validate();
  util::Rng rng(seed);
  const auto d = config_.d;
  const auto f = config_.ffn_dim();
  params_.add("mft.tok_emb", compute::normal_init({config_.vocab_size, d}, 0.02, rng));
  params_.add("mft.pos_emb", compute::normal_init({config_.max_len(), d}, 0.02, rng));
  params_.add("mft.field_emb", compute::normal_init({kFieldLabelCount, d}, 0.02, rng));
  for (std::size_t l = 0; l < config_.layers; ++l) {
    for (const char* w : {"attn.wq", "attn.wk", "attn.wv", "attn.wo"}) {
      params_.add(layer_name(l, w), compute::xavier_uniform(d, d, rng));
    }
    params_.add(layer_name(l, "attn.bq"), compute::zeros_param({d}));
    params_.add(layer_name(l, "attn.bk"), compute::zeros_param({d}));
    params_.add(layer_name(l, "attn.bv"), compute::zeros_param({d}));
    params_.add(layer_name(l, "attn.bo"), compute::zeros_param({d}));
    params_.add(layer_name(l, "ln1.gamma"), Tensor::full({d}, 1.0, true));
    params_.add(layer_name(l, "ln1.beta"), compute::zeros_param({d}));
    params_.add(layer_name(l, "ffn.w1"), compute::xavier_uniform(d, f, rng));
    params_.add(layer_name(l, "ffn.b1"), compute::zeros_param({f}));
    params_.add(layer_name(l, "ffn.w2"), compute::xavier_uniform(f, d, rng));
    params_.add(layer_name(l, "ffn.b2"), compute::zeros_param({d}));
    params_.add(layer_name(l, "ln2.gamma"), Tensor::full({d}, 1.0, true));
    params_.add(layer_name(l, "ln2.beta"), compute::zeros_param({d}));
  }
  params_.add("mft.mtp.w", compute::xavier_uniform(d, config_.vocab_size, rng));
  params_.add("mft.mtp.b", compute::zeros_param({config_.vocab_size}));
  params_.add("mft.fa.w", compute::xavier_uniform(d, 2, rng));
  params_.add("mft.fa.b", compute::zeros_param({2}));
}

Tensor MftModel::layer_forward(std::size_t l, const Tensor& x, const Tensor& mask_bias, std::size_t batch,
                               std::size_t length) const {
  const auto d = config_.d;
  const auto h = config_.heads;
  const auto dh = d / h;
  const std::array<std::size_t, 4> to_heads{0, 2, 1, 3};
  auto project = [&](const char* w, const char* b) {
    return ops::add_bias(ops::matmul(x, params_.get(layer_name(l, w))), params_.get(layer_name(l, b)));
  };
  auto split = [&](const Tensor& t) {
    auto r = ops::permute(ops::reshape(t, {batch, length, h, dh}), to_heads);
    return ops::reshape(r, {batch * h, length, dh});
  };
  auto q = split(project("attn.wq", "attn.bq"));
  auto k = split(project("attn.wk", "attn.bk"));
  auto v = split(project("attn.wv", "attn.bv"));
  auto scores = ops::add(ops::scale(ops::bmm(q, k, true), 1.0 / std::sqrt(static_cast<double>(dh))), mask_bias);
  auto attn = ops::softmax(scores, 2);
  auto ctx = ops::reshape(ops::bmm(attn, v), {batch, h, length, dh});
  ctx = ops::reshape(ops::permute(ctx, to_heads), {batch * length, d});
  auto attn_out = ops::add_bias(ops::matmul(ctx, params_.get(layer_name(l, "attn.wo"))),
                                params_.get(layer_name(l, "attn.bo")));
  auto y = ops::layer_norm(ops::add(x, attn_out), params_.get(layer_name(l, "ln1.gamma")),
                           params_.get(layer_name(l, "ln1.beta")), config_.ln_eps);
  auto hid = ops::gelu(ops::add_bias(ops::matmul(y, params_.get(layer_name(l, "ffn.w1"))),
                                     params_.get(layer_name(l, "ffn.b1"))));
  auto ff = ops::add_bias(ops::matmul(hid, params_.get(layer_name(l, "ffn.w2"))), params_.get(layer_name(l, "ffn.b2")));
  return ops::layer_norm(ops::add(y, ff), params_.get(layer_name(l, "ln2.gamma")),
                         params_.get(layer_name(l, "ln2.beta")), config_.ln_eps);
}

TrunkOutput MftModel::trunk(std::span<const AssembledSequence> batch) const {
  if (batch.empty()) throw ShapeError("mft trunk: empty batch");
  std::size_t length = 0;
  for (const auto& s : batch) {
    if (s.effective_length > s.padded_length() || s.field_ids.size() != s.padded_length() ||
        s.attention_mask.size() != s.padded_length()) {
      throw ShapeError("mft trunk: malformed assembled sequence");
    }
    length = std::max(length, s.effective_length);
  }
  if (length > config_.max_len()) throw ShapeError("mft trunk: sequence longer than the position table");
  const auto n = batch.size();
  std::vector<std::size_t> tok(n * length), pos(n * length), field(n * length);
  std::vector<double> bias(n * config_.heads * length * length, 0.0);
  for (std::size_t b = 0; b < n; ++b) {
    const auto& s = batch[b];
    for (std::size_t i = 0; i < length; ++i) {
      const bool real = i < s.padded_length() && s.attention_mask[i];
      tok[b * length + i] = real ? s.token_ids[i] : corpus::kPad;
      field[b * length + i] = real ? static_cast<std::size_t>(s.field_ids[i]) : 0;
      pos[b * length + i] = i;
      if (real && s.token_ids[i] >= config_.vocab_size) {
        throw ShapeError("mft trunk: token id " + std::to_string(s.token_ids[i]) + " outside vocabulary");
      }
      if (!real) {
        for (std::size_t hd = 0; hd < config_.heads; ++hd) {
          const auto base = ((b * config_.heads + hd) * length) * length;
          for (std::size_t r = 0; r < length; ++r) bias[base + r * length + i] = kMaskedScore;
        }
      }
    }
  }
  forward_calls_->fetch_add(n);
  auto x = ops::add(ops::add(ops::embedding_lookup(params_.get("mft.tok_emb"), tok),
                             ops::embedding_lookup(params_.get("mft.pos_emb"), pos)),
                    ops::embedding_lookup(params_.get("mft.field_emb"), field));
  const auto mask_bias = Tensor::from({n * config_.heads, length, length}, std::move(bias));
  for (std::size_t l = 0; l < config_.layers; ++l) x = layer_forward(l, x, mask_bias, n, length);
  return {x, n, length};
}

Tensor MftModel::pool(const TrunkOutput& out, std::span<const AssembledSequence> batch) const {
  std::vector<double> weights(out.batch * out.batch * out.length, 0.0);
  for (std::size_t b = 0; b < out.batch; ++b) {
    std::size_t count = 0;
    for (std::size_t i = 0; i < out.length && i < batch[b].padded_length(); ++i) count += batch[b].attention_mask[i];
    for (std::size_t i = 0; i < out.length && i < batch[b].padded_length(); ++i) {
      if (batch[b].attention_mask[i]) weights[b * out.batch * out.length + out.row(b, i)] = 1.0 / static_cast<double>(count);
    }
  }
  return ops::matmul(Tensor::from({out.batch, out.batch * out.length}, std::move(weights)), out.hidden);
}

Tensor MftModel::encode_batch(std::span<const AssembledSequence> batch) const { return pool(trunk(batch), batch); }

std::vector<double> MftModel::encode(const AssembledSequence& seq) const {
  compute::NoGradGuard no_grad;
  auto h = encode_batch(std::span(&seq, 1));
  return {h.data().begin(), h.data().end()};
}

Tensor MftModel::mtp_logits(const Tensor& rows) const {
  return ops::add_bias(ops::matmul(rows, params_.get("mft.mtp.w")), params_.get("mft.mtp.b"));
}

Tensor MftModel::fa_logits(const Tensor& rows) const {
  return ops::add_bias(ops::matmul(rows, params_.get("mft.fa.w")), params_.get("mft.fa.b"));
}

}  // namespace oleo::mft
