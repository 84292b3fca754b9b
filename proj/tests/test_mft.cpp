// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <numeric>
#include <set>

#include "doctest.h"
#include "oleo/compute/ops.hpp"
#include "oleo/compute/optim.hpp"
#include "oleo/error.hpp"
#include "oleo/mft/model.hpp"
#include "oleo/mft/pretrain.hpp"
#include "oleo/mft/tasks.hpp"
#include "support/gradcheck.hpp"

using namespace oleo;
using namespace oleo::mft;
using corpus::NewsArticle;
using corpus::TokenId;

namespace {

MftConfig tiny_config(std::size_t vocab = 16, std::size_t d = 8, std::size_t layers = 1, std::size_t heads = 1) {
  MftConfig cfg;
  cfg.vocab_size = vocab;
  cfg.d = d;
  cfg.layers = layers;
  cfg.heads = heads;
  cfg.limits = {4, 1, 5};
  return cfg;
}

NewsArticle article(std::string id, std::vector<TokenId> t, std::vector<TokenId> c, std::vector<TokenId> a) {
  return {std::move(id), std::move(t), std::move(c), std::move(a)};
}

// Random articles over content ids 5..vocab-1 within the config limits.
std::vector<NewsArticle> random_articles(std::size_t n, const MftConfig& cfg, std::uint64_t seed) {
  util::Rng rng(seed);
  auto tok = [&] { return static_cast<TokenId>(5 + util::uniform_index(rng, cfg.vocab_size - 5)); };
  std::vector<NewsArticle> out;
  for (std::size_t i = 0; i < n; ++i) {
    NewsArticle a;
    a.news_id = "a" + std::to_string(i);
    for (std::size_t k = 0, len = 1 + util::uniform_index(rng, cfg.limits.title); k < len; ++k) a.title_tokens.push_back(tok());
    a.category_tokens.push_back(tok());
    for (std::size_t k = 0, len = util::uniform_index(rng, cfg.limits.abstract + 1); k < len; ++k)
      a.abstract_tokens.push_back(tok());
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<double> values(const MftModel& m, const char* name) {
  const auto d = m.params().get(name).data();
  return {d.begin(), d.end()};
}

// Plain-loop reference of the single-layer encoder: embeddings, multi-head
// attention over the non-PAD prefix, post-norm residuals, GELU FFN, mean pooling.
std::vector<double> reference_encode(const MftModel& m, const AssembledSequence& s) {
  const auto& cfg = m.config();
  REQUIRE(cfg.layers == 1);
  const std::size_t d = cfg.d, f = cfg.ffn_dim(), H = cfg.heads, dh = d / H, L = s.effective_length;
  using Mat = std::vector<std::vector<double>>;
  const auto tok = values(m, "mft.tok_emb"), pos = values(m, "mft.pos_emb"), fld = values(m, "mft.field_emb");
  Mat x(L, std::vector<double>(d));
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t j = 0; j < d; ++j)
      x[i][j] = tok[s.token_ids[i] * d + j] + pos[i * d + j] + fld[static_cast<std::size_t>(s.field_ids[i]) * d + j];

  auto linear = [](const Mat& in, const std::vector<double>& w, const std::vector<double>& b, std::size_t out_dim) {
    Mat out(in.size(), std::vector<double>(out_dim));
    for (std::size_t i = 0; i < in.size(); ++i)
      for (std::size_t o = 0; o < out_dim; ++o) {
        double acc = b[o];
        for (std::size_t k = 0; k < in[i].size(); ++k) acc += in[i][k] * w[k * out_dim + o];
        out[i][o] = acc;
      }
    return out;
  };
  auto norm = [&](const Mat& a, const Mat& b, const char* g, const char* be) {
    const auto gamma = values(m, g), beta = values(m, be);
    Mat out = a;
    for (std::size_t i = 0; i < a.size(); ++i) {
      double mu = 0, var = 0;
      for (std::size_t j = 0; j < d; ++j) mu += a[i][j] + b[i][j];
      mu /= static_cast<double>(d);
      for (std::size_t j = 0; j < d; ++j) var += (a[i][j] + b[i][j] - mu) * (a[i][j] + b[i][j] - mu);
      var /= static_cast<double>(d);
      for (std::size_t j = 0; j < d; ++j)
        out[i][j] = (a[i][j] + b[i][j] - mu) / std::sqrt(var + cfg.ln_eps) * gamma[j] + beta[j];
    }
    return out;
  };
  const auto q = linear(x, values(m, "mft.layer0.attn.wq"), values(m, "mft.layer0.attn.bq"), d);
  const auto k = linear(x, values(m, "mft.layer0.attn.wk"), values(m, "mft.layer0.attn.bk"), d);
  const auto v = linear(x, values(m, "mft.layer0.attn.wv"), values(m, "mft.layer0.attn.bv"), d);
  Mat ctx(L, std::vector<double>(d, 0.0));
  for (std::size_t h = 0; h < H; ++h) {
    for (std::size_t i = 0; i < L; ++i) {
      std::vector<double> sc(L);
      double mx = -1e300;
      for (std::size_t j = 0; j < L; ++j) {
        double dot = 0;
        for (std::size_t e = 0; e < dh; ++e) dot += q[i][h * dh + e] * k[j][h * dh + e];
        sc[j] = dot / std::sqrt(static_cast<double>(dh));
        mx = std::max(mx, sc[j]);
      }
      double z = 0;
      for (auto& val : sc) z += (val = std::exp(val - mx));
      for (std::size_t j = 0; j < L; ++j)
        for (std::size_t e = 0; e < dh; ++e) ctx[i][h * dh + e] += sc[j] / z * v[j][h * dh + e];
    }
  }
  const auto attn = linear(ctx, values(m, "mft.layer0.attn.wo"), values(m, "mft.layer0.attn.bo"), d);
  const auto y = norm(x, attn, "mft.layer0.ln1.gamma", "mft.layer0.ln1.beta");
  auto hid = linear(y, values(m, "mft.layer0.ffn.w1"), values(m, "mft.layer0.ffn.b1"), f);
  for (auto& row : hid)
    for (auto& val : row) val = 0.5 * val * (1.0 + std::erf(val / std::sqrt(2.0)));
  const auto ff = linear(hid, values(m, "mft.layer0.ffn.w2"), values(m, "mft.layer0.ffn.b2"), d);
  const auto out = norm(y, ff, "mft.layer0.ln2.gamma", "mft.layer0.ln2.beta");
  std::vector<double> hvec(d, 0.0);
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t j = 0; j < d; ++j) hvec[j] += out[i][j] / static_cast<double>(L);
  return hvec;
}

}  // namespace

TEST_CASE("assemble: layout and effective length") {
  auto cfg = tiny_config();
  auto s = assemble(article("x", {7, 8}, {9}, {}), cfg);
  CHECK(s.effective_length == 7);
  CHECK(std::vector<TokenId>(s.token_ids.begin(), s.token_ids.begin() + 7) ==
        std::vector<TokenId>{corpus::kCls, 7, 8, corpus::kSep, 9, corpus::kSep, corpus::kSep});
  CHECK(s.padded_length() == cfg.max_len());
  for (std::size_t i = 0; i < s.padded_length(); ++i) {
    CHECK(s.attention_mask[i] == (i < 7));
    CHECK(s.positions[i] == i);
    if (i >= 7) CHECK(s.token_ids[i] == corpus::kPad);
  }
  CHECK(s.field_ids[1] == FieldLabel::Title);
  CHECK(s.field_ids[4] == FieldLabel::Category);

  auto empty = assemble(article("e", {}, {}, {}), cfg);
  CHECK(empty.effective_length == 4);
  CHECK(std::vector<TokenId>(empty.token_ids.begin(), empty.token_ids.begin() + 4) ==
        std::vector<TokenId>{corpus::kCls, corpus::kSep, corpus::kSep, corpus::kSep});

  MftConfig full;
  full.vocab_size = 10;
  auto big = assemble(article("f", std::vector<TokenId>(20, 5), {6}, std::vector<TokenId>(40, 7)), full);
  CHECK(big.effective_length == 65);
  CHECK(full.max_len() == 65);

  CHECK_THROWS_AS(assemble(article("o", std::vector<TokenId>(5, 5), {}, {}), cfg), ShapeError);
}

TEST_CASE("assembled layout holds for random articles") {
  auto cfg = tiny_config();
  for (const auto& a : random_articles(200, cfg, 3)) {
    auto s = assemble(a, cfg);
    REQUIRE(s.effective_length == a.title_tokens.size() + a.category_tokens.size() + a.abstract_tokens.size() + 4);
    // structural scan: CLS, title, SEP, category, SEP, abstract, SEP
    std::vector<TokenId> expect{corpus::kCls};
    expect.insert(expect.end(), a.title_tokens.begin(), a.title_tokens.end());
    expect.push_back(corpus::kSep);
    expect.insert(expect.end(), a.category_tokens.begin(), a.category_tokens.end());
    expect.push_back(corpus::kSep);
    expect.insert(expect.end(), a.abstract_tokens.begin(), a.abstract_tokens.end());
    expect.push_back(corpus::kSep);
    CHECK(std::vector<TokenId>(s.token_ids.begin(), s.token_ids.begin() + static_cast<long>(s.effective_length)) ==
          expect);
  }
}

TEST_CASE("config validation") {
  auto cfg = tiny_config(16, 8, 1, 3);
  CHECK_THROWS_AS(MftModel(cfg, 1), ConfigError);
  cfg = tiny_config();
  cfg.mask_ratio = 0.0;
  CHECK_THROWS_AS(MftModel(cfg, 1), ConfigError);
  cfg = tiny_config();
  cfg.layers = 0;
  CHECK_THROWS_AS(MftModel(cfg, 1), ConfigError);
}

TEST_CASE("parameter names are unique and head widths are fixed") {
  MftModel m(tiny_config(16, 8, 2, 2), 1);
  std::set<std::string> names;
  for (const auto& p : m.params().items()) CHECK(names.insert(p.name).second);
  CHECK(m.params().get("mft.mtp.w").shape() == compute::Shape{8, 16});
  CHECK(m.params().get("mft.fa.w").shape() == compute::Shape{8, 2});
}

TEST_CASE("identical content gives bitwise-identical representations") {
  MftModel m(tiny_config(), 11);
  auto a = m.encode(assemble(article("x", {5, 6}, {7}, {8, 9}), m.config()));
  auto b = m.encode(assemble(article("y", {5, 6}, {7}, {8, 9}), m.config()));
  CHECK(a == b);
  CHECK(m.forward_calls() == 2);
}

TEST_CASE("extra padding leaves the representation unchanged") {
  auto cfg = tiny_config(16, 8, 2, 2);
  MftModel m(cfg, 5);
  for (const auto& a : random_articles(20, cfg, 8)) {
    auto s = assemble(a, cfg, assemble(a, cfg).effective_length);
    auto h0 = m.encode(s);
    // batched alongside a longer sequence: padding now appears inside the trunk
    auto longest = assemble(article("l", {5, 5, 5, 5}, {6}, {7, 7, 7, 7, 7}), cfg);
    std::vector<AssembledSequence> batch{s, longest};
    compute::NoGradGuard ng;
    auto h = m.encode_batch(batch);
    for (std::size_t j = 0; j < cfg.d; ++j) CHECK(std::abs(h.at(j) - h0[j]) < 1e-9);
    auto padded = m.encode(assemble(a, cfg));
    for (std::size_t j = 0; j < cfg.d; ++j) CHECK(std::abs(padded[j] - h0[j]) < 1e-9);
  }
}

TEST_CASE("single-layer encoder agrees with a straight-line reference") {
  for (std::size_t heads : {1u, 2u}) {
    auto cfg = tiny_config(16, 8, 1, heads);
    MftModel m(cfg, 42);
    // non-trivial biases and norms so every parameter participates
    util::Rng rng(9);
    for (auto& p : m.params().items()) {
      if (p.name.find(".b") != std::string::npos || p.name.find("gamma") != std::string::npos ||
          p.name.find("beta") != std::string::npos) {
        for (auto& v : p.tensor.mutable_data()) v += 0.1 * (util::uniform01(rng) - 0.5);
      }
    }
    auto s = assemble(article("x", {5, 9, 12}, {7}, {8, 15}), cfg);
    auto h = m.encode(s);
    auto ref = reference_encode(m, s);
    for (std::size_t j = 0; j < cfg.d; ++j) CHECK(h[j] == doctest::Approx(ref[j]).epsilon(1e-12));
  }
}

TEST_CASE("untrained MTP loss per masked token is close to ln N") {
  auto cfg = tiny_config(400, 16, 2, 2);
  MftModel m(cfg, 3);
  auto arts = random_articles(64, cfg, 4);
  std::vector<AssembledSequence> seqs;
  for (const auto& a : arts) seqs.push_back(assemble(a, cfg));
  util::Rng rng(1);
  auto r = mtp_loss(m, seqs, rng);
  CHECK(r.masked_tokens > 0);
  const double ln_n = std::log(400.0);
  CHECK(r.per_token_loss() > 0.85 * ln_n);
  CHECK(r.per_token_loss() < 1.15 * ln_n);
}

TEST_CASE("mask draw: ceil(ratio * maskable) content positions, never specials") {
  auto cfg = tiny_config();
  auto arts = random_articles(50, cfg, 5);
  std::vector<AssembledSequence> seqs;
  for (const auto& a : arts) seqs.push_back(assemble(a, cfg));
  seqs.push_back(assemble(article("e", {}, {}, {}), cfg));
  util::Rng rng(2);
  auto draw = draw_mask(seqs, 0.3, rng);
  CHECK(draw.sequences_without_maskable == 1);
  std::vector<std::size_t> per_seq(seqs.size(), 0);
  for (const auto& mp : draw.masked) {
    ++per_seq[mp.sequence];
    CHECK(seqs[mp.sequence].field_ids[mp.position] != FieldLabel::Special);
    CHECK(draw.inputs[mp.sequence].token_ids[mp.position] == corpus::kMask);
    CHECK(seqs[mp.sequence].token_ids[mp.position] == mp.original);
  }
  for (std::size_t s = 0; s < seqs.size(); ++s) {
    const auto maskable = seqs[s].effective_length - 4;
    CHECK(per_seq[s] == static_cast<std::size_t>(std::ceil(0.3 * static_cast<double>(maskable))));
  }
}

TEST_CASE("single forced mask: loss equals cross-entropy at that position") {
  auto cfg = tiny_config();
  MftModel m(cfg, 7);
  auto s = assemble(article("x", {5, 6, 7}, {8}, {9}), cfg);
  MaskDraw draw;
  draw.inputs = {s};
  draw.inputs[0].token_ids[2] = corpus::kMask;
  draw.masked = {{0, 2, 6}};
  auto r = mtp_loss_on(m, draw);
  compute::NoGradGuard ng;
  auto out = m.trunk(draw.inputs);
  auto logits = m.mtp_logits(compute::gather_rows(out.hidden, std::vector<std::size_t>{out.row(0, 2)}));
  double mx = -1e300, z = 0;
  for (std::size_t v = 0; v < cfg.vocab_size; ++v) mx = std::max(mx, logits.at(v));
  for (std::size_t v = 0; v < cfg.vocab_size; ++v) z += std::exp(logits.at(v) - mx);
  CHECK(r.loss.item() == doctest::Approx(-(logits.at(6) - mx - std::log(z))).epsilon(1e-12));
}

TEST_CASE("MTP loss sums per sequence and averages over the batch") {
  auto cfg = tiny_config();
  MftModel m(cfg, 7);
  auto arts = random_articles(6, cfg, 12);
  std::vector<AssembledSequence> seqs;
  for (const auto& a : arts) seqs.push_back(assemble(a, cfg));
  util::Rng rng(3);
  auto draw = draw_mask(seqs, 0.5, rng);
  auto whole = mtp_loss_on(m, draw).loss.item();
  double sum = 0;
  for (std::size_t s = 0; s < seqs.size(); ++s) {
    MaskDraw one;
    one.inputs = {draw.inputs[s]};
    for (auto mp : draw.masked) {
      if (mp.sequence == s) one.masked.push_back({0, mp.position, mp.original});
    }
    sum += mtp_loss_on(m, one).loss.item();
  }
  CHECK(whole == doctest::Approx(sum / static_cast<double>(seqs.size())).epsilon(1e-12));
}

TEST_CASE("MTP head gradient only reflects masked targets") {
  auto cfg = tiny_config();
  MftModel m(cfg, 7);
  auto s = assemble(article("x", {5, 6, 7}, {8}, {9}), cfg);
  MaskDraw draw;
  draw.inputs = {s};
  draw.inputs[0].token_ids[1] = corpus::kMask;
  draw.masked = {{0, 1, 5}};
  m.params().zero_grad();
  compute::backward(mtp_loss_on(m, draw).loss);
  // d loss / d b_v = softmax_v - [v == target]: positive for every non-target, negative only at the target
  const auto g = m.params().get("mft.mtp.b").grad();
  for (std::size_t v = 0; v < cfg.vocab_size; ++v) {
    if (v == 5) {
      CHECK(g[v] < 0);
    } else {
      CHECK(g[v] > 0);
    }
  }
  CHECK(std::accumulate(g.begin(), g.end(), 0.0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK_FALSE(m.params().get("mft.fa.w").has_grad());
}

TEST_CASE("FA with zero negative ratio: all positives, loss near ln 2") {
  auto cfg = tiny_config(40, 16, 2, 2);
  cfg.fa_negative_ratio = 0.0;
  MftModel m(cfg, 2);
  auto arts = random_articles(32, cfg, 6);
  util::Rng rng(1);
  auto draw = draw_field_alignment(arts, 0.0, rng);
  for (int l : draw.labels) CHECK(l == 1);
  auto r = fa_loss(m, arts, rng);
  CHECK(r.negatives == 0);
  CHECK(r.loss.item() == doctest::Approx(std::log(2.0)).epsilon(0.15));
}

TEST_CASE("FA negatives always differ from their source article") {
  auto cfg = tiny_config();
  auto arts = random_articles(10, cfg, 9);
  // duplicate content forces token-identical draws for some fields
  arts[1].title_tokens = arts[0].title_tokens;
  arts[1].category_tokens = arts[0].category_tokens;
  util::Rng rng(4);
  for (int rep = 0; rep < 50; ++rep) {
    auto draw = draw_field_alignment(arts, 1.0, rng);
    for (std::size_t i = 0; i < arts.size(); ++i) {
      if (draw.labels[i] == 0) {
        CHECK_FALSE(draw.articles[i].same_content(arts[i]));
      } else {
        CHECK(draw.articles[i].same_content(arts[i]));
      }
    }
  }
  // two articles that only differ in the abstract: every negative must swap abstracts
  std::vector<NewsArticle> pair{article("p", {5}, {6}, {7}), article("q", {5}, {6}, {8})};
  std::size_t negatives = 0;
  for (int rep = 0; rep < 50; ++rep) {
    auto draw = draw_field_alignment(pair, 1.0, rng);
    for (std::size_t i = 0; i < 2; ++i) {
      if (draw.labels[i] == 0) {
        ++negatives;
        CHECK(draw.articles[i].abstract_tokens == pair[1 - i].abstract_tokens);
      }
    }
  }
  CHECK(negatives > 0);
}

TEST_CASE("FA rejects undersized and identical batches") {
  util::Rng rng(1);
  std::vector<NewsArticle> one{article("a", {5}, {6}, {7})};
  CHECK_THROWS_AS(draw_field_alignment(one, 0.5, rng), ShapeError);
  std::vector<NewsArticle> same{article("a", {5}, {6}, {7}), article("b", {5}, {6}, {7})};
  CHECK_THROWS_AS(draw_field_alignment(same, 0.5, rng), ShapeError);
}

TEST_CASE("FA loss is symmetric under logit swap plus label flip") {
  auto cfg = tiny_config();
  MftModel m(cfg, 3);
  auto arts = random_articles(8, cfg, 2);
  util::Rng rng(5);
  auto draw = draw_field_alignment(arts, 0.5, rng);
  const double base = fa_loss_on(m, draw).loss.item();
  // swap head columns and flip labels
  auto w = m.params().get("mft.fa.w").mutable_data();
  for (std::size_t r = 0; r < cfg.d; ++r) std::swap(w[2 * r], w[2 * r + 1]);
  auto b = m.params().get("mft.fa.b").mutable_data();
  std::swap(b[0], b[1]);
  for (auto& l : draw.labels) l = 1 - l;
  CHECK(fa_loss_on(m, draw).loss.item() == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("combined loss equals the sum of task losses on the same draws") {
  auto cfg = tiny_config();
  MftModel m(cfg, 3);
  auto arts = random_articles(8, cfg, 2);
  util::Rng r1(77), r2(77);
  auto combined = pretrain_losses(m, arts, r1);
  std::vector<AssembledSequence> seqs;
  for (const auto& a : arts) seqs.push_back(assemble(a, cfg));
  const double mtp = mtp_loss(m, seqs, r2).loss.item();
  const double fa = fa_loss(m, arts, r2).loss.item();
  CHECK(std::abs(combined.total.item() - (mtp + fa)) < 1e-12);
}

TEST_CASE("MFT gradients match central finite differences") {
  auto cfg = tiny_config(12, 8, 1, 2);
  cfg.limits = {3, 1, 3};
  MftModel m(cfg, 21);
  auto arts = random_articles(4, cfg, 13);
  std::vector<AssembledSequence> seqs;
  for (const auto& a : arts) seqs.push_back(assemble(a, cfg));
  util::Rng rng(8);
  const auto mask = draw_mask(seqs, 0.5, rng);
  const auto fa = draw_field_alignment(arts, 0.5, rng);
  auto entries = testing::gradient_check(m.params(), [&] {
    return compute::add(mtp_loss_on(m, mask).loss, fa_loss_on(m, fa).loss);
  });
  CHECK(entries.size() == m.params().size());
  for (const auto& e : entries) {
    INFO(e.name << " autodiff=" << e.autodiff_norm << " numeric=" << e.numeric_norm);
    CHECK(e.relative_error < 1e-4);
  }
}

TEST_CASE("MTP overfits a single article") {
  auto cfg = tiny_config(30, 16, 1, 2);
  MftModel m(cfg, 4);
  std::vector<AssembledSequence> seqs{assemble(article("x", {5, 6, 7, 8}, {9}, {10, 11, 12, 13, 14}), cfg)};
  compute::Adam adam({.lr = 5e-3});
  util::Rng rng(1);
  double last = 0;
  for (int step = 0; step < 500; ++step) {
    m.params().zero_grad();
    auto r = mtp_loss(m, seqs, rng);
    compute::backward(r.loss);
    adam.step(m.params());
  }
  // average over fresh draws on the trained model
  compute::NoGradGuard ng;
  for (int k = 0; k < 10; ++k) last += mtp_loss(m, seqs, rng).loss.item() / 10.0;
  CHECK(last < 0.1);
}

TEST_CASE("pretrain: one visit per training article, deterministic, decreasing loss") {
  auto cfg = tiny_config(40, 16, 1, 2);
  auto arts = random_articles(50, cfg, 17);
  PretrainConfig pc;
  pc.epochs = 3;
  pc.batch_size = 8;
  pc.adam.lr = 5e-3;
  pc.seed = 3;
  MftModel a(cfg, 1), b(cfg, 1);
  auto ra = pretrain(a, arts, pc);
  auto rb = pretrain(b, arts, pc);
  CHECK(ra.train_size == 40);
  CHECK(ra.validation_size == 10);
  REQUIRE(ra.history.size() == 3);
  for (std::size_t e = 0; e < 3; ++e) {
    CHECK(ra.history[e].article_visits == 40);
    CHECK(ra.history[e].train_loss == rb.history[e].train_loss);
    CHECK(ra.history[e].val_loss == rb.history[e].val_loss);
  }
  CHECK(ra.history[1].train_loss < ra.history[0].train_loss);
  CHECK(ra.history[2].train_loss < ra.history[1].train_loss);
  CHECK(a.params().snapshot() == b.params().snapshot());
}

TEST_CASE("split is disjoint, covering and seeded") {
  auto [tr, va] = split_train_validation(103, 0.2, 9);
  CHECK(tr.size() + va.size() == 103);
  CHECK(va.size() == 20);
  std::vector<std::size_t> all = tr;
  all.insert(all.end(), va.begin(), va.end());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i] == i);
  CHECK(split_train_validation(103, 0.2, 9).second == va);
  CHECK(split_train_validation(103, 0.2, 10).second != va);
}

TEST_CASE("pretrain divergence restores the last good parameters") {
  auto cfg = tiny_config(20, 8, 1, 1);
  auto arts = random_articles(12, cfg, 2);
  MftModel m(cfg, 1);
  const auto before = m.params().snapshot();
  PretrainConfig pc;
  pc.epochs = 2;
  pc.batch_size = 4;
  pc.adam.lr = 1e300;
  CHECK_THROWS_AS(pretrain(m, arts, pc), DivergenceError);
  CHECK(m.params().snapshot() == before);
}
