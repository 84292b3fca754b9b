// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <cstring>

#include "doctest.h"
#include "oleo/compute/ops.hpp"
#include "oleo/corpus/vocabulary.hpp"
#include "oleo/error.hpp"
#include "oleo/pipeline/synthetic.hpp"
#include "oleo/recsys/trainer.hpp"
#include "support/gradcheck.hpp"
#include "support/temp_dir.hpp"

using namespace oleo;
using namespace oleo::recsys;
using compute::Tensor;

namespace {

void set(compute::ParameterSet& p, const char* name, std::vector<double> v) {
  auto d = p.get(name).mutable_data();
  REQUIRE(d.size() == v.size());
  std::copy(v.begin(), v.end(), d.begin());
}

void fill_all(compute::ParameterSet& p, double v) {
  for (auto& e : p.items())
    for (auto& x : e.tensor.mutable_data()) x = v;
}

Tensor random_rows(std::size_t n, std::size_t d, util::Rng& rng) {
  std::vector<double> v(n * d);
  for (auto& x : v) x = util::uniform01(rng) * 2 - 1;
  return Tensor::from({n, d}, v);
}

// Synthetic corpus shared by the training tests.
struct Fixture {
  oleo::testing::TempDir dir;
  pipeline::SyntheticDataset data;
  corpus::NewsCorpus corpus;
  std::vector<IndexedImpression> train, val, test;
  std::size_t vocab_size = 0;

  explicit Fixture(pipeline::SyntheticConfig cfg = {}) : data(pipeline::generate_synthetic(cfg)) {
    auto paths = pipeline::write_synthetic(data, dir.path());
    auto vocab = corpus::build_vocabulary(paths.news, 1);
    vocab_size = vocab.size();
    corpus = corpus::load_corpus(paths.news, vocab, corpus::FieldLimits{8, 1, 14});
    train = index_impressions(data.train, corpus);
    val = index_impressions(data.validation, corpus);
    test = index_impressions(data.test, corpus);
  }

  mft::MftConfig mft_config(std::size_t d = 16) const {
    mft::MftConfig c;
    c.vocab_size = vocab_size;
    c.d = d;
    c.layers = 1;
    c.heads = 2;
    c.limits = {8, 1, 14};
    return c;
  }
};

std::size_t matching_occurrence_oracle(std::span<const IndexedImpression> imps, std::size_t k) {
  std::size_t total = 0;
  for (const auto& imp : imps) {
    const auto pos = imp.positives();
    if (pos == 0 || pos == imp.labels.size()) continue;
    total += pos * (imp.history.size() + 1 + k);
  }
  return total;
}

std::size_t ranking_occurrence_oracle(std::span<const IndexedImpression> imps) {
  std::size_t total = 0;
  for (const auto& imp : imps) total += imp.history.size() + imp.candidates.size();
  return total;
}

}  // namespace

TEST_CASE("matching: empty history scores zero") {
  MatchingModel m(6, {.d_model = 8, .heads = 2, .attention_hidden = 4}, 1);
  util::Rng rng(1);
  CHECK(score_matching(m, Tensor::zeros({0, 6}), {}, random_rows(1, 6, rng)) == 0.0);
  // all-PAD history behaves the same
  CHECK(score_matching(m, random_rows(3, 6, rng), {false, false, false}, random_rows(1, 6, rng)) == 0.0);
  CHECK_THROWS_AS(score_matching(m, random_rows(2, 5, rng), {true, true}, random_rows(1, 6, rng)), ShapeError);
}

TEST_CASE("matching: a history of the candidate itself scores positive") {
  const std::size_t d = 4;
  MatchingModel m(d, {.d_model = d, .heads = 2, .attention_hidden = 3}, 2);
  std::vector<double> eye(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) eye[i * d + i] = 1.0;
  set(m.params(), "match.proj", eye);
  set(m.params(), "match.attn.wv", eye);
  util::Rng rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    auto c = random_rows(1, d, rng);
    std::vector<double> h;
    for (int i = 0; i < 3; ++i) h.insert(h.end(), c.data().begin(), c.data().end());
    CHECK(score_matching(m, Tensor::from({3, d}, h), {true, true, true}, c) > 0.0);
  }
}

TEST_CASE("matching: score equals hand-computed attention arithmetic") {
  // d_src = d_model = 2, one head, additive attention width 2
  MatchingModel m(2, {.d_model = 2, .heads = 1, .attention_hidden = 2}, 0);
  set(m.params(), "match.proj", {1.0, 0.5, -0.5, 1.0});
  set(m.params(), "match.attn.wq", {0.3, -0.2, 0.1, 0.4});
  set(m.params(), "match.attn.wk", {0.5, 0.1, -0.3, 0.2});
  set(m.params(), "match.attn.wv", {1.0, 0.2, 0.0, 0.7});
  set(m.params(), "match.pool.w", {0.6, -0.4, 0.2, 0.9});
  set(m.params(), "match.pool.b", {0.05, -0.1});
  set(m.params(), "match.pool.q", {0.8, -0.5});
  const double h[2][2] = {{1.0, 2.0}, {-1.0, 0.5}};
  const double c[2] = {0.3, -0.7};
  auto mv = [](const double x[2], const double w[4], double out[2]) {  // out = x . W (W row-major 2x2)
    out[0] = x[0] * w[0] + x[1] * w[2];
    out[1] = x[0] * w[1] + x[1] * w[3];
  };
  const double W[4] = {1.0, 0.5, -0.5, 1.0}, Wq[4] = {0.3, -0.2, 0.1, 0.4}, Wk[4] = {0.5, 0.1, -0.3, 0.2},
               Wv[4] = {1.0, 0.2, 0.0, 0.7}, Wa[4] = {0.6, -0.4, 0.2, 0.9};
  double p[2][2], q[2][2], k[2][2], v[2][2], o[2][2] = {{0, 0}, {0, 0}}, pc[2];
  for (int i = 0; i < 2; ++i) {
    mv(h[i], W, p[i]);
    mv(p[i], Wq, q[i]);
    mv(p[i], Wk, k[i]);
    mv(p[i], Wv, v[i]);
  }
  for (int i = 0; i < 2; ++i) {
    double s[2];
    for (int j = 0; j < 2; ++j) s[j] = (q[i][0] * k[j][0] + q[i][1] * k[j][1]) / std::sqrt(2.0);
    const double z = std::exp(s[0]) + std::exp(s[1]);
    for (int j = 0; j < 2; ++j)
      for (int e = 0; e < 2; ++e) o[i][e] += std::exp(s[j]) / z * v[j][e];
  }
  double a[2];
  for (int i = 0; i < 2; ++i) {
    double t[2];
    mv(o[i], Wa, t);
    a[i] = std::tanh(t[0] + 0.05) * 0.8 + std::tanh(t[1] - 0.1) * -0.5;
  }
  const double za = std::exp(a[0]) + std::exp(a[1]);
  double u[2];
  for (int e = 0; e < 2; ++e) u[e] = std::exp(a[0]) / za * o[0][e] + std::exp(a[1]) / za * o[1][e];
  mv(c, W, pc);
  const double expected = u[0] * pc[0] + u[1] * pc[1];
  const double got = score_matching(m, Tensor::from({2, 2}, {1.0, 2.0, -1.0, 0.5}), {true, true},
                                    Tensor::from({1, 2}, {0.3, -0.7}));
  CHECK(got == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("matching: PAD entries and history order do not change the score") {
  MatchingModel m(6, {.d_model = 8, .heads = 2, .attention_hidden = 4}, 5);
  util::Rng rng(6);
  for (int rep = 0; rep < 20; ++rep) {
    auto h = random_rows(4, 6, rng);
    auto c = random_rows(1, 6, rng);
    const double base = score_matching(m, h, {true, true, true, true}, c);
    std::vector<double> padded(h.data().begin(), h.data().end());
    for (int i = 0; i < 12; ++i) padded.push_back(util::uniform01(rng) * 100);  // garbage under the mask
    CHECK(std::abs(score_matching(m, Tensor::from({6, 6}, padded), {true, true, true, true, false, false}, c) - base) <
          1e-9);
    std::vector<double> perm;
    for (std::size_t r : {2u, 0u, 3u, 1u}) perm.insert(perm.end(), h.data().begin() + r * 6, h.data().begin() + r * 6 + 6);
    CHECK(std::abs(score_matching(m, Tensor::from({4, 6}, perm), {true, true, true, true}, c) - base) < 1e-9);
  }
}

TEST_CASE("ranking: zero weights give probability one half") {
  RankingModel m(6, {.d_model = 8}, 1);
  fill_all(m.params(), 0.0);
  util::Rng rng(1);
  CHECK(predict_ranking(m, random_rows(3, 6, rng), {true, true, true}, random_rows(1, 6, rng)) == 0.5);
  CHECK(predict_ranking(m, Tensor::zeros({0, 6}), {}, random_rows(1, 6, rng)) == 0.5);
}

TEST_CASE("ranking: a cross layer with zero weight and bias is the identity") {
  RankingModel m(4, {.d_model = 4, .cross_layers = 1}, 2);
  set(m.params(), "rank.cross0.w", std::vector<double>(8, 0.0));
  set(m.params(), "rank.cross0.b", std::vector<double>(8, 0.0));
  util::Rng rng(3);
  auto x0 = random_rows(5, 8, rng);
  auto x1 = m.cross(x0);
  CHECK(std::equal(x1.data().begin(), x1.data().end(), x0.data().begin()));
}

TEST_CASE("ranking: cross network equals a loop over the recurrence") {
  RankingModel m(5, {.d_model = 5, .cross_layers = 3}, 4);
  util::Rng rng(7);
  for (auto& p : m.params().items())
    for (auto& x : p.tensor.mutable_data()) x = util::uniform01(rng) - 0.5;
  auto x0 = random_rows(4, 10, rng);
  auto out = m.cross(x0);
  for (std::size_t r = 0; r < 4; ++r) {
    std::vector<double> base(x0.data().begin() + r * 10, x0.data().begin() + r * 10 + 10), x = base;
    for (std::size_t l = 0; l < 3; ++l) {
      const auto w = m.params().get("rank.cross" + std::to_string(l) + ".w").data();
      const auto b = m.params().get("rank.cross" + std::to_string(l) + ".b").data();
      double dot = 0;
      for (std::size_t j = 0; j < 10; ++j) dot += x[j] * w[j];
      std::vector<double> next(10);
      for (std::size_t j = 0; j < 10; ++j) next[j] = base[j] * dot + b[j] + x[j];
      x = next;
    }
    for (std::size_t j = 0; j < 10; ++j) CHECK(out.at(r * 10 + j) == doctest::Approx(x[j]).epsilon(1e-12));
  }
}

TEST_CASE("ranking: PAD and permutation invariance, probability range") {
  RankingModel m(6, {.d_model = 8}, 5);
  util::Rng rng(8);
  for (int rep = 0; rep < 20; ++rep) {
    auto h = random_rows(3, 6, rng);
    auto c = random_rows(1, 6, rng);
    const double base = predict_ranking(m, h, {true, true, true}, c);
    CHECK(base > 0.0);
    CHECK(base < 1.0);
    std::vector<double> padded(h.data().begin(), h.data().end());
    for (int i = 0; i < 6; ++i) padded.push_back(42.0);
    CHECK(std::abs(predict_ranking(m, Tensor::from({4, 6}, padded), {true, true, true, false}, c) - base) < 1e-9);
    std::vector<double> perm;
    for (std::size_t r : {1u, 2u, 0u}) perm.insert(perm.end(), h.data().begin() + r * 6, h.data().begin() + r * 6 + 6);
    CHECK(std::abs(predict_ranking(m, Tensor::from({3, 6}, perm), {true, true, true}, c) - base) < 1e-9);
  }
}

TEST_CASE("extension points are declared but refuse to run") {
  CHECK_NOTHROW(require_implemented(ModelVariant::Nrms));
  CHECK_NOTHROW(require_implemented(ModelVariant::Dcn));
  for (auto v : {ModelVariant::Naml, ModelVariant::Lstur, ModelVariant::Bst, ModelVariant::Din}) {
    CHECK_THROWS_AS(require_implemented(v), ConfigError);
  }
  CHECK(variant_kind(ModelVariant::Lstur) == ModelKind::Matching);
  CHECK(variant_kind(ModelVariant::Din) == ModelKind::Ranking);
  CHECK(parse_mode("frozen") == NewsSourceMode::FrozenCache);
  CHECK_THROWS_AS(parse_mode("bogus"), ConfigError);
}

TEST_CASE("negative sampling: K per positive, replacement only when short") {
  std::vector<IndexedImpression> imps{
      {"1", "u", {0}, {1, 2, 3, 4, 5, 6}, {1, 0, 0, 1, 0, 0}},  // 2 positives, 4 negatives
      {"2", "u", {}, {7, 8}, {1, 0}},                           // 1 negative: with replacement
      {"3", "u", {}, {7, 8}, {1, 1}},                           // skipped
  };
  util::Rng rng(1);
  auto s = draw_matching_samples(imps, 4, rng);
  REQUIRE(s.size() == 3);
  for (const auto& x : s) CHECK(x.candidates.size() == 5);
  for (int i = 0; i < 2; ++i) {
    auto negs = std::vector<std::size_t>(s[i].candidates.begin() + 1, s[i].candidates.end());
    std::sort(negs.begin(), negs.end());
    CHECK(negs == std::vector<std::size_t>{2, 3, 5, 6});
  }
  CHECK(s[2].candidates == std::vector<std::size_t>{7, 8, 8, 8, 8});
}

TEST_CASE("downstream gradients match central finite differences") {
  std::vector<IndexedImpression> imps{
      {"1", "a", {0, 1, 2}, {3, 4, 5}, {1, 0, 0}},
      {"2", "b", {4}, {0, 6, 7}, {0, 1, 0}},
      {"3", "c", {}, {1, 2}, {1, 0}},
  };
  const RecsysConfig cfg{.d_model = 8, .heads = 2, .attention_hidden = 4, .cross_layers = 2, .mlp = {6, 4}};
  SUBCASE("matching") {
    Recommender r(ModelKind::Matching, std::make_unique<IdEmbeddingSource>(8, 6, 3), cfg, 5);
    // lift the id table off its tiny init so every path carries signal
    for (auto& x : r.params().get("news.id_emb").mutable_data()) x *= 30;
    util::Rng rng(2);
    auto samples = draw_matching_samples(imps, 2, rng);
    auto batch = matching_batch(imps, samples);
    auto entries = testing::gradient_check(r.params(), [&] { return r.batch_loss(batch); });
    for (const auto& e : entries) {
      INFO(e.name);
      CHECK(e.relative_error < 1e-4);
    }
  }
  SUBCASE("ranking") {
    Recommender r(ModelKind::Ranking, std::make_unique<IdEmbeddingSource>(8, 6, 3), cfg, 5);
    for (auto& x : r.params().get("news.id_emb").mutable_data()) x *= 30;
    // zero-initialised biases put dead units exactly on the ReLU kink
    for (const char* b : {"rank.mlp0.b", "rank.mlp1.b"})
      for (auto& x : r.params().get(b).mutable_data()) x = 0.1;
    std::vector<std::size_t> rows{0, 1, 2};
    auto batch = ranking_batch(imps, rows);
    auto entries = testing::gradient_check(r.params(), [&] { return r.batch_loss(batch); });
    for (const auto& e : entries) {
      INFO(e.name);
      CHECK(e.relative_error < 1e-4);
    }
  }
}

TEST_CASE("frozen cache: zero encoder calls and untouched vectors") {
  Fixture fx;
  auto mft = std::make_shared<mft::MftModel>(fx.mft_config(), 1);
  repstore::EncoderCallCounter counter;
  auto cache = std::make_shared<repstore::RepresentationCache>(
      repstore::build_cache(*mft, fx.corpus.articles(), {}, &counter));
  CHECK(counter.cache_build_calls == fx.corpus.size());
  const auto calls_after_build = mft->forward_calls();
  const auto before = cache->matrix();
  for (auto kind : {ModelKind::Matching, ModelKind::Ranking}) {
    Recommender r(kind, std::make_unique<FrozenCacheSource>(cache, fx.corpus), {}, 3);
    DownstreamConfig cfg;
    cfg.kind = kind;
    cfg.epochs = 2;
    auto rep = r.train(fx.train, fx.val, cfg);
    CHECK(rep.counter.downstream_calls == 0);
    CHECK(rep.eval_encoder_calls == 0);
    for (const auto& e : rep.epochs) CHECK(e.encoder_calls == 0);
  }
  CHECK(mft->forward_calls() == calls_after_build);
  CHECK(std::memcmp(before.data(), cache->matrix().data(), before.size() * sizeof(double)) == 0);
}

TEST_CASE("end-to-end mode: encoder calls equal the occurrence recount") {
  pipeline::SyntheticConfig sc;
  sc.train_impressions = 60;
  sc.validation_impressions = 0;
  Fixture fx(sc);
  for (auto kind : {ModelKind::Matching, ModelKind::Ranking}) {
    auto mft = std::make_shared<mft::MftModel>(fx.mft_config(8), 1);
    Recommender r(kind, std::make_unique<EndToEndTextSource>(mft, fx.corpus), {.d_model = 16}, 3);
    DownstreamConfig cfg;
    cfg.kind = kind;
    cfg.epochs = 2;
    cfg.batch_size = 16;
    auto rep = r.train(fx.train, {}, cfg);
    const auto per_epoch = kind == ModelKind::Matching ? matching_occurrence_oracle(fx.train, cfg.negatives)
                                                       : ranking_occurrence_oracle(fx.train);
    for (const auto& e : rep.epochs) CHECK(e.encoder_calls == per_epoch);
    CHECK(rep.counter.downstream_calls == 2 * per_epoch);
    CHECK(mft->forward_calls() == 2 * per_epoch);
  }
}

TEST_CASE("overfitting 100 impressions reaches near-perfect training AUC") {
  pipeline::SyntheticConfig sc;
  sc.train_impressions = 100;
  Fixture fx(sc);
  for (auto kind : {ModelKind::Matching, ModelKind::Ranking}) {
    Recommender r(kind, std::make_unique<IdEmbeddingSource>(fx.corpus.size(), 64, 9), {}, 4);
    DownstreamConfig cfg;
    cfg.kind = kind;
    cfg.epochs = 40;
    cfg.batch_size = 16;
    cfg.adam.lr = 3e-3;
    cfg.validate_each_epoch = false;
    r.train(fx.train, {}, cfg);
    auto m = r.evaluate(fx.train);
    INFO(kind_name(kind));
    CHECK(m.auc > 99.0);
  }
}

TEST_CASE("training is deterministic under a fixed seed") {
  pipeline::SyntheticConfig sc;
  sc.train_impressions = 50;
  Fixture fx(sc);
  auto run = [&] {
    Recommender r(ModelKind::Matching, std::make_unique<IdEmbeddingSource>(fx.corpus.size(), 16, 9),
                  {.d_model = 16}, 4);
    DownstreamConfig cfg;
    cfg.epochs = 2;
    cfg.seed = 11;
    auto rep = r.train(fx.train, fx.val, cfg);
    return std::make_pair(rep.epochs.back().loss, r.params().snapshot());
  };
  auto a = run(), b = run();
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
}

TEST_CASE("divergence restores the last completed epoch") {
  pipeline::SyntheticConfig sc;
  sc.train_impressions = 30;
  Fixture fx(sc);
  Recommender r(ModelKind::Ranking, std::make_unique<IdEmbeddingSource>(fx.corpus.size(), 8, 1), {.d_model = 8}, 2);
  const auto before = r.params().snapshot();
  DownstreamConfig cfg;
  cfg.kind = ModelKind::Ranking;
  cfg.adam.lr = 1e300;
  cfg.batch_size = 4;
  CHECK_THROWS_AS(r.train(fx.train, {}, cfg), DivergenceError);
  CHECK(r.params().snapshot() == before);
}
