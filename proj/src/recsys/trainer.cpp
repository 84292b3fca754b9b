// SPDX-License-Identifier: Apache-2.0
#include "oleo/recsys/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

#include "oleo/compute/ops.hpp"
#include "oleo/error.hpp"
#include "oleo/util/log.hpp"

namespace oleo::recsys {

using compute::Tensor;
namespace ops = compute;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Packs histories of `rows` into a [batch, max_history] grid with at least one slot.
void pack_histories(TrainingBatch& b, std::span<const IndexedImpression> imps, const std::vector<std::size_t>& rows) {
  b.batch = rows.size();
  b.max_history = 1;
  for (auto r : rows) b.max_history = std::max(b.max_history, imps[r].history.size());
  b.history.assign(b.batch * b.max_history, kPadNews);
  b.history_mask.assign(b.batch * b.max_history, false);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& h = imps[rows[i]].history;
    for (std::size_t j = 0; j < h.size(); ++j) {
      b.history[i * b.max_history + j] = h[j];
      b.history_mask[i * b.max_history + j] = true;
    }
  }
}

std::vector<std::size_t> iota_vec(std::size_t begin, std::size_t end) {
  std::vector<std::size_t> v(end - begin);
  std::iota(v.begin(), v.end(), begin);
  return v;
}

}  // namespace

std::size_t IndexedImpression::positives() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
}

std::vector<IndexedImpression> index_impressions(std::span<const corpus::ImpressionRecord> records,
                                                 const corpus::NewsCorpus& corpus) {
  std::vector<IndexedImpression> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    IndexedImpression imp{r.impression_id, r.user_id, {}, {}, {}};
    for (const auto& h : r.history) imp.history.push_back(corpus.index_of(h));
    for (const auto& c : r.candidates) {
      imp.candidates.push_back(corpus.index_of(c.news_id));
      imp.labels.push_back(c.label);
    }
    out.push_back(std::move(imp));
  }
  return out;
}

std::vector<MatchingSample> draw_matching_samples(std::span<const IndexedImpression> impressions, std::size_t negatives,
                                                  util::Rng& rng) {
  std::vector<MatchingSample> out;
  for (std::size_t i = 0; i < impressions.size(); ++i) {
    const auto& imp = impressions[i];
    std::vector<std::size_t> pos, neg;
    for (std::size_t j = 0; j < imp.candidates.size(); ++j) (imp.labels[j] == 1 ? pos : neg).push_back(imp.candidates[j]);
    if (pos.empty() || neg.empty()) continue;
    for (auto p : pos) {
      MatchingSample s{i, {p}};
      if (neg.size() >= negatives) {
        auto pool = neg;
        for (std::size_t k = 0; k < negatives; ++k) {
          std::swap(pool[k], pool[k + util::uniform_index(rng, pool.size() - k)]);
          s.candidates.push_back(pool[k]);
        }
      } else {
        for (std::size_t k = 0; k < negatives; ++k) s.candidates.push_back(neg[util::uniform_index(rng, neg.size())]);
      }
      out.push_back(std::move(s));
    }
  }
  return out;
}

std::size_t TrainingBatch::news_occurrences() const {
  return static_cast<std::size_t>(std::count(history_mask.begin(), history_mask.end(), true)) + candidates.size();
}

TrainingBatch matching_batch(std::span<const IndexedImpression> impressions, std::span<const MatchingSample> samples) {
  TrainingBatch b;
  std::vector<std::size_t> rows;
  for (const auto& s : samples) rows.push_back(s.impression);
  pack_histories(b, impressions, rows);
  for (const auto& s : samples) {
    if (s.candidates.size() != samples.front().candidates.size()) {
      throw ShapeError("matching batch: samples disagree on the candidate count");
    }
    b.candidates.insert(b.candidates.end(), s.candidates.begin(), s.candidates.end());
  }
  return b;
}

TrainingBatch ranking_batch(std::span<const IndexedImpression> impressions, std::span<const std::size_t> rows) {
  TrainingBatch b;
  pack_histories(b, impressions, {rows.begin(), rows.end()});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& imp = impressions[rows[i]];
    for (std::size_t j = 0; j < imp.candidates.size(); ++j) {
      b.candidates.push_back(imp.candidates[j]);
      b.owner.push_back(i);
      b.labels.push_back(static_cast<double>(imp.labels[j]));
    }
  }
  return b;
}

Recommender::Recommender(ModelKind kind, std::unique_ptr<NewsSource> source, const RecsysConfig& cfg,
                         std::uint64_t seed)
    : kind_(kind), source_(std::move(source)) {
  if (kind_ == ModelKind::Matching) {
    matching_ = std::make_unique<MatchingModel>(source_->dim(), cfg, seed);
  } else {
    ranking_ = std::make_unique<RankingModel>(source_->dim(), cfg, seed);
  }
  for (const auto& p : model_params().items()) params_.add(p.name, p.tensor);
  for (const auto& p : source_->trainable().items()) params_.add(p.name, p.tensor);
}

compute::ParameterSet& Recommender::model_params() { return matching_ ? matching_->params() : ranking_->params(); }

Tensor Recommender::batch_loss(const TrainingBatch& b) const {
  std::vector<std::size_t> all = b.history;
  all.insert(all.end(), b.candidates.begin(), b.candidates.end());
  const auto src = source_->vectors(all);
  const auto rows = kind_ == ModelKind::Matching ? matching_->project(src) : ranking_->project(src);
  const auto hist_idx = iota_vec(0, b.history.size());
  const auto cand_idx = iota_vec(b.history.size(), all.size());
  const auto hist = ops::gather_rows(rows, hist_idx);
  const auto cand = ops::gather_rows(rows, cand_idx);
  const HistoryView view{&hist, &b.history_mask, b.batch, b.max_history};
  if (kind_ == ModelKind::Matching) {
    const auto k = b.candidates.size() / b.batch;
    auto logits = matching_->scores(matching_->user_vectors(view), cand, k);
    std::vector<std::size_t> targets(b.batch, 0);  // the positive sits in column 0
    return ops::cross_entropy(logits, targets);
  }
  auto user = ops::gather_rows(ranking_->history_mean(view), b.owner);
  return ops::binary_cross_entropy_with_logits(ranking_->logits(user, cand), b.labels);
}

Tensor Recommender::news_table() const {
  compute::NoGradGuard ng;
  const auto n = source_->news_count();
  const auto d = kind_ == ModelKind::Matching ? matching_->config().d_model : ranking_->config().d_model;
  std::vector<double> table((n + 1) * d, 0.0);
  constexpr std::size_t kChunk = 256;
  for (std::size_t start = 0; start < n; start += kChunk) {
    const auto idx = iota_vec(start, std::min(n, start + kChunk));
    const auto src = source_->vectors(idx);
    const auto rows = kind_ == ModelKind::Matching ? matching_->project(src) : ranking_->project(src);
    std::copy(rows.data().begin(), rows.data().end(), table.begin() + static_cast<std::ptrdiff_t>(start * d));
  }
  return Tensor::from({n + 1, d}, std::move(table));
}

std::vector<std::vector<double>> Recommender::score(std::span<const IndexedImpression> impressions) const {
  compute::NoGradGuard ng;
  const auto table = news_table();
  const auto pad_row = source_->news_count();
  const auto d = table.shape()[1];
  std::vector<std::vector<double>> out;
  constexpr std::size_t kBatch = 128;
  for (std::size_t start = 0; start < impressions.size(); start += kBatch) {
    const auto rows = iota_vec(start, std::min(impressions.size(), start + kBatch));
    TrainingBatch b;
    pack_histories(b, impressions, rows);
    std::vector<std::size_t> slots(b.history.size());
    for (std::size_t i = 0; i < slots.size(); ++i) slots[i] = b.history[i] == kPadNews ? pad_row : b.history[i];
    const auto hist = ops::gather_rows(table, slots);
    const HistoryView view{&hist, &b.history_mask, b.batch, b.max_history};
    if (kind_ == ModelKind::Matching) {
      const auto u = matching_->user_vectors(view);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& imp = impressions[rows[i]];
        std::vector<double> s;
        for (auto c : imp.candidates) {
          double dot = 0.0;
          for (std::size_t j = 0; j < d; ++j) dot += u.at(i * d + j) * table.at(c * d + j);
          s.push_back(dot);
        }
        out.push_back(std::move(s));
      }
    } else {
      const auto user_mean = ranking_->history_mean(view);
      std::vector<std::size_t> owner, cands;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        for (auto c : impressions[rows[i]].candidates) {
          owner.push_back(i);
          cands.push_back(c);
        }
      }
      const auto p = ops::sigmoid(ranking_->logits(ops::gather_rows(user_mean, owner), ops::gather_rows(table, cands)));
      std::size_t k = 0;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        std::vector<double> s;
        for (std::size_t j = 0; j < impressions[rows[i]].candidates.size(); ++j) s.push_back(p.at(k++));
        out.push_back(std::move(s));
      }
    }
  }
  return out;
}

evalgreen::MetricsReport Recommender::evaluate(std::span<const IndexedImpression> impressions) const {
  const auto scores = score(impressions);
  std::vector<evalgreen::ImpressionScores> imps;
  imps.reserve(impressions.size());
  for (std::size_t i = 0; i < impressions.size(); ++i) imps.push_back({scores[i], impressions[i].labels});
  return evalgreen::evaluate(imps);
}

DownstreamReport Recommender::train(std::span<const IndexedImpression> train,
                                    std::span<const IndexedImpression> validation, const DownstreamConfig& cfg,
                                    const std::function<void(const DownstreamEpoch&)>& on_epoch) {
  if (cfg.kind != kind_) throw ConfigError("train: config model kind differs from the recommender");
  if (cfg.batch_size == 0) throw ConfigError("train: batch_size must be positive");
  if (kind_ == ModelKind::Matching && cfg.negatives == 0) throw ConfigError("train: negatives must be positive");
  if (train.empty()) throw ConfigError("train: no training impressions");
  DownstreamReport report;
  compute::Adam adam(cfg.adam);
  util::Rng rng(util::mix_seed(cfg.seed, 0xD0));
  auto last_good = params_.snapshot();

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    DownstreamEpoch ep;
    ep.epoch = epoch;
    const auto t0 = std::chrono::steady_clock::now();
    const auto calls0 = source_->encoder_calls();
    std::vector<TrainingBatch> batches;
    if (kind_ == ModelKind::Matching) {
      auto samples = draw_matching_samples(train, cfg.negatives, rng);
      std::shuffle(samples.begin(), samples.end(), rng);
      ep.samples = samples.size();
      for (std::size_t s = 0; s < samples.size(); s += cfg.batch_size) {
        batches.push_back(
            matching_batch(train, std::span(samples).subspan(s, std::min(cfg.batch_size, samples.size() - s))));
      }
    } else {
      auto order = iota_vec(0, train.size());
      std::shuffle(order.begin(), order.end(), rng);
      ep.samples = order.size();
      for (std::size_t s = 0; s < order.size(); s += cfg.batch_size) {
        batches.push_back(ranking_batch(train, std::span(order).subspan(s, std::min(cfg.batch_size, order.size() - s))));
      }
    }
    if (batches.empty()) throw ConfigError("train: no usable training samples (impressions need clicks and non-clicks)");
    try {
      for (const auto& b : batches) {
        params_.zero_grad();
        auto loss = batch_loss(b);
        compute::backward(loss);
        adam.step(params_);
        ep.loss += loss.item();
        ++ep.steps;
      }
    } catch (const NonFiniteError& e) {
      params_.restore(last_good);
      throw DivergenceError("downstream training diverged in epoch " + std::to_string(epoch) + ": " + e.what());
    }
    ep.loss /= static_cast<double>(ep.steps);
    ep.encoder_calls = source_->encoder_calls() - calls0;
    ep.seconds = seconds_since(t0);
    report.train_seconds += ep.seconds;
    report.counter.downstream_calls += ep.encoder_calls;
    last_good = params_.snapshot();
    if (cfg.validate_each_epoch && !validation.empty()) {
      const auto e0 = std::chrono::steady_clock::now();
      const auto v0 = source_->encoder_calls();
      const auto m = evaluate(validation);
      report.eval_encoder_calls += source_->encoder_calls() - v0;
      report.eval_seconds += seconds_since(e0);
      if (m.impression_count > 0) ep.val_auc = m.auc;
    }
    util::log_debug("downstream epoch " + std::to_string(epoch) + " loss " + std::to_string(ep.loss));
    report.epochs.push_back(ep);
    if (on_epoch) on_epoch(ep);
  }
  return report;
}

}  // namespace oleo::recsys
