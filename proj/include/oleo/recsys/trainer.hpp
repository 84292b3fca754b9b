// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oleo/compute/optim.hpp"
#include "oleo/corpus/behaviors.hpp"
#include "oleo/corpus/news.hpp"
#include "oleo/evalgreen/metrics.hpp"
#include "oleo/recsys/models.hpp"
#include "oleo/recsys/news_source.hpp"
#include "oleo/repstore/cache.hpp"
#include "oleo/util/rng.hpp"

namespace oleo::recsys {

// An impression with news replaced by corpus indices.
struct IndexedImpression {
  std::string impression_id;
  std::string user_id;
  std::vector<std::size_t> history;
  std::vector<std::size_t> candidates;
  std::vector<int> labels;

  std::size_t positives() const;
};

// Every referenced id must be in the corpus (LookupError otherwise).
std::vector<IndexedImpression> index_impressions(std::span<const corpus::ImpressionRecord> records,
                                                 const corpus::NewsCorpus& corpus);

// One matching training sample: a positive followed by `negatives` sampled
// non-clicked candidates of the same impression.
struct MatchingSample {
  std::size_t impression = 0;
  std::vector<std::size_t> candidates;  // [positive, negatives...]
};

// One sample per positive of every impression with at least one positive and
// one negative. Negatives are drawn without replacement when the impression has
// at least K of them, with replacement otherwise.
std::vector<MatchingSample> draw_matching_samples(std::span<const IndexedImpression> impressions, std::size_t negatives,
                                                  util::Rng& rng);

struct TrainingBatch {
  std::size_t batch = 0;
  std::size_t max_history = 0;
  std::vector<std::size_t> history;  // [batch * max_history], kPadNews padding
  std::vector<bool> history_mask;
  std::vector<std::size_t> candidates;  // matching: [batch * (1 + K)]; ranking: every labeled candidate
  std::vector<std::size_t> owner;       // ranking: batch row of each candidate
  std::vector<double> labels;           // ranking: click label of each candidate

  // News-vector requests a text encoder has to serve for this batch.
  std::size_t news_occurrences() const;
};

TrainingBatch matching_batch(std::span<const IndexedImpression> impressions, std::span<const MatchingSample> samples);
TrainingBatch ranking_batch(std::span<const IndexedImpression> impressions, std::span<const std::size_t> rows);

struct DownstreamConfig {
  ModelKind kind = ModelKind::Matching;
  RecsysConfig model;
  std::size_t negatives = 4;
  std::size_t epochs = 3;
  std::size_t batch_size = 64;  // matching: samples; ranking: impressions
  compute::AdamConfig adam{.lr = 1e-3};
  std::uint64_t seed = 0;
  bool validate_each_epoch = true;
};

struct DownstreamEpoch {
  std::size_t epoch = 0;
  double loss = 0.0;  // mean batch loss
  std::optional<double> val_auc;
  std::size_t samples = 0;
  std::size_t steps = 0;
  std::uint64_t encoder_calls = 0;  // news-encoder invocations by training steps this epoch
  double seconds = 0.0;             // training steps only
};

struct DownstreamReport {
  std::vector<DownstreamEpoch> epochs;
  repstore::EncoderCallCounter counter;  // downstream_calls summed over epochs
  std::uint64_t eval_encoder_calls = 0;
  double train_seconds = 0.0;
  double eval_seconds = 0.0;
};

class Recommender {
 public:
  Recommender(ModelKind kind, std::unique_ptr<NewsSource> source, const RecsysConfig& cfg, std::uint64_t seed);

  ModelKind kind() const { return kind_; }
  NewsSource& source() { return *source_; }
  const NewsSource& source() const { return *source_; }
  MatchingModel* matching() { return matching_.get(); }
  RankingModel* ranking() { return ranking_.get(); }
  // Downstream model parameters plus the source's trainable parameters.
  compute::ParameterSet& params() { return params_; }
  // Downstream model parameters only (what the checkpoint holds).
  compute::ParameterSet& model_params();

  compute::Tensor batch_loss(const TrainingBatch& batch) const;

  // Scores (matching) or click probabilities (ranking) for each candidate.
  std::vector<std::vector<double>> score(std::span<const IndexedImpression> impressions) const;
  evalgreen::MetricsReport evaluate(std::span<const IndexedImpression> impressions) const;

  // On a non-finite loss/gradient the parameters are restored to the last
  // completed epoch and DivergenceError is thrown.
  DownstreamReport train(std::span<const IndexedImpression> train, std::span<const IndexedImpression> validation,
                         const DownstreamConfig& cfg,
                         const std::function<void(const DownstreamEpoch&)>& on_epoch = {});

 private:
  // Projected [N + 1, d_model] table of every corpus news; the last row is zero (PAD).
  compute::Tensor news_table() const;

  ModelKind kind_;
  std::unique_ptr<NewsSource> source_;
  std::unique_ptr<MatchingModel> matching_;
  std::unique_ptr<RankingModel> ranking_;
  compute::ParameterSet params_;
};

}  // namespace oleo::recsys
