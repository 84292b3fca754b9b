// SPDX-License-Identifier: Apache-2.0
//
// Where downstream models get news vectors from. News are addressed by their
// index in the corpus; kPadNews marks an empty history slot and yields a zero row.
#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "oleo/compute/parameters.hpp"
#include "oleo/compute/tensor.hpp"
#include "oleo/corpus/news.hpp"
#include "oleo/mft/model.hpp"
#include "oleo/repstore/cache.hpp"

namespace oleo::recsys {

inline constexpr std::size_t kPadNews = static_cast<std::size_t>(-1);

enum class NewsSourceMode { FrozenCache, IdEmbedding, EndToEndText };

NewsSourceMode parse_mode(std::string_view text);  // frozen | id | e2e
std::string_view mode_name(NewsSourceMode mode);

class NewsSource {
 public:
  virtual ~NewsSource() = default;
  virtual NewsSourceMode mode() const = 0;
  virtual std::size_t dim() const = 0;
  virtual std::size_t news_count() const = 0;
  // [news.size(), dim()]
  virtual compute::Tensor vectors(std::span<const std::size_t> news) const = 0;
  // Parameters trained together with the downstream model (may be empty).
  virtual compute::ParameterSet& trainable() { return empty_; }
  // News-encoder forward invocations since construction.
  virtual std::uint64_t encoder_calls() const { return 0; }

 private:
  compute::ParameterSet empty_;
};

// Rows of a prebuilt cache, aligned to corpus order. Values are constants.
class FrozenCacheSource : public NewsSource {
 public:
  FrozenCacheSource(std::shared_ptr<const repstore::RepresentationCache> cache, const corpus::NewsCorpus& corpus);
  NewsSourceMode mode() const override { return NewsSourceMode::FrozenCache; }
  std::size_t dim() const override { return cache_->dim(); }
  std::size_t news_count() const override { return rows_.size(); }
  compute::Tensor vectors(std::span<const std::size_t> news) const override;
  const repstore::RepresentationCache& cache() const { return *cache_; }

 private:
  std::shared_ptr<const repstore::RepresentationCache> cache_;
  std::vector<std::size_t> rows_;  // corpus index -> cache row
};

// A trainable [news_count, dim] table, N(0, 0.02^2) initialised.
class IdEmbeddingSource : public NewsSource {
 public:
  IdEmbeddingSource(std::size_t news_count, std::size_t dim, std::uint64_t seed);
  NewsSourceMode mode() const override { return NewsSourceMode::IdEmbedding; }
  std::size_t dim() const override { return dim_; }
  std::size_t news_count() const override { return count_; }
  compute::Tensor vectors(std::span<const std::size_t> news) const override;
  compute::ParameterSet& trainable() override { return params_; }

 private:
  std::size_t count_;
  std::size_t dim_;
  compute::ParameterSet params_;
};

// Runs a trainable Multi-field Transformer on every non-PAD news occurrence.
class EndToEndTextSource : public NewsSource {
 public:
  EndToEndTextSource(std::shared_ptr<mft::MftModel> model, const corpus::NewsCorpus& corpus);
  NewsSourceMode mode() const override { return NewsSourceMode::EndToEndText; }
  std::size_t dim() const override { return model_->config().d; }
  std::size_t news_count() const override { return sequences_.size(); }
  compute::Tensor vectors(std::span<const std::size_t> news) const override;
  compute::ParameterSet& trainable() override { return model_->params(); }
  std::uint64_t encoder_calls() const override { return model_->forward_calls() - baseline_; }

 private:
  std::shared_ptr<mft::MftModel> model_;
  std::vector<mft::AssembledSequence> sequences_;
  std::uint64_t baseline_;
};

}  // namespace oleo::recsys
