// SPDX-License-Identifier: Apache-2.0
#include "oleo/recsys/news_source.hpp"

#include "oleo/compute/ops.hpp"
#include "oleo/error.hpp"

namespace oleo::recsys {

using compute::Tensor;

NewsSourceMode parse_mode(std::string_view text) {
  if (text == "frozen") return NewsSourceMode::FrozenCache;
  if (text == "id") return NewsSourceMode::IdEmbedding;
  if (text == "e2e") return NewsSourceMode::EndToEndText;
  throw ConfigError("unknown news source mode '" + std::string(text) + "' (expected frozen, id or e2e)");
}

std::string_view mode_name(NewsSourceMode mode) {
  switch (mode) {
    case NewsSourceMode::FrozenCache: return "frozen";
    case NewsSourceMode::IdEmbedding: return "id";
    case NewsSourceMode::EndToEndText: return "e2e";
  }
  return "?";
}

namespace {

void check_index(std::size_t i, std::size_t count) {
  if (i != kPadNews && i >= count) {
    throw LookupError("news index " + std::to_string(i) + " outside corpus of " + std::to_string(count));
  }
}

// Gathers rows of `table` and zeroes the entries whose mask is 0 (PAD slots).
Tensor masked_gather(const Tensor& table, std::span<const std::size_t> rows, std::vector<double> mask) {
  return compute::scale_rows(compute::gather_rows(table, rows), Tensor::from({rows.size()}, std::move(mask)));
}

}  // namespace

FrozenCacheSource::FrozenCacheSource(std::shared_ptr<const repstore::RepresentationCache> cache,
                                     const corpus::NewsCorpus& corpus)
    : cache_(std::move(cache)) {
  rows_.reserve(corpus.size());
  for (const auto& a : corpus.articles()) rows_.push_back(cache_->index_of(a.news_id));
}

Tensor FrozenCacheSource::vectors(std::span<const std::size_t> news) const {
  std::vector<std::size_t> rows(news.size());
  for (std::size_t i = 0; i < news.size(); ++i) {
    check_index(news[i], rows_.size());
    rows[i] = news[i] == kPadNews ? repstore::kPadRow : rows_[news[i]];
  }
  return cache_->lookup_rows(rows);
}

IdEmbeddingSource::IdEmbeddingSource(std::size_t news_count, std::size_t dim, std::uint64_t seed)
    : count_(news_count), dim_(dim) {
  if (news_count == 0 || dim == 0) throw ConfigError("id embedding: empty table");
  util::Rng rng(seed);
  params_.add("news.id_emb", compute::normal_init({news_count, dim}, 0.02, rng));
}

Tensor IdEmbeddingSource::vectors(std::span<const std::size_t> news) const {
  std::vector<std::size_t> rows(news.size(), 0);
  std::vector<double> mask(news.size(), 0.0);
  for (std::size_t i = 0; i < news.size(); ++i) {
    check_index(news[i], count_);
    if (news[i] == kPadNews) continue;
    rows[i] = news[i];
    mask[i] = 1.0;
  }
  return masked_gather(params_.get("news.id_emb"), rows, std::move(mask));
}

EndToEndTextSource::EndToEndTextSource(std::shared_ptr<mft::MftModel> model, const corpus::NewsCorpus& corpus)
    : model_(std::move(model)), baseline_(model_->forward_calls()) {
  sequences_.reserve(corpus.size());
  for (const auto& a : corpus.articles()) {
    sequences_.push_back(mft::assemble(a, model_->config(), mft::assemble(a, model_->config()).effective_length));
  }
}

Tensor EndToEndTextSource::vectors(std::span<const std::size_t> news) const {
  std::vector<mft::AssembledSequence> batch;
  std::vector<std::size_t> rows(news.size(), 0);
  std::vector<double> mask(news.size(), 0.0);
  for (std::size_t i = 0; i < news.size(); ++i) {
    check_index(news[i], sequences_.size());
    if (news[i] == kPadNews) continue;
    rows[i] = batch.size();
    mask[i] = 1.0;
    batch.push_back(sequences_[news[i]]);
  }
  if (batch.empty()) return Tensor::zeros({news.size(), dim()});
  return masked_gather(model_->encode_batch(batch), rows, std::move(mask));
}

}  // namespace oleo::recsys
