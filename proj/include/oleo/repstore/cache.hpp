// SPDX-License-Identifier: Apache-2.0
//
// Frozen news-id -> vector store produced by a single pass of the encoder over
// the corpus. Binary layout (little-endian):
//   "OLEC" | version u32 | d u32 | count u64 | model_hash[32] | vocab_hash[32]
//   then per entry: id_len u32 | id bytes | d x f64
// The creation timestamp is kept in a JSON sidecar (<file>.meta.json) so the
// binary file depends only on model, vocabulary and corpus.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "oleo/compute/tensor.hpp"
#include "oleo/corpus/news.hpp"
#include "oleo/mft/model.hpp"
#include "oleo/util/sha256.hpp"

namespace oleo::repstore {

// Reserved id that looks up as the zero vector (history padding).
inline const std::string kPadNewsId = "[PAD]";
// Row index accepted by lookup_rows() for the same purpose.
inline constexpr std::size_t kPadRow = static_cast<std::size_t>(-1);

inline constexpr std::uint32_t kCacheVersion = 1;

struct Provenance {
  util::Digest model_hash{};  // sha256 of the checkpoint file
  util::Digest vocab_hash{};  // sha256 of the vocabulary file
};

struct EncoderCallCounter {
  std::uint64_t cache_build_calls = 0;
  std::uint64_t downstream_calls = 0;  // must stay 0 for cache-backed training
  std::uint64_t serve_calls = 0;       // one-off encodes of news missing from the cache
};

class RepresentationCache {
 public:
  RepresentationCache() = default;
  RepresentationCache(std::size_t dim, std::vector<std::string> ids, std::vector<double> matrix, Provenance provenance,
                      std::string created_at = {});

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }
  const std::vector<double>& matrix() const { return matrix_; }  // row-major [size, dim]
  const Provenance& provenance() const { return provenance_; }
  const std::string& created_at() const { return created_at_; }

  bool contains(const std::string& id) const { return index_.count(id) != 0; }
  std::size_t index_of(const std::string& id) const;  // LookupError naming the id
  std::span<const double> vector(const std::string& id) const;

  // Constant [n, dim] tensors; never touch the encoder.
  compute::Tensor lookup(std::span<const std::string> ids) const;
  compute::Tensor lookup_rows(std::span<const std::size_t> rows) const;

  bool operator==(const RepresentationCache& other) const;

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> ids_;
  std::vector<double> matrix_;
  Provenance provenance_;
  std::string created_at_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Encodes every article exactly once, each as its own sequence, so a vector
// depends only on the article content. Duplicate ids are an error.
RepresentationCache build_cache(const mft::MftModel& model, std::span<const corpus::NewsArticle> articles,
                                const Provenance& provenance, EncoderCallCounter* counter = nullptr);

// One-off encode of an article that is missing from the cache.
std::vector<double> encode_at_serve_time(const mft::MftModel& model, const corpus::NewsArticle& article,
                                         EncoderCallCounter& counter);

std::vector<std::uint8_t> encode_cache(const RepresentationCache& cache);
RepresentationCache decode_cache(std::span<const std::uint8_t> bytes, const std::string& context = "cache");

struct LoadExpectations {
  std::optional<util::Digest> model_hash;
  std::optional<util::Digest> vocab_hash;
  std::optional<std::size_t> entry_count;
};

void save_cache(const RepresentationCache& cache, const std::filesystem::path& path);
// MissingArtifactError when absent, FormatError on damage, StaleArtifactError on
// a provenance mismatch.
RepresentationCache load_cache(const std::filesystem::path& path, const LoadExpectations& expect = {});

}  // namespace oleo::repstore
