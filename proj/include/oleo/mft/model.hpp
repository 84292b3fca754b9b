// SPDX-License-Identifier: Apache-2.0
//
// Multi-field Transformer news encoder. Input layout per article:
//   [CLS, title..., SEP, category..., SEP, abstract..., SEP, PAD...]
// Token, position and field embeddings are summed, passed through post-norm
// Transformer layers, and mean-pooled over the non-PAD positions.
#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "oleo/compute/parameters.hpp"
#include "oleo/compute/tensor.hpp"
#include "oleo/corpus/news.hpp"

namespace oleo::mft {

struct MftConfig {
  std::size_t vocab_size = 0;
  std::size_t d = 64;
  std::size_t layers = 3;
  std::size_t heads = 4;
  corpus::FieldLimits limits;
  double mask_ratio = 0.15;
  double fa_negative_ratio = 0.5;
  double ln_eps = 1e-5;

  std::size_t max_len() const { return limits.total() + 4; }
  std::size_t ffn_dim() const { return 4 * d; }
  void validate() const;  // throws ConfigError
};

// Segment labels for the field embedding table.
enum class FieldLabel : std::uint8_t { Special = 0, Title = 1, Category = 2, Abstract = 3 };
inline constexpr std::size_t kFieldLabelCount = 4;

struct AssembledSequence {
  std::vector<corpus::TokenId> token_ids;
  std::vector<FieldLabel> field_ids;
  std::vector<std::size_t> positions;
  std::vector<bool> attention_mask;  // false at PAD
  std::size_t effective_length = 0;  // |s_t| + |s_c| + |s_a| + 4

  std::size_t padded_length() const { return token_ids.size(); }
};

// Pads to cfg.max_len().
AssembledSequence assemble(const corpus::NewsArticle& article, const MftConfig& cfg);
// Pads to `padded_length`, which must be >= the effective length.
AssembledSequence assemble(const corpus::NewsArticle& article, const MftConfig& cfg, std::size_t padded_length);

struct TrunkOutput {
  compute::Tensor hidden;  // [batch * length, d], final-layer embeddings E^H
  std::size_t batch = 0;
  std::size_t length = 0;  // common padded length used for the batch

  std::size_t row(std::size_t seq, std::size_t pos) const { return seq * length + pos; }
};

class MftModel {
 public:
  MftModel(MftConfig config, std::uint64_t seed);
  MftModel(const MftModel&) = delete;
  MftModel& operator=(const MftModel&) = delete;
  MftModel(MftModel&&) = default;
  MftModel& operator=(MftModel&&) = default;

  const MftConfig& config() const { return config_; }
  compute::ParameterSet& params() { return params_; }
  const compute::ParameterSet& params() const { return params_; }

  // Runs the embedding sum and all Transformer layers. Each sequence in the batch
  // counts as one encoder forward invocation.
  TrunkOutput trunk(std::span<const AssembledSequence> batch) const;

  // Mean over non-PAD positions of E^H: [batch, d].
  compute::Tensor pool(const TrunkOutput& out, std::span<const AssembledSequence> batch) const;
  compute::Tensor encode_batch(std::span<const AssembledSequence> batch) const;
  // Inference-only single-article representation h.
  std::vector<double> encode(const AssembledSequence& seq) const;

  compute::Tensor mtp_logits(const compute::Tensor& rows) const;  // [k, d] -> [k, N]
  compute::Tensor fa_logits(const compute::Tensor& rows) const;   // [k, d] -> [k, 2]

  std::uint64_t forward_calls() const { return forward_calls_->load(); }

 private:
  compute::Tensor layer_forward(std::size_t layer, const compute::Tensor& x, const compute::Tensor& mask_bias,
                                std::size_t batch, std::size_t length) const;

  MftConfig config_;
  compute::ParameterSet params_;
  std::unique_ptr<std::atomic<std::uint64_t>> forward_calls_;
};

}  // namespace oleo::mft
