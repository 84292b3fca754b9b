// SPDX-License-Identifier: Apache-2.0
//
// Downstream consumers of news vectors. Both start with a learnable projection
// W: d_src -> d_model (no bias) applied to every news vector.
//
// Matching (NRMS-style): multi-head self-attention over the projected history,
// additive attention pooling into a user vector u, score = u . c.
//
// Ranking (DCN-style): x0 = [mean of history ; candidate], cross layers
// x_{k+1} = x0 * (x_k . w_k) + b_k + x_k next to a ReLU MLP tower, and a linear
// logit over [x_L ; tower] passed through a sigmoid.
#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "oleo/compute/parameters.hpp"
#include "oleo/compute/tensor.hpp"

namespace oleo::recsys {

enum class ModelKind { Matching, Ranking };

ModelKind parse_kind(std::string_view text);  // matching | ranking
std::string_view kind_name(ModelKind kind);

// Named variants. Only Nrms (matching) and Dcn (ranking) are implemented; the
// rest are extension points sharing the same score/predict interfaces.
enum class ModelVariant { Nrms, Dcn, Naml, Lstur, Bst, Din };
ModelKind variant_kind(ModelVariant v);
// Throws ConfigError for variants that are declared but not implemented.
void require_implemented(ModelVariant v);

struct RecsysConfig {
  std::size_t d_model = 64;
  std::size_t heads = 4;             // matching self-attention heads
  std::size_t attention_hidden = 64; // additive attention width
  std::size_t cross_layers = 2;
  std::vector<std::size_t> mlp = {64, 32};
};

// History rows are laid out [batch * length, d_model]; mask[b * length + i] marks
// real (non-PAD) entries.
struct HistoryView {
  const compute::Tensor* rows;
  const std::vector<bool>* mask;
  std::size_t batch;
  std::size_t length;
};

class MatchingModel {
 public:
  MatchingModel(std::size_t d_src, RecsysConfig cfg, std::uint64_t seed);

  const RecsysConfig& config() const { return cfg_; }
  std::size_t input_dim() const { return d_src_; }
  compute::ParameterSet& params() { return params_; }
  const compute::ParameterSet& params() const { return params_; }

  compute::Tensor project(const compute::Tensor& src) const;  // [n, d_src] -> [n, d_model]
  compute::Tensor user_vectors(const HistoryView& h) const;   // -> [batch, d_model]
  // user [B, D], candidates [B * k, D] -> scores [B, k]
  compute::Tensor scores(const compute::Tensor& user, const compute::Tensor& candidates, std::size_t k) const;

 private:
  std::size_t d_src_;
  RecsysConfig cfg_;
  compute::ParameterSet params_;
};

class RankingModel {
 public:
  RankingModel(std::size_t d_src, RecsysConfig cfg, std::uint64_t seed);

  const RecsysConfig& config() const { return cfg_; }
  std::size_t input_dim() const { return d_src_; }
  compute::ParameterSet& params() { return params_; }
  const compute::ParameterSet& params() const { return params_; }

  compute::Tensor project(const compute::Tensor& src) const;
  compute::Tensor history_mean(const HistoryView& h) const;  // [batch, d_model], zero for empty histories
  // Cross-network output x_L for x0 [R, 2 * d_model].
  compute::Tensor cross(const compute::Tensor& x0) const;
  // user [R, D], candidate [R, D] -> logits [R, 1]
  compute::Tensor logits(const compute::Tensor& user, const compute::Tensor& candidate) const;

 private:
  std::size_t d_src_;
  RecsysConfig cfg_;
  compute::ParameterSet params_;
};

// Single-instance scoring on raw (unprojected) vectors. `history` is
// [n, d_src] with mask[i] false for PAD rows; `candidate` is [1, d_src].
double score_matching(const MatchingModel& model, const compute::Tensor& history, const std::vector<bool>& mask,
                      const compute::Tensor& candidate);
double predict_ranking(const RankingModel& model, const compute::Tensor& history, const std::vector<bool>& mask,
                       const compute::Tensor& candidate);

}  // namespace oleo::recsys
