// SPDX-License-Identifier: Apache-2.0
//
// Self-supervised pretraining objectives.
//
// Masked token prediction: per sequence, ceil(mask_ratio * maskable) content
// positions (title/category/abstract, never CLS/SEP/PAD) are replaced by MASK;
// the loss is the per-sequence sum of −log p(original token), averaged over the
// batch size n.
//
// Field alignment: each article independently becomes a negative with
// probability fa_negative_ratio by swapping one uniformly chosen field with the
// same field of another article in the batch. The CLS embedding is classified
// as aligned (1) or swapped (0); loss is −(1/n) Σ log p(label).
#pragma once

#include <span>
#include <vector>

#include "oleo/compute/tensor.hpp"
#include "oleo/corpus/news.hpp"
#include "oleo/mft/model.hpp"
#include "oleo/util/rng.hpp"

namespace oleo::mft {

struct MaskedPosition {
  std::size_t sequence = 0;
  std::size_t position = 0;
  corpus::TokenId original = 0;
};

struct MaskDraw {
  std::vector<AssembledSequence> inputs;  // copies with MASK substituted
  std::vector<MaskedPosition> masked;
  std::size_t sequences_without_maskable = 0;
};

MaskDraw draw_mask(std::span<const AssembledSequence> batch, double mask_ratio, util::Rng& rng);

struct MtpResult {
  compute::Tensor loss;  // scalar
  std::size_t masked_tokens = 0;
  std::size_t batch_size = 0;
  std::size_t sequences_without_maskable = 0;
  // loss divided by mean masked tokens per sequence: the per-token cross-entropy
  double per_token_loss() const;
};

MtpResult mtp_loss_on(const MftModel& model, const MaskDraw& draw);
MtpResult mtp_loss(const MftModel& model, std::span<const AssembledSequence> batch, util::Rng& rng);

struct FaDraw {
  std::vector<corpus::NewsArticle> articles;  // possibly field-swapped
  std::vector<int> labels;                    // 1 aligned, 0 swapped
  std::size_t relabeled_positive = 0;         // negatives that could not find a differing field
};

FaDraw draw_field_alignment(std::span<const corpus::NewsArticle> batch, double negative_ratio, util::Rng& rng);

struct FaResult {
  compute::Tensor loss;  // scalar
  double accuracy = 0.0;
  std::size_t negatives = 0;
};

FaResult fa_loss_on(const MftModel& model, const FaDraw& draw);
FaResult fa_loss(const MftModel& model, std::span<const corpus::NewsArticle> batch, util::Rng& rng);

struct PretrainLosses {
  MtpResult mtp;
  FaResult fa;
  compute::Tensor total;  // L_MTP + L_FA
};

// Draws the MTP mask first, then the FA negatives, from the same rng.
PretrainLosses pretrain_losses(const MftModel& model, std::span<const corpus::NewsArticle> batch, util::Rng& rng);

}  // namespace oleo::mft
