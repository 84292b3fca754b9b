// SPDX-License-Identifier: Apache-2.0
#include "oleo/mft/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "oleo/compute/ops.hpp"
#include "oleo/error.hpp"
#include "oleo/util/log.hpp"

namespace oleo::mft {

using compute::Tensor;

namespace {
constexpr int kFaResampleAttempts = 16;
constexpr corpus::Field kFields[] = {corpus::Field::Title, corpus::Field::Category, corpus::Field::Abstract};
}  // namespace

MaskDraw draw_mask(std::span<const AssembledSequence> batch, double mask_ratio, util::Rng& rng) {
  MaskDraw draw;
  draw.inputs.assign(batch.begin(), batch.end());
  for (std::size_t s = 0; s < batch.size(); ++s) {
    auto& seq = draw.inputs[s];
    std::vector<std::size_t> maskable;
    for (std::size_t i = 0; i < seq.effective_length; ++i) {
      if (seq.field_ids[i] != FieldLabel::Special) maskable.push_back(i);
    }
    if (maskable.empty()) {
      ++draw.sequences_without_maskable;
      continue;
    }
    const auto k = static_cast<std::size_t>(std::ceil(mask_ratio * static_cast<double>(maskable.size())));
    // partial Fisher-Yates: first k entries become a uniform sample without replacement
    for (std::size_t i = 0; i < k; ++i) {
      const auto j = i + util::uniform_index(rng, maskable.size() - i);
      std::swap(maskable[i], maskable[j]);
    }
    std::sort(maskable.begin(), maskable.begin() + static_cast<std::ptrdiff_t>(k));
    for (std::size_t i = 0; i < k; ++i) {
      const auto p = maskable[i];
      draw.masked.push_back({s, p, seq.token_ids[p]});
      seq.token_ids[p] = corpus::kMask;
    }
  }
  if (draw.sequences_without_maskable > 0) {
    util::log_warn("mtp: " + std::to_string(draw.sequences_without_maskable) +
                   " sequence(s) without maskable tokens contribute 0 to the loss");
  }
  return draw;
}

double MtpResult::per_token_loss() const {
  if (masked_tokens == 0) return 0.0;
  return loss.item() * static_cast<double>(batch_size) / static_cast<double>(masked_tokens);
}

MtpResult mtp_loss_on(const MftModel& model, const MaskDraw& draw) {
  if (draw.inputs.empty()) throw ShapeError("mtp_loss: empty batch");
  MtpResult result;
  result.batch_size = draw.inputs.size();
  result.sequences_without_maskable = draw.sequences_without_maskable;
  result.masked_tokens = draw.masked.size();
  auto out = model.trunk(draw.inputs);
  if (draw.masked.empty()) {
    result.loss = Tensor::scalar(0.0);
    return result;
  }
  std::vector<std::size_t> rows;
  std::vector<std::size_t> targets;
  rows.reserve(draw.masked.size());
  for (const auto& m : draw.masked) {
    rows.push_back(out.row(m.sequence, m.position));
    targets.push_back(m.original);
  }
  auto logits = model.mtp_logits(compute::gather_rows(out.hidden, rows));
  auto summed = compute::cross_entropy(logits, targets, compute::Reduction::Sum);
  result.loss = compute::scale(summed, 1.0 / static_cast<double>(result.batch_size));
  return result;
}

MtpResult mtp_loss(const MftModel& model, std::span<const AssembledSequence> batch, util::Rng& rng) {
  return mtp_loss_on(model, draw_mask(batch, model.config().mask_ratio, rng));
}

FaDraw draw_field_alignment(std::span<const corpus::NewsArticle> batch, double negative_ratio, util::Rng& rng) {
  const auto n = batch.size();
  if (n < 2) throw ShapeError("fa_loss: batch size must be >= 2 to source replacement fields");
  const bool all_identical = std::all_of(batch.begin() + 1, batch.end(),
                                         [&](const corpus::NewsArticle& a) { return a.same_content(batch[0]); });
  if (all_identical) throw ShapeError("fa_loss: every article in the batch has identical content");

  FaDraw draw;
  draw.articles.assign(batch.begin(), batch.end());
  draw.labels.assign(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(util::uniform01(rng) < negative_ratio)) continue;
    bool swapped = false;
    for (int attempt = 0; attempt < kFaResampleAttempts && !swapped; ++attempt) {
      const auto field = kFields[util::uniform_index(rng, 3)];
      auto source = util::uniform_index(rng, n - 1);
      if (source >= i) ++source;  // never the target itself
      const auto& replacement = batch[source].field(field);
      if (replacement == batch[i].field(field)) continue;
      draw.articles[i].field(field) = replacement;
      draw.labels[i] = 0;
      swapped = true;
    }
    if (!swapped) ++draw.relabeled_positive;
  }
  return draw;
}

FaResult fa_loss_on(const MftModel& model, const FaDraw& draw) {
  const auto n = draw.articles.size();
  std::vector<AssembledSequence> seqs;
  seqs.reserve(n);
  for (const auto& a : draw.articles) seqs.push_back(assemble(a, model.config()));
  auto out = model.trunk(seqs);
  std::vector<std::size_t> cls_rows(n);
  std::vector<std::size_t> targets(n);
  for (std::size_t i = 0; i < n; ++i) {
    cls_rows[i] = out.row(i, 0);
    targets[i] = static_cast<std::size_t>(draw.labels[i]);
  }
  auto logits = model.fa_logits(compute::gather_rows(out.hidden, cls_rows));
  FaResult result;
  result.loss = compute::cross_entropy(logits, targets, compute::Reduction::Mean);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const int pred = logits.at(2 * i + 1) > logits.at(2 * i) ? 1 : 0;
    correct += pred == draw.labels[i];
    result.negatives += draw.labels[i] == 0;
  }
  result.accuracy = static_cast<double>(correct) / static_cast<double>(n);
  return result;
}

FaResult fa_loss(const MftModel& model, std::span<const corpus::NewsArticle> batch, util::Rng& rng) {
  return fa_loss_on(model, draw_field_alignment(batch, model.config().fa_negative_ratio, rng));
}

PretrainLosses pretrain_losses(const MftModel& model, std::span<const corpus::NewsArticle> batch, util::Rng& rng) {
  std::vector<AssembledSequence> seqs;
  seqs.reserve(batch.size());
  for (const auto& a : batch) seqs.push_back(assemble(a, model.config()));
  PretrainLosses out;
  out.mtp = mtp_loss(model, seqs, rng);
  out.fa = fa_loss(model, batch, rng);
  out.total = compute::add(out.mtp.loss, out.fa.loss);
  return out;
}

}  // namespace oleo::mft
