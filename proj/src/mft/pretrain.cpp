// SPDX-License-Identifier: Apache-2.0
#include "oleo/mft/pretrain.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

#include "oleo/compute/tensor.hpp"
#include "oleo/error.hpp"
#include "oleo/mft/tasks.hpp"
#include "oleo/util/rng.hpp"

namespace oleo::mft {

namespace {

// Batches over `order`; a trailing singleton joins the previous batch since FA needs >= 2 articles.
std::vector<std::vector<corpus::NewsArticle>> make_batches(std::span<const corpus::NewsArticle> articles,
                                                           const std::vector<std::size_t>& order,
                                                           std::size_t batch_size) {
  std::vector<std::vector<corpus::NewsArticle>> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    std::vector<corpus::NewsArticle> b;
    for (std::size_t i = start; i < std::min(order.size(), start + batch_size); ++i) b.push_back(articles[order[i]]);
    if (b.size() == 1 && !batches.empty()) {
      batches.back().push_back(std::move(b.front()));
    } else {
      batches.push_back(std::move(b));
    }
  }
  return batches;
}

}  // namespace

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_train_validation(std::size_t count,
                                                                                     double validation_fraction,
                                                                                     std::uint64_t seed) {
  if (validation_fraction < 0.0 || validation_fraction >= 1.0) {
    throw ConfigError("pretrain: validation_fraction must lie in [0, 1)");
  }
  std::vector<std::size_t> idx(count);
  std::iota(idx.begin(), idx.end(), 0);
  util::Rng rng(util::mix_seed(seed, 0x5EED));
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto n_val = static_cast<std::size_t>(static_cast<double>(count) * validation_fraction);
  std::vector<std::size_t> val(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> train(idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
  return {train, val};
}

PretrainReport pretrain(MftModel& model, std::span<const corpus::NewsArticle> articles, const PretrainConfig& cfg,
                        const std::function<void(const EpochStats&)>& on_epoch) {
  if (articles.empty()) throw ConfigError("pretrain: corpus is empty");
  if (cfg.batch_size < 2) throw ConfigError("pretrain: batch_size must be >= 2");
  auto [train_idx, val_idx] = split_train_validation(articles.size(), cfg.validation_fraction, cfg.seed);
  if (train_idx.size() < 2) throw ConfigError("pretrain: training split needs at least 2 articles");
  if (val_idx.size() == 1) {
    train_idx.push_back(val_idx.front());
    val_idx.clear();
  }

  PretrainReport report;
  report.train_size = train_idx.size();
  report.validation_size = val_idx.size();
  compute::Adam adam(cfg.adam);
  util::Rng shuffle_rng(util::mix_seed(cfg.seed, 1));
  auto last_good = model.params().snapshot();

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    EpochStats stats;
    stats.epoch = epoch;
    auto order = train_idx;
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    const auto batches = make_batches(articles, order, cfg.batch_size);
    try {
      for (std::size_t b = 0; b < batches.size(); ++b) {
        util::Rng rng(util::mix_seed(cfg.seed, (epoch + 1) * 1'000'003ULL + b));
        model.params().zero_grad();
        auto losses = pretrain_losses(model, batches[b], rng);
        compute::backward(losses.total);
        adam.step(model.params());
        stats.article_visits += batches[b].size();
        ++stats.steps;
        stats.train_loss += losses.total.item();
        stats.train_mtp += losses.mtp.loss.item();
        stats.train_fa += losses.fa.loss.item();
        stats.train_fa_accuracy += losses.fa.accuracy;
      }
    } catch (const NonFiniteError& e) {
      model.params().restore(last_good);
      model.params().zero_grad();
      throw DivergenceError(std::string("pretrain diverged in epoch ") + std::to_string(epoch) + ": " + e.what());
    }
    const double steps = static_cast<double>(std::max<std::size_t>(stats.steps, 1));
    stats.train_loss /= steps;
    stats.train_mtp /= steps;
    stats.train_fa /= steps;
    stats.train_fa_accuracy /= steps;

    if (val_idx.size() >= 2) {
      compute::NoGradGuard no_grad;
      const auto val_batches = make_batches(articles, val_idx, cfg.batch_size);
      for (std::size_t b = 0; b < val_batches.size(); ++b) {
        util::Rng rng(util::mix_seed(cfg.seed, 0xA11DA7E + b));
        auto losses = pretrain_losses(model, val_batches[b], rng);
        stats.val_loss += losses.total.item();
        stats.val_mtp += losses.mtp.loss.item();
        stats.val_fa += losses.fa.loss.item();
      }
      const double vb = static_cast<double>(val_batches.size());
      stats.val_loss /= vb;
      stats.val_mtp /= vb;
      stats.val_fa /= vb;
    }
    model.params().zero_grad();
    last_good = model.params().snapshot();
    stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.history.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  return report;
}

}  // namespace oleo::mft
