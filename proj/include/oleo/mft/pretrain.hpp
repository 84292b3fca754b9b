// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "oleo/compute/optim.hpp"
#include "oleo/corpus/news.hpp"
#include "oleo/mft/model.hpp"

namespace oleo::mft {

struct PretrainConfig {
  std::size_t epochs = 1;
  std::size_t batch_size = 64;
  double validation_fraction = 0.2;
  compute::AdamConfig adam{};
  std::uint64_t seed = 0;
};

struct EpochStats {
  std::size_t epoch = 0;
  std::size_t article_visits = 0;  // train articles processed this epoch
  std::size_t steps = 0;
  double train_loss = 0.0;  // batch mean of L_MTP + L_FA
  double train_mtp = 0.0;
  double train_fa = 0.0;
  double train_fa_accuracy = 0.0;
  double val_loss = 0.0;  // fixed-seed draws, comparable across epochs; 0 when no validation split
  double val_mtp = 0.0;
  double val_fa = 0.0;
  double seconds = 0.0;
};

struct PretrainReport {
  std::vector<EpochStats> history;
  std::size_t train_size = 0;
  std::size_t validation_size = 0;
};

// Seeded 80/20 (by default) split into (train, validation) article indices.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_train_validation(std::size_t count,
                                                                                     double validation_fraction,
                                                                                     std::uint64_t seed);

// Minimises L_MTP + L_FA with Adam; every training article is visited exactly once
// per epoch in a freshly shuffled order. On a non-finite loss or gradient the model
// is restored to the parameters at the end of the last completed epoch and
// DivergenceError is thrown.
PretrainReport pretrain(MftModel& model, std::span<const corpus::NewsArticle> articles, const PretrainConfig& cfg,
                        const std::function<void(const EpochStats&)>& on_epoch = {});

}  // namespace oleo::mft
