// SPDX-License-Identifier: Apache-2.0
//
// Per-impression ranking metrics. AUC is on the 0..100 scale; MRR and nDCG lie
// in [0, 1]. Ranking order is descending score with ties kept in original
// candidate order.
#pragma once

#include <span>
#include <vector>

#include "oleo/error.hpp"

namespace oleo::evalgreen {

// An impression whose labels are all 0 or all 1 has no defined AUC.
class SingleClassError : public Error {
 public:
  using Error::Error;
};

double auc(std::span<const double> scores, std::span<const int> labels);
double mrr(std::span<const double> scores, std::span<const int> labels);
double ndcg_at_k(std::span<const double> scores, std::span<const int> labels, std::size_t k = 5);

struct ImpressionScores {
  std::vector<double> scores;
  std::vector<int> labels;
};

struct MetricsReport {
  double auc = 0.0;
  double mrr = 0.0;
  double ndcg5 = 0.0;
  std::size_t impression_count = 0;      // impressions that entered the means
  std::size_t skipped_single_class = 0;  // excluded impressions
};

// Means over impressions; single-class impressions are excluded and counted.
MetricsReport evaluate(std::span<const ImpressionScores> impressions);

}  // namespace oleo::evalgreen
