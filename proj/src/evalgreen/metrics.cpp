// SPDX-License-Identifier: Apache-2.0
#include "oleo/evalgreen/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace oleo::evalgreen {

namespace {

void check(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw ShapeError("metrics: " + std::to_string(scores.size()) + " scores for " + std::to_string(labels.size()) +
                     " labels");
  }
  std::size_t pos = 0;
  for (int l : labels) {
    if (l != 0 && l != 1) throw FormatError("metrics: labels must be 0 or 1");
    pos += l;
  }
  if (pos == 0 || pos == labels.size()) throw SingleClassError("metrics: impression needs a positive and a negative");
}

std::vector<std::size_t> descending_order(std::span<const double> scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return idx;
}

}  // namespace

double auc(std::span<const double> scores, std::span<const int> labels) {
  check(scores, labels);
  // Mann-Whitney U with mid-ranks for ties
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k) {
      if (labels[idx[k]] == 1) {
        rank_sum += mid;
        ++pos;
      }
    }
    i = j;
  }
  const double p = static_cast<double>(pos);
  const double n = static_cast<double>(scores.size() - pos);
  return 100.0 * (rank_sum - p * (p + 1.0) / 2.0) / (p * n);
}

double mrr(std::span<const double> scores, std::span<const int> labels) {
  check(scores, labels);
  const auto order = descending_order(scores);
  double sum = 0.0;
  std::size_t pos = 0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (labels[order[r]] == 1) {
      sum += 1.0 / static_cast<double>(r + 1);
      ++pos;
    }
  }
  return sum / static_cast<double>(pos);
}

double ndcg_at_k(std::span<const double> scores, std::span<const int> labels, std::size_t k) {
  check(scores, labels);
  const auto order = descending_order(scores);
  const std::size_t pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  double dcg = 0.0, idcg = 0.0;
  for (std::size_t r = 0; r < std::min(k, order.size()); ++r) {
    const double discount = 1.0 / std::log2(static_cast<double>(r + 2));
    if (labels[order[r]] == 1) dcg += discount;
    if (r < pos) idcg += discount;
  }
  return dcg / idcg;
}

MetricsReport evaluate(std::span<const ImpressionScores> impressions) {
  MetricsReport rep;
  for (const auto& imp : impressions) {
    try {
      const double a = auc(imp.scores, imp.labels);
      rep.auc += a;
      rep.mrr += mrr(imp.scores, imp.labels);
      rep.ndcg5 += ndcg_at_k(imp.scores, imp.labels, 5);
      ++rep.impression_count;
    } catch (const SingleClassError&) {
      ++rep.skipped_single_class;
    }
  }
  if (rep.impression_count > 0) {
    const double n = static_cast<double>(rep.impression_count);
    rep.auc /= n;
    rep.mrr /= n;
    rep.ndcg5 /= n;
  }
  return rep;
}

}  // namespace oleo::evalgreen
