// SPDX-License-Identifier: Apache-2.0
//
// Definitional metric evaluations used as test oracles: O(P*N) pair counting for
// AUC and explicit rank lists for MRR / nDCG.
#pragma once

#include <cmath>
#include <vector>

namespace oleo::oracle {

inline double auc_pairs(const std::vector<double>& s, const std::vector<int>& l) {
  double wins = 0;
  double pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (l[i] != 1) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (l[j] != 0) continue;
      pairs += 1;
      if (s[i] > s[j]) wins += 1;
      if (s[i] == s[j]) wins += 0.5;
    }
  }
  return 100.0 * wins / pairs;
}

// 1-based rank of item i: items with a higher score, or an equal score and a
// smaller index, come first.
inline std::size_t rank_of(const std::vector<double>& s, std::size_t i) {
  std::size_t r = 1;
  for (std::size_t j = 0; j < s.size(); ++j) {
    if (s[j] > s[i] || (s[j] == s[i] && j < i)) ++r;
  }
  return r;
}

inline double mrr_direct(const std::vector<double>& s, const std::vector<int>& l) {
  // accumulate in rank order so the floating-point sum matches a ranked scan
  std::vector<double> rr(s.size() + 1, 0.0);
  double pos = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (l[i] == 1) {
      rr[rank_of(s, i)] = 1.0 / static_cast<double>(rank_of(s, i));
      pos += 1;
    }
  }
  double sum = 0;
  for (double v : rr) sum += v;
  return sum / pos;
}

inline double ndcg_direct(const std::vector<double>& s, const std::vector<int>& l, std::size_t k) {
  std::vector<double> gain_at(s.size() + 1, 0.0);
  std::size_t pos = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (l[i] == 1) {
      gain_at[rank_of(s, i)] = 1.0;
      ++pos;
    }
  }
  double dcg = 0, idcg = 0;
  for (std::size_t r = 1; r <= k && r <= s.size(); ++r) {
    dcg += gain_at[r] / std::log2(static_cast<double>(r) + 1.0);
    if (r <= pos) idcg += 1.0 / std::log2(static_cast<double>(r) + 1.0);
  }
  return dcg / idcg;
}

}  // namespace oleo::oracle
