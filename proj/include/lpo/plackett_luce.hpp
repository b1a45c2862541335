#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "lpo/math.hpp"

namespace lpo {

// Scores indexed by rank position: index 0 is the most preferred item.
struct ScoreVector {
  std::vector<double> scores;

  std::size_t size() const { return scores.size(); }
};

struct PlResult {
  double log_prob = 0.0;
  // stage_terms[j] = s_j - log sum_{k >= j} exp(s_k); the last one is 0
  std::vector<double> stage_terms;
  std::vector<double> gradient;  // d log_prob / d s_j
};

// Log-probability that the ranking 0 > 1 > ... > m-1 is produced by a
// Plackett-Luce model with the given latent scores, i.e. the product of
// softmax terms over every suffix sublist. Gradient is returned alongside
// because the suffix sums are shared between the two computations.
inline PlResult pl_log_prob(const ScoreVector& s) {
  const std::size_t m = s.size();
  if (m == 0) {
    throw std::invalid_argument("pl_log_prob: empty score vector");
  }
  if (!all_finite(s.scores)) {
    throw std::invalid_argument("pl_log_prob: non-finite score");
  }

  const std::vector<double> lse = suffix_logsumexp(s.scores);

  PlResult out;
  out.stage_terms.resize(m);
  out.gradient.assign(m, 1.0);
  for (std::size_t j = 0; j < m; ++j) {
    out.stage_terms[j] = s.scores[j] - lse[j];
    out.log_prob += out.stage_terms[j];
  }
  // grad_i = 1 - sum_{j <= i} exp(s_i - lse_j)
  for (std::size_t i = 0; i < m; ++i) {
    double occupancy = 0.0;
    for (std::size_t j = 0; j <= i; ++j) {
      occupancy += std::exp(s.scores[i] - lse[j]);
    }
    out.gradient[i] = 1.0 - occupancy;
  }
  return out;
}

// Bradley-Terry log-likelihood of a single win; coincides with pl_log_prob
// on the two-element score vector (r_win, r_lose).
inline double bt_log_prob(double r_win, double r_lose) {
  if (!std::isfinite(r_win) || !std::isfinite(r_lose)) {
    throw std::invalid_argument("bt_log_prob: non-finite input");
  }
  return log_sigmoid(r_win - r_lose);
}

// Probability of observing `ranking` (a permutation of score indices, most
// preferred first) under the stagewise product definition. Test oracle;
// callers enumerate all m! permutations, so m is capped at 8.
inline double pl_brute_force_prob(const ScoreVector& s,
                                  std::span<const std::size_t> ranking) {
  const std::size_t m = s.size();
  if (m > 8) {
    throw std::invalid_argument("pl_brute_force_prob: m > 8");
  }
  if (ranking.size() != m) {
    throw std::invalid_argument("pl_brute_force_prob: ranking size mismatch");
  }
  std::vector<bool> seen(m, false);
  for (const std::size_t idx : ranking) {
    if (idx >= m || seen[idx]) {
      throw std::invalid_argument("pl_brute_force_prob: not a permutation");
    }
    seen[idx] = true;
  }

  double prob = 1.0;
  for (std::size_t j = 0; j < m; ++j) {
    double stage_max = s.scores[ranking[j]];
    for (std::size_t k = j; k < m; ++k) {
      stage_max = std::max(stage_max, s.scores[ranking[k]]);
    }
    double denom = 0.0;
    for (std::size_t k = j; k < m; ++k) {
      denom += std::exp(s.scores[ranking[k]] - stage_max);
    }
    prob *= std::exp(s.scores[ranking[j]] - stage_max) / denom;
  }
  return prob;
}

}  // namespace lpo
