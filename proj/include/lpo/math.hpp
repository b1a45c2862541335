#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace lpo {

inline double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(sigmoid(x)) = -softplus(-x), stable on both tails
inline double log_sigmoid(double x) {
  if (x >= 0.0) {
    return -std::log1p(std::exp(-x));
  }
  return x - std::log1p(std::exp(x));
}

// lse[j] = log sum_{k >= j} exp(s[k]), with suffix-max subtraction so that
// scores scaled by large beta values do not overflow.
inline std::vector<double> suffix_logsumexp(std::span<const double> scores) {
  const std::size_t m = scores.size();
  std::vector<double> lse(m);
  double suffix_max = -std::numeric_limits<double>::infinity();
  // running sum of exp(s_k - suffix_max) for k >= j
  double sum = 0.0;
  for (std::size_t idx = m; idx-- > 0;) {
    const double s = scores[idx];
    if (s > suffix_max) {
      // rescale the accumulated sum to the new max
      sum = sum * std::exp(suffix_max - s) + 1.0;
      suffix_max = s;
    } else {
      sum += std::exp(s - suffix_max);
    }
    lse[idx] = suffix_max + std::log(sum);
  }
  return lse;
}

inline double squared_distance(std::span<const double> a,
                               std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("squared_distance: dimension mismatch");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

inline bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(),
                     [](double x) { return std::isfinite(x); });
}

}  // namespace lpo
