#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace lpo {

enum class OmegaMode { Constant, SnrWeighted };

// Forward-process schedule. alpha_bar is the marginal signal coefficient
// squared: x_t = sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps, and
// lambda_t = log(alpha_bar_t / (1 - alpha_bar_t)) is the log
// signal-to-noise ratio, strictly decreasing in t.
struct NoiseSchedule {
  int T = 0;
  std::vector<double> betas;
  std::vector<double> alphas;
  std::vector<double> alpha_bars;
  std::vector<double> lambdas;
  OmegaMode omega_mode = OmegaMode::Constant;

  // 1-based step accessors, matching the usual t = 1..T indexing
  double beta(int t) const { return betas.at(static_cast<std::size_t>(t - 1)); }
  double alpha(int t) const {
    return alphas.at(static_cast<std::size_t>(t - 1));
  }
  double alpha_bar(int t) const {
    return alpha_bars.at(static_cast<std::size_t>(t - 1));
  }
  double lambda(int t) const {
    return lambdas.at(static_cast<std::size_t>(t - 1));
  }
  double omega(int t) const {
    return omega_mode == OmegaMode::Constant ? 1.0 : std::exp(lambda(t));
  }
};

inline NoiseSchedule make_linear_schedule(int T, double beta_start,
                                          double beta_end,
                                          OmegaMode omega_mode =
                                              OmegaMode::Constant) {
  if (T < 1) {
    throw std::invalid_argument("make_linear_schedule: T < 1");
  }
  if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0)) {
    throw std::invalid_argument(
        "make_linear_schedule: need 0 < beta_start <= beta_end < 1");
  }
  NoiseSchedule sched;
  sched.T = T;
  sched.omega_mode = omega_mode;
  sched.betas.resize(static_cast<std::size_t>(T));
  if (T == 1) {
    sched.betas[0] = beta_start;
  } else {
    for (int i = 0; i < T; ++i) {
      sched.betas[static_cast<std::size_t>(i)] =
          beta_start + (beta_end - beta_start) * i / (T - 1);
    }
  }
  double running = 1.0;
  for (const double beta : sched.betas) {
    const double alpha = 1.0 - beta;
    running *= alpha;
    sched.alphas.push_back(alpha);
    sched.alpha_bars.push_back(running);
    sched.lambdas.push_back(std::log(running / (1.0 - running)));
  }
  return sched;
}

// x_t = sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps
inline std::vector<double> forward_noise(std::span<const double> x0, int t,
                                         std::span<const double> eps,
                                         const NoiseSchedule& sched) {
  if (x0.size() != eps.size()) {
    throw std::invalid_argument("forward_noise: dimension mismatch");
  }
  if (t < 1 || t > sched.T) {
    throw std::invalid_argument("forward_noise: step out of range");
  }
  const double signal = std::sqrt(sched.alpha_bar(t));
  const double noise = std::sqrt(1.0 - sched.alpha_bar(t));
  std::vector<double> xt(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) {
    xt[i] = signal * x0[i] + noise * eps[i];
  }
  return xt;
}

}  // namespace lpo
