#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "lpo/denoiser.hpp"
#include "lpo/math.hpp"
#include "lpo/rng.hpp"
#include "lpo/schedule.hpp"

namespace lpo {

struct DataPoint {
  std::vector<double> x0;
  int condition_id = -1;
};

struct DmLossResult {
  double loss = 0.0;
  std::vector<double> grad;  // d(loss)/d(params)
};

// Denoising loss: mean over the batch of omega(lambda_t) ||eps - eps_pred||^2
// with t ~ U{1..T} and eps ~ N(0, I) drawn per element.
inline DmLossResult dm_loss(const Denoiser& denoiser,
                            const std::vector<DataPoint>& batch,
                            const NoiseSchedule& sched, Rng& rng) {
  if (batch.empty()) {
    throw std::invalid_argument("dm_loss: empty batch");
  }
  const std::size_t dim = static_cast<std::size_t>(denoiser.arch().data_dim);
  DmLossResult out;
  out.grad.assign(denoiser.params().size(), 0.0);

  std::vector<double> eps(dim), d_out(dim);
  Denoiser::Trace trace;
  for (const DataPoint& point : batch) {
    const int t = 1 + static_cast<int>(rng.below(
                          static_cast<std::uint64_t>(sched.T)));
    for (auto& e : eps) e = rng.normal();
    const std::vector<double> xt = forward_noise(point.x0, t, eps, sched);
    const std::vector<double> pred =
        denoiser.forward(xt, t, point.condition_id, &trace);
    const double w = sched.omega(t);
    double sq = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      const double diff = eps[i] - pred[i];
      sq += diff * diff;
      d_out[i] = 2.0 * w * (pred[i] - eps[i]);
    }
    out.loss += w * sq;
    denoiser.backward(trace, d_out, out.grad);
  }
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  out.loss *= inv_n;
  for (auto& g : out.grad) g *= inv_n;
  return out;
}

// Standard DDPM ancestral sampler with epsilon-prediction posterior mean and
// sigma_t^2 = beta_t. Deterministic given the generator state.
inline std::vector<std::vector<double>> ancestral_sample(
    const Denoiser& denoiser, const NoiseSchedule& sched, std::size_t n,
    Rng& rng, int condition_id = -1) {
  const std::size_t dim = static_cast<std::size_t>(denoiser.arch().data_dim);
  std::vector<std::vector<double>> samples(n);
  for (auto& x : samples) {
    x.resize(dim);
    for (auto& v : x) v = rng.normal();
    for (int t = sched.T; t >= 1; --t) {
      const std::vector<double> pred = denoiser.forward(x, t, condition_id);
      const double alpha = sched.alpha(t);
      const double alpha_bar = sched.alpha_bar(t);
      const double coef = sched.beta(t) / std::sqrt(1.0 - alpha_bar);
      const double inv_sqrt_alpha = 1.0 / std::sqrt(alpha);
      const double sigma = std::sqrt(sched.beta(t));
      for (std::size_t i = 0; i < dim; ++i) {
        double mean = inv_sqrt_alpha * (x[i] - coef * pred[i]);
        x[i] = t > 1 ? mean + sigma * rng.normal() : mean;
      }
    }
  }
  return samples;
}

}  // namespace lpo
