#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "lpo/math.hpp"
#include "lpo/plackett_luce.hpp"
#include "lpo/schedule.hpp"

namespace lpo {

// Scale applied to every per-element reward term: beta * T * omega(lambda_t).
// omega_by_step is taken from the schedule (all ones in constant mode), so
// the product stays a single positive scalar per step.
struct AlignmentConfig {
  double beta = 1.0;
  int T = 1;
  std::vector<double> omega_by_step;  // empty = all ones

  double beta_eff(int t) const {
    double w = 1.0;
    if (!omega_by_step.empty()) {
      if (t < 1 || t > static_cast<int>(omega_by_step.size())) {
        throw std::invalid_argument("AlignmentConfig: step out of range");
      }
      w = omega_by_step[static_cast<std::size_t>(t - 1)];
    }
    const double b = beta * static_cast<double>(T) * w;
    if (!(b > 0.0) || !std::isfinite(b)) {
      throw std::invalid_argument("AlignmentConfig: beta_eff not positive");
    }
    return b;
  }

  // Desk-scale convenience: a constant effective scale, independent of t.
  static AlignmentConfig constant(double beta_eff_value) {
    AlignmentConfig cfg;
    cfg.beta = beta_eff_value;
    cfg.T = 1;
    return cfg;
  }

  static AlignmentConfig from_schedule(double beta,
                                       const NoiseSchedule& sched) {
    AlignmentConfig cfg;
    cfg.beta = beta;
    cfg.T = sched.T;
    cfg.omega_by_step.reserve(static_cast<std::size_t>(sched.T));
    for (int t = 1; t <= sched.T; ++t) {
      cfg.omega_by_step.push_back(sched.omega(t));
    }
    return cfg;
  }
};

// Per-element implicit-reward terms for one ranked list, most preferred
// first, all sharing one diffusion step.
struct DeltaScores {
  std::vector<double> deltas;
  int t = 1;
  std::vector<std::vector<double>> per_element_eps;  // optional bookkeeping

  std::size_t size() const { return deltas.size(); }
};

struct LossOutput {
  double value = 0.0;
  std::vector<double> grad_wrt_deltas;
};

// Implicit reward of one element: the fine-tuned model's denoising
// improvement over the reference, -(||eps - eps_theta||^2 - ||eps - eps_ref||^2).
inline double delta(std::span<const double> eps,
                    std::span<const double> eps_theta_pred,
                    std::span<const double> eps_ref_pred) {
  return -(squared_distance(eps, eps_theta_pred) -
           squared_distance(eps, eps_ref_pred));
}

// Pairwise objective: -log sigmoid(beta_eff (delta_win - delta_lose)).
inline LossOutput diffusion_dpo_loss(double delta_win, double delta_lose,
                                     const AlignmentConfig& cfg, int t = 1) {
  if (!std::isfinite(delta_win) || !std::isfinite(delta_lose)) {
    throw std::invalid_argument("diffusion_dpo_loss: non-finite delta");
  }
  const double b = cfg.beta_eff(t);
  const double z = b * (delta_win - delta_lose);
  LossOutput out;
  out.value = -log_sigmoid(z);
  const double slope = sigmoid(-z);  // 1 - sigmoid(z)
  out.grad_wrt_deltas = {-b * slope, b * slope};
  return out;
}

// Listwise objective: negated Plackett-Luce log-likelihood of the scaled
// delta vector, -sum_j [b d_j - log sum_{k>=j} exp(b d_k)].
inline LossOutput diffusion_lpo_loss(const DeltaScores& d,
                                     const AlignmentConfig& cfg) {
  if (d.size() < 1) {
    throw std::invalid_argument("diffusion_lpo_loss: empty list");
  }
  const double b = cfg.beta_eff(d.t);
  ScoreVector scores;
  scores.scores.reserve(d.size());
  for (const double dv : d.deltas) scores.scores.push_back(b * dv);
  const PlResult pl = pl_log_prob(scores);
  LossOutput out;
  out.value = -pl.log_prob;
  out.grad_wrt_deltas.resize(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    out.grad_wrt_deltas[i] = -b * pl.gradient[i];
  }
  return out;
}

// Naive listwise extension: the pairwise objective summed over all
// m(m-1)/2 ordered pairs with equal weight.
inline LossOutput gp_dpo_loss(const DeltaScores& d,
                              const AlignmentConfig& cfg) {
  const std::size_t m = d.size();
  if (m < 2) {
    throw std::invalid_argument("gp_dpo_loss: need at least two elements");
  }
  const double b = cfg.beta_eff(d.t);
  LossOutput out;
  out.grad_wrt_deltas.assign(m, 0.0);
  for (std::size_t j = 0; j + 1 < m; ++j) {
    for (std::size_t k = j + 1; k < m; ++k) {
      const double z = b * (d.deltas[j] - d.deltas[k]);
      out.value += -log_sigmoid(z);
      const double slope = sigmoid(-z);
      out.grad_wrt_deltas[j] += -b * slope;
      out.grad_wrt_deltas[k] += b * slope;
    }
  }
  return out;
}

// Rank-coefficient group loss: sum_j (m - 2j + 1) s_j with s_j = -delta_j
// (s is the un-negated squared-error difference), scaled by beta_eff.
inline LossOutput gpo_rank_loss(const DeltaScores& d,
                                const AlignmentConfig& cfg) {
  const std::size_t m = d.size();
  if (m < 2) {
    throw std::invalid_argument("gpo_rank_loss: need at least two elements");
  }
  const double b = cfg.beta_eff(d.t);
  LossOutput out;
  out.grad_wrt_deltas.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    const double coef =
        static_cast<double>(m) - 2.0 * static_cast<double>(j + 1) + 1.0;
    out.value += b * coef * (-d.deltas[j]);
    out.grad_wrt_deltas[j] = -b * coef;
  }
  return out;
}

struct DspoOutput {
  double value = 0.0;
  std::vector<double> grad_wrt_deltas;
  // d(value)/d(eps_theta) of the score-matched element with the gate held
  // fixed; the delta-path contribution is in grad_wrt_deltas.
  std::vector<double> grad_eps_theta_direct;
};

// Score-matching preference loss: A(t) ||(eps_theta - eps) -
// lambda_gamma (1 - sigmoid(r_self - r_other)) (eps_theta - eps_ref)||^2,
// with r = beta_eff * delta and A(t) = 1.
inline DspoOutput dspo_loss(std::span<const double> eps,
                            std::span<const double> eps_theta,
                            std::span<const double> eps_ref,
                            double delta_self, double delta_other,
                            const AlignmentConfig& cfg, double lambda_gamma,
                            int t = 1) {
  if (eps.size() != eps_theta.size() || eps.size() != eps_ref.size()) {
    throw std::invalid_argument("dspo_loss: dimension mismatch");
  }
  const double b = cfg.beta_eff(t);
  const double gate = sigmoid(b * (delta_self - delta_other));
  const double w = lambda_gamma * (1.0 - gate);

  DspoOutput out;
  out.grad_eps_theta_direct.resize(eps.size());
  double dot_r_dref = 0.0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const double dref = eps_theta[i] - eps_ref[i];
    const double r = (eps_theta[i] - eps[i]) - w * dref;
    out.value += r * r;
    out.grad_eps_theta_direct[i] = 2.0 * (1.0 - w) * r;
    dot_r_dref += r * dref;
  }
  // gate path: dw/d(delta_self) = -lambda_gamma b gate (1 - gate)
  const double g_self = 2.0 * lambda_gamma * b * gate * (1.0 - gate) *
                        dot_r_dref;
  out.grad_wrt_deltas = {g_self, -g_self};
  return out;
}

// Listwise variant: the sigmoid gate becomes the softmax weight of the
// top-ranked element over the whole list, and that element is the
// score-matching target.
inline DspoOutput dspo_lpo_loss(
    const std::vector<std::vector<double>>& eps,
    const std::vector<std::vector<double>>& eps_theta,
    const std::vector<std::vector<double>>& eps_ref, const DeltaScores& d,
    const AlignmentConfig& cfg, double lambda_gamma) {
  const std::size_t m = d.size();
  if (m < 2) {
    throw std::invalid_argument("dspo_lpo_loss: need at least two elements");
  }
  if (eps.size() != m || eps_theta.size() != m || eps_ref.size() != m) {
    throw std::invalid_argument("dspo_lpo_loss: list size mismatch");
  }
  const double b = cfg.beta_eff(d.t);

  // softmax over scaled deltas; weight of the top-ranked element
  std::vector<double> scores(m);
  for (std::size_t i = 0; i < m; ++i) scores[i] = b * d.deltas[i];
  const double max_score = *std::max_element(scores.begin(), scores.end());
  double denom = 0.0;
  for (const double s : scores) denom += std::exp(s - max_score);
  std::vector<double> softmax(m);
  for (std::size_t i = 0; i < m; ++i) {
    softmax[i] = std::exp(scores[i] - max_score) / denom;
  }
  const double w_top = softmax[0];
  const double w = lambda_gamma * (1.0 - w_top);

  DspoOutput out;
  const std::size_t dim = eps[0].size();
  out.grad_eps_theta_direct.resize(dim);
  double dot_r_dref = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    const double dref = eps_theta[0][i] - eps_ref[0][i];
    const double r = (eps_theta[0][i] - eps[0][i]) - w * dref;
    out.value += r * r;
    out.grad_eps_theta_direct[i] = 2.0 * (1.0 - w) * r;
    dot_r_dref += r * dref;
  }
  // d(w_top)/d(delta_k) = b w_top (1{k=0} - softmax_k)
  out.grad_wrt_deltas.resize(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double dw_top = b * w_top * ((k == 0 ? 1.0 : 0.0) - softmax[k]);
    out.grad_wrt_deltas[k] = 2.0 * lambda_gamma * dot_r_dref * dw_top;
  }
  return out;
}

// Aggregate reward the listwise objective assigns to the negative suffix
// {j..m}: log sum_{k>=j} s_k^beta. Positions are 1-based.
inline double lpo_negative_aggregate(std::span<const double> s, std::size_t j,
                                     double beta) {
  const std::size_t m = s.size();
  if (j < 1 || j > m) {
    throw std::invalid_argument("lpo_negative_aggregate: bad position");
  }
  std::vector<double> logs;
  logs.reserve(m - j + 1);
  for (std::size_t k = j - 1; k < m; ++k) {
    if (!(s[k] > 0.0)) {
      throw std::invalid_argument("lpo_negative_aggregate: scores must be positive");
    }
    logs.push_back(beta * std::log(s[k]));
  }
  return suffix_logsumexp(logs).front();
}

// The pairwise counterpart: the mean of per-pair log(s_j^beta + s_k^beta)
// terms over the negatives, normalized by the suffix size m - j + 1.
inline double gpdpo_negative_aggregate(std::span<const double> s,
                                       std::size_t j, double beta) {
  const std::size_t m = s.size();
  if (j < 1 || j >= m) {
    throw std::invalid_argument(
        "gpdpo_negative_aggregate: need a non-empty negative set");
  }
  for (const double v : s) {
    if (!(v > 0.0)) {
      throw std::invalid_argument(
          "gpdpo_negative_aggregate: scores must be positive");
    }
  }
  const double log_sj = beta * std::log(s[j - 1]);
  double sum = 0.0;
  for (std::size_t k = j; k < m; ++k) {
    const double log_sk = beta * std::log(s[k]);
    const double hi = std::max(log_sj, log_sk);
    const double lo = std::min(log_sj, log_sk);
    sum += hi + std::log1p(std::exp(lo - hi));
  }
  return sum / static_cast<double>(m - j + 1);
}

}  // namespace lpo
