#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lpo/denoiser.hpp"
#include "lpo/diffusion.hpp"
#include "lpo/losses.hpp"
#include "lpo/rng.hpp"
#include "lpo/schedule.hpp"
#include "lpo/synthetic.hpp"

namespace lpo {

enum class LossKind { Lpo, DpoAdjacentPairs, GpDpo, GpoRank, Dspo, DspoLpo };

inline LossKind parse_loss_kind(const std::string& name) {
  static const std::map<std::string, LossKind> table{
      {"lpo", LossKind::Lpo},
      {"dpo", LossKind::DpoAdjacentPairs},
      {"dpo-adjacent-pairs", LossKind::DpoAdjacentPairs},
      {"gp-dpo", LossKind::GpDpo},
      {"gpo", LossKind::GpoRank},
      {"gpo-rank", LossKind::GpoRank},
      {"dspo", LossKind::Dspo},
      {"dspo-lpo", LossKind::DspoLpo},
  };
  const auto it = table.find(name);
  if (it == table.end()) {
    throw std::invalid_argument("unknown loss selector '" + name + "'");
  }
  return it->second;
}

inline std::string loss_kind_name(LossKind kind) {
  switch (kind) {
    case LossKind::Lpo: return "lpo";
    case LossKind::DpoAdjacentPairs: return "dpo-adjacent-pairs";
    case LossKind::GpDpo: return "gp-dpo";
    case LossKind::GpoRank: return "gpo-rank";
    case LossKind::Dspo: return "dspo";
    case LossKind::DspoLpo: return "dspo-lpo";
  }
  throw std::logic_error("loss_kind_name: bad enum");
}

class AdamOptimizer {
 public:
  AdamOptimizer(std::size_t n, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : beta1_(beta1), beta2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

  void step(std::span<double> params, std::span<const double> grad,
            double lr) {
    if (params.size() != m_.size() || grad.size() != m_.size()) {
      throw std::invalid_argument("AdamOptimizer: size mismatch");
    }
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, t_);
    const double c2 = 1.0 - std::pow(beta2_, t_);
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
      v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
      params[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
    }
  }

 private:
  double beta1_, beta2_, eps_;
  int t_ = 0;
  std::vector<double> m_, v_;
};

struct TrainingConfig {
  std::uint64_t seed = 42;
  int steps = 2000;
  int batch_groups = 64;
  double lr = 1e-3;
  double warmup_frac = 0.05;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  LossKind loss = LossKind::Lpo;
  double beta_eff = 1.0;  // constant-mode effective scale beta T omega
  OmegaMode omega_mode = OmegaMode::Constant;
  int timesteps = 100;
  double beta_start = 1e-3;
  double beta_end = 0.2;
  double lambda_gamma = 0.5;
  bool independent_t = false;
  // denoiser
  int hidden = 64;
  int time_embed = 16;
  int cond_embed = 8;
  // pretraining phase that produces the frozen reference
  int pretrain_steps = 1500;
  double pretrain_lr = 2e-3;
  int pretrain_batch = 128;
  // evaluation cadence
  int eval_every = 200;
  int eval_draws = 32;
  SyntheticTask task;

  void validate() const {
    if (steps < 1 || batch_groups < 1 || pretrain_steps < 0 ||
        pretrain_batch < 1 || eval_every < 1 || eval_draws < 1) {
      throw std::invalid_argument("TrainingConfig: non-positive counts");
    }
    if (!(lr > 0.0) || !(pretrain_lr > 0.0)) {
      throw std::invalid_argument("TrainingConfig: learning rate must be positive");
    }
    if (warmup_frac < 0.0 || warmup_frac > 1.0) {
      throw std::invalid_argument("TrainingConfig: warmup_frac must be in 0..1");
    }
    if (!(beta_eff > 0.0)) {
      throw std::invalid_argument("TrainingConfig: beta_eff must be positive");
    }
    task.validate();
  }

  NoiseSchedule make_schedule() const {
    return make_linear_schedule(timesteps, beta_start, beta_end, omega_mode);
  }

  AlignmentConfig make_alignment() const {
    const NoiseSchedule sched = make_schedule();
    return AlignmentConfig::from_schedule(
        beta_eff / static_cast<double>(timesteps), sched);
  }

  DenoiserArch make_arch() const {
    DenoiserArch arch;
    arch.data_dim = task.dim;
    arch.time_embed = time_embed;
    arch.hidden = hidden;
    arch.cond_embed = cond_embed;
    arch.num_conditions = task.num_conditions;
    return arch;
  }
};

struct MetricsRecord {
  int step = 0;
  double loss = 0.0;
  double adj_acc = 0.0;
  double kendall_tau = 0.0;
  double reward_gap = 0.0;
};

inline std::string metrics_to_csv(const std::vector<MetricsRecord>& records) {
  std::string out = "step,loss,adj_acc,kendall_tau,reward_gap\n";
  char line[256];
  for (const auto& r : records) {
    std::snprintf(line, sizeof(line), "%d,%.17g,%.17g,%.17g,%.17g\n", r.step,
                  r.loss, r.adj_acc, r.kendall_tau, r.reward_gap);
    out += line;
  }
  return out;
}

struct PretrainResult {
  Denoiser model;
  std::vector<double> loss_history;
};

// Minimizes the denoising loss; the result is frozen as the reference policy
// and cloned as the fine-tuning initialization.
inline PretrainResult pretrain(const TrainingConfig& cfg,
                               const std::vector<DataPoint>& points,
                               const NoiseSchedule& sched, Rng& rng) {
  if (points.empty()) {
    throw std::invalid_argument("pretrain: no data points");
  }
  Rng init_rng = rng.fork("denoiser-init");
  PretrainResult out{Denoiser::init(cfg.make_arch(), init_rng), {}};
  AdamOptimizer adam(out.model.params().size(), cfg.adam_beta1, cfg.adam_beta2,
                     cfg.adam_eps);
  Rng loop_rng = rng.fork("pretrain");
  std::vector<DataPoint> batch(static_cast<std::size_t>(cfg.pretrain_batch));
  for (int step = 1; step <= cfg.pretrain_steps; ++step) {
    for (auto& slot : batch) {
      slot = points[loop_rng.below(points.size())];
    }
    const DmLossResult res = lpo::dm_loss(out.model, batch, sched, loop_rng);
    if (!std::isfinite(res.loss)) {
      throw std::runtime_error("pretrain: non-finite loss at step " +
                               std::to_string(step));
    }
    adam.step(out.model.params(), res.grad, cfg.pretrain_lr);
    out.loss_history.push_back(res.loss);
  }
  return out;
}

// Monte-Carlo estimate of the implicit reward of x0 under (theta, ref):
// the mean over (t, eps) draws of beta_eff(t) * delta.
inline double implicit_reward(const Denoiser& theta, const Denoiser& ref,
                              std::span<const double> x0, int condition_id,
                              const NoiseSchedule& sched,
                              const AlignmentConfig& acfg, int n_draws,
                              Rng& rng) {
  if (n_draws < 1) {
    throw std::invalid_argument("implicit_reward: n_draws must be positive");
  }
  std::vector<double> eps(x0.size());
  double acc = 0.0;
  for (int d = 0; d < n_draws; ++d) {
    const int t =
        1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(sched.T)));
    for (auto& e : eps) e = rng.normal();
    const std::vector<double> xt = forward_noise(x0, t, eps, sched);
    const std::vector<double> pred_theta =
        theta.forward(xt, t, condition_id);
    const std::vector<double> pred_ref = ref.forward(xt, t, condition_id);
    acc += acfg.beta_eff(t) * delta(eps, pred_theta, pred_ref);
  }
  return acc / static_cast<double>(n_draws);
}

struct RankingEval {
  double adjacent_accuracy = 0.0;
  double kendall_tau = 0.0;
  double reward_gap = 0.0;  // mean rank-1 minus rank-m implicit reward
};

// Scores every list element with a shared set of (t, eps) draws, then reads
// off pair orderings. Ties score half credit, which pins the untrained
// (theta == ref) baseline at exactly 0.5.
inline RankingEval eval_ranking_accuracy(
    const Denoiser& theta, const Denoiser& ref,
    const std::vector<PreferenceListSample>& lists,
    const NoiseSchedule& sched, const AlignmentConfig& acfg, int n_draws,
    std::uint64_t seed) {
  if (lists.empty()) {
    throw std::invalid_argument("eval_ranking_accuracy: no lists");
  }
  Rng rng = Rng(seed).fork("ranking-eval");
  RankingEval out;
  std::uint64_t pair_total = 0;
  double pair_credit = 0.0;
  double tau_sum = 0.0;

  std::vector<double> scores;
  std::vector<double> eps;
  for (const auto& list : lists) {
    const std::size_t m = list.points.size();
    const std::size_t dim = list.points.front().size();
    scores.assign(m, 0.0);
    eps.resize(dim);
    for (int d = 0; d < n_draws; ++d) {
      const int t = 1 + static_cast<int>(
                            rng.below(static_cast<std::uint64_t>(sched.T)));
      for (auto& e : eps) e = rng.normal();
      const double scale = acfg.beta_eff(t) / static_cast<double>(n_draws);
      for (std::size_t j = 0; j < m; ++j) {
        const std::vector<double> xt =
            forward_noise(list.points[j], t, eps, sched);
        const std::vector<double> pt =
            theta.forward(xt, t, list.condition_id);
        const std::vector<double> pr = ref.forward(xt, t, list.condition_id);
        scores[j] += scale * delta(eps, pt, pr);
      }
    }

    for (std::size_t j = 0; j + 1 < m; ++j) {
      ++pair_total;
      if (scores[j] > scores[j + 1]) {
        pair_credit += 1.0;
      } else if (scores[j] == scores[j + 1]) {
        pair_credit += 0.5;
      }
    }
    int concordant = 0, discordant = 0;
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t k = j + 1; k < m; ++k) {
        if (scores[j] > scores[k]) ++concordant;
        if (scores[j] < scores[k]) ++discordant;
      }
    }
    tau_sum += static_cast<double>(concordant - discordant) /
               (static_cast<double>(m) * (m - 1) / 2.0);
    out.reward_gap += scores.front() - scores.back();
  }
  out.adjacent_accuracy = pair_credit / static_cast<double>(pair_total);
  out.kendall_tau = tau_sum / static_cast<double>(lists.size());
  out.reward_gap /= static_cast<double>(lists.size());
  return out;
}

namespace detail {

// Per-group loss and the gradient wrt theta parameters, routed through the
// selected objective. All pairwise decompositions reuse the listwise code on
// two-element sublists, so pairs-only runs coincide bitwise with lpo.
struct GroupWorkspace {
  std::vector<std::vector<double>> eps, xt, pred_theta, pred_ref;
  std::vector<Denoiser::Trace> traces;
  std::vector<double> deltas;
  std::vector<int> ts;
  std::vector<double> d_pred;
};

inline double group_loss_and_grad(const Denoiser& theta, const Denoiser& ref,
                                  const PreferenceListSample& list,
                                  LossKind kind, const NoiseSchedule& sched,
                                  const AlignmentConfig& acfg,
                                  double lambda_gamma, bool independent_t,
                                  Rng& rng, GroupWorkspace& ws,
                                  std::span<double> grad) {
  const std::size_t m = list.points.size();
  const std::size_t dim = list.points.front().size();
  ws.eps.assign(m, std::vector<double>(dim));
  ws.xt.resize(m);
  ws.pred_theta.resize(m);
  ws.pred_ref.resize(m);
  ws.traces.assign(m, {});
  ws.deltas.assign(m, 0.0);
  ws.ts.assign(m, 0);

  const int shared_t =
      1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(sched.T)));
  for (std::size_t j = 0; j < m; ++j) {
    ws.ts[j] = independent_t
                   ? 1 + static_cast<int>(rng.below(
                             static_cast<std::uint64_t>(sched.T)))
                   : shared_t;
    for (auto& e : ws.eps[j]) e = rng.normal();
    ws.xt[j] = forward_noise(list.points[j], ws.ts[j], ws.eps[j], sched);
    ws.pred_theta[j] =
        theta.forward(ws.xt[j], ws.ts[j], list.condition_id, &ws.traces[j]);
    ws.pred_ref[j] = ref.forward(ws.xt[j], ws.ts[j], list.condition_id);
    ws.deltas[j] = delta(ws.eps[j], ws.pred_theta[j], ws.pred_ref[j]);
  }

  // grad_wrt_deltas, plus any direct residual path per element
  std::vector<double> g_delta(m, 0.0);
  std::vector<std::vector<double>> g_direct(m);
  double value = 0.0;

  auto scaled_scores = [&](std::size_t first, std::size_t count) {
    DeltaScores d;
    d.t = ws.ts[first];
    d.deltas.assign(ws.deltas.begin() + static_cast<std::ptrdiff_t>(first),
                    ws.deltas.begin() +
                        static_cast<std::ptrdiff_t>(first + count));
    return d;
  };

  switch (kind) {
    case LossKind::Lpo: {
      if (independent_t) {
        // fold each element's own beta_eff into its score: the listwise
        // objective over per-element effective scales
        DeltaScores d;
        d.t = 1;
        d.deltas.resize(m);
        AlignmentConfig unit = AlignmentConfig::constant(1.0);
        std::vector<double> elem_scale(m);
        for (std::size_t j = 0; j < m; ++j) {
          elem_scale[j] = acfg.beta_eff(ws.ts[j]);
          d.deltas[j] = elem_scale[j] * ws.deltas[j];
        }
        const LossOutput out = diffusion_lpo_loss(d, unit);
        value = out.value;
        for (std::size_t j = 0; j < m; ++j) {
          g_delta[j] = out.grad_wrt_deltas[j] * elem_scale[j];
        }
      } else {
        const LossOutput out = diffusion_lpo_loss(scaled_scores(0, m), acfg);
        value = out.value;
        g_delta = out.grad_wrt_deltas;
      }
      break;
    }
    case LossKind::DpoAdjacentPairs: {
      for (std::size_t j = 0; j + 1 < m; ++j) {
        const LossOutput out = diffusion_lpo_loss(scaled_scores(j, 2), acfg);
        value += out.value;
        g_delta[j] += out.grad_wrt_deltas[0];
        g_delta[j + 1] += out.grad_wrt_deltas[1];
      }
      break;
    }
    case LossKind::GpDpo: {
      const LossOutput out = gp_dpo_loss(scaled_scores(0, m), acfg);
      value = out.value;
      g_delta = out.grad_wrt_deltas;
      break;
    }
    case LossKind::GpoRank: {
      const LossOutput out = gpo_rank_loss(scaled_scores(0, m), acfg);
      value = out.value;
      g_delta = out.grad_wrt_deltas;
      break;
    }
    case LossKind::Dspo: {
      for (std::size_t j = 0; j + 1 < m; ++j) {
        const DspoOutput out =
            dspo_loss(ws.eps[j], ws.pred_theta[j], ws.pred_ref[j],
                      ws.deltas[j], ws.deltas[j + 1], acfg, lambda_gamma,
                      ws.ts[j]);
        value += out.value;
        g_delta[j] += out.grad_wrt_deltas[0];
        g_delta[j + 1] += out.grad_wrt_deltas[1];
        if (g_direct[j].empty()) g_direct[j].assign(dim, 0.0);
        for (std::size_t i = 0; i < dim; ++i) {
          g_direct[j][i] += out.grad_eps_theta_direct[i];
        }
      }
      break;
    }
    case LossKind::DspoLpo: {
      const DspoOutput out =
          dspo_lpo_loss(ws.eps, ws.pred_theta, ws.pred_ref,
                        scaled_scores(0, m), acfg, lambda_gamma);
      value = out.value;
      g_delta = out.grad_wrt_deltas;
      g_direct[0] = out.grad_eps_theta_direct;
      break;
    }
  }

  // chain rule back to theta: d(delta_j)/d(pred_j) = 2 (eps_j - pred_j)
  for (std::size_t j = 0; j < m; ++j) {
    const bool has_direct = !g_direct[j].empty();
    if (g_delta[j] == 0.0 && !has_direct) continue;
    ws.d_pred.assign(dim, 0.0);
    for (std::size_t i = 0; i < dim; ++i) {
      ws.d_pred[i] =
          g_delta[j] * 2.0 * (ws.eps[j][i] - ws.pred_theta[j][i]);
      if (has_direct) ws.d_pred[i] += g_direct[j][i];
    }
    theta.backward(ws.traces[j], ws.d_pred, grad);
  }
  return value;
}

}  // namespace detail

struct TrainResult {
  std::vector<MetricsRecord> metrics;
  Denoiser theta;
  Denoiser ref;
  std::vector<double> pretrain_loss_history;
};

// Full alignment run: pretrain the reference, clone it as the policy
// initialization, then optimize the selected preference objective with Adam
// and linear warmup. Batches are reduced sequentially in a fixed order, so a
// given (config, seed) pair reproduces every emitted number bit for bit.
inline TrainResult train(const TrainingConfig& cfg, const SyntheticData& data) {
  cfg.validate();
  if (data.train_lists.empty() || data.heldout_lists.empty()) {
    throw std::invalid_argument("train: empty dataset");
  }
  const NoiseSchedule sched = cfg.make_schedule();
  const AlignmentConfig acfg = cfg.make_alignment();

  Rng root(cfg.seed);
  Rng pretrain_rng = root.fork("phase-pretrain");
  PretrainResult pre = pretrain(cfg, data.pretrain_points, sched,
                                pretrain_rng);

  TrainResult result{{}, pre.model, pre.model, std::move(pre.loss_history)};
  Denoiser& theta = result.theta;
  const Denoiser& ref = result.ref;

  AdamOptimizer adam(theta.params().size(), cfg.adam_beta1, cfg.adam_beta2,
                     cfg.adam_eps);
  Rng loop_rng = root.fork("phase-align");
  const std::uint64_t eval_seed = root.fork("phase-eval").next_u64();

  detail::GroupWorkspace ws;
  std::vector<double> grad(theta.params().size());
  const int warmup_steps =
      static_cast<int>(cfg.warmup_frac * static_cast<double>(cfg.steps));

  for (int step = 1; step <= cfg.steps; ++step) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double batch_loss = 0.0;
    for (int b = 0; b < cfg.batch_groups; ++b) {
      const auto& list =
          data.train_lists[loop_rng.below(data.train_lists.size())];
      batch_loss += detail::group_loss_and_grad(
          theta, ref, list, cfg.loss, sched, acfg, cfg.lambda_gamma,
          cfg.independent_t, loop_rng, ws, grad);
    }
    const double inv_b = 1.0 / static_cast<double>(cfg.batch_groups);
    batch_loss *= inv_b;
    for (auto& g : grad) g *= inv_b;
    if (!std::isfinite(batch_loss)) {
      throw std::runtime_error("train: non-finite loss at step " +
                               std::to_string(step));
    }
    const double warm =
        warmup_steps > 0 ? std::min(1.0, static_cast<double>(step) /
                                             static_cast<double>(warmup_steps))
                         : 1.0;
    adam.step(theta.params(), grad, cfg.lr * warm);

    if (step % cfg.eval_every == 0 || step == cfg.steps) {
      const RankingEval eval =
          eval_ranking_accuracy(theta, ref, data.heldout_lists, sched, acfg,
                                cfg.eval_draws, eval_seed);
      result.metrics.push_back({step, batch_loss, eval.adjacent_accuracy,
                                eval.kendall_tau, eval.reward_gap});
    }
  }
  return result;
}

}  // namespace lpo
