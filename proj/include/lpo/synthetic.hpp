#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "lpo/diffusion.hpp"
#include "lpo/math.hpp"
#include "lpo/rng.hpp"

namespace lpo {

// Desk-scale stand-in for human preference data: each condition has a target
// mean on a circle, candidates are scattered around it, and the oracle
// prefers whatever lies closest to the target.
struct SyntheticTask {
  int dim = 2;
  int num_conditions = 2;
  double mode_radius = 1.5;
  double data_sigma = 0.5;    // pretraining data spread around each mode
  double group_spread = 0.9;  // candidate spread inside preference groups
  int list_len = 4;
  int train_groups = 5000;
  int heldout_groups = 1000;
  int pretrain_points = 20000;
  double corruption = 0.0;  // probability of swapping each adjacent pair

  void validate() const {
    if (dim < 1 || num_conditions < 1) {
      throw std::invalid_argument("SyntheticTask: bad dimensions");
    }
    if (list_len < 2 || list_len > 8) {
      throw std::invalid_argument("SyntheticTask: list_len must be in 2..8");
    }
    if (corruption < 0.0 || corruption > 1.0) {
      throw std::invalid_argument("SyntheticTask: corruption must be in 0..1");
    }
    if (train_groups < 1 || heldout_groups < 1 || pretrain_points < 1) {
      throw std::invalid_argument("SyntheticTask: empty dataset");
    }
  }

  std::vector<double> mode_mean(int condition_id) const {
    std::vector<double> mu(static_cast<std::size_t>(dim), 0.0);
    const double angle = 2.0 * 3.14159265358979323846 * condition_id /
                         std::max(1, num_conditions);
    mu[0] = mode_radius * std::cos(angle);
    if (dim > 1) mu[1] = mode_radius * std::sin(angle);
    return mu;
  }

  double oracle_reward(std::span<const double> x, int condition_id) const {
    return -squared_distance(x, mode_mean(condition_id));
  }
};

struct PreferenceListSample {
  int condition_id = 0;
  std::vector<std::vector<double>> points;  // best-first
};

struct SyntheticData {
  std::vector<PreferenceListSample> train_lists;
  std::vector<PreferenceListSample> heldout_lists;
  std::vector<DataPoint> pretrain_points;
};

namespace detail {

inline std::vector<PreferenceListSample> draw_lists(const SyntheticTask& task,
                                                    int count, Rng& rng) {
  std::vector<PreferenceListSample> lists(static_cast<std::size_t>(count));
  for (auto& list : lists) {
    list.condition_id =
        static_cast<int>(rng.below(static_cast<std::uint64_t>(
            task.num_conditions)));
    const std::vector<double> mu = task.mode_mean(list.condition_id);
    list.points.resize(static_cast<std::size_t>(task.list_len));
    for (auto& p : list.points) {
      p.resize(static_cast<std::size_t>(task.dim));
      for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = mu[i] + task.group_spread * rng.normal();
      }
    }
    std::stable_sort(list.points.begin(), list.points.end(),
                     [&](const auto& a, const auto& b) {
                       return task.oracle_reward(a, list.condition_id) >
                              task.oracle_reward(b, list.condition_id);
                     });
    for (std::size_t j = 0; j + 1 < list.points.size(); ++j) {
      if (rng.uniform() < task.corruption) {
        std::swap(list.points[j], list.points[j + 1]);
      }
    }
  }
  return lists;
}

}  // namespace detail

inline SyntheticData generate_synthetic_preferences(const SyntheticTask& task,
                                                    std::uint64_t seed) {
  task.validate();
  SyntheticData data;
  Rng root(seed);
  Rng train_rng = root.fork("synthetic-train");
  Rng heldout_rng = root.fork("synthetic-heldout");
  Rng pretrain_rng = root.fork("synthetic-pretrain");

  data.train_lists = detail::draw_lists(task, task.train_groups, train_rng);
  data.heldout_lists =
      detail::draw_lists(task, task.heldout_groups, heldout_rng);

  data.pretrain_points.resize(static_cast<std::size_t>(task.pretrain_points));
  for (auto& point : data.pretrain_points) {
    point.condition_id = static_cast<int>(
        pretrain_rng.below(static_cast<std::uint64_t>(task.num_conditions)));
    const std::vector<double> mu = task.mode_mean(point.condition_id);
    point.x0.resize(static_cast<std::size_t>(task.dim));
    for (std::size_t i = 0; i < point.x0.size(); ++i) {
      point.x0[i] = mu[i] + task.data_sigma * pretrain_rng.normal();
    }
  }
  return data;
}

}  // namespace lpo
