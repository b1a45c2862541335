#pragma once

#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

#include "lpo/trainer.hpp"

namespace lpo {

namespace detail {

inline std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

inline bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("expected a boolean, got '" + v + "'");
}

}  // namespace detail

// Key-value training configuration: one `key = value` per line, `#` starts a
// comment. Unknown keys are rejected so typos cannot silently fall back to a
// default.
inline TrainingConfig parse_training_config(const std::string& text) {
  TrainingConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string trimmed = detail::trim(line);
    if (trimmed.empty()) continue;
    const auto eq = trimmed.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": expected key = value");
    }
    const std::string key = detail::trim(trimmed.substr(0, eq));
    const std::string value = detail::trim(trimmed.substr(eq + 1));
    try {
      if (key == "seed") {
        cfg.seed = std::stoull(value);
      } else if (key == "steps") {
        cfg.steps = std::stoi(value);
      } else if (key == "batch_groups") {
        cfg.batch_groups = std::stoi(value);
      } else if (key == "lr") {
        cfg.lr = std::stod(value);
      } else if (key == "warmup_frac") {
        cfg.warmup_frac = std::stod(value);
      } else if (key == "adam_beta1") {
        cfg.adam_beta1 = std::stod(value);
      } else if (key == "adam_beta2") {
        cfg.adam_beta2 = std::stod(value);
      } else if (key == "adam_eps") {
        cfg.adam_eps = std::stod(value);
      } else if (key == "loss") {
        cfg.loss = parse_loss_kind(value);
      } else if (key == "beta_eff") {
        cfg.beta_eff = std::stod(value);
      } else if (key == "omega_mode") {
        if (value == "constant") {
          cfg.omega_mode = OmegaMode::Constant;
        } else if (value == "snr") {
          cfg.omega_mode = OmegaMode::SnrWeighted;
        } else {
          throw std::invalid_argument("omega_mode must be constant or snr");
        }
      } else if (key == "timesteps") {
        cfg.timesteps = std::stoi(value);
      } else if (key == "beta_start") {
        cfg.beta_start = std::stod(value);
      } else if (key == "beta_end") {
        cfg.beta_end = std::stod(value);
      } else if (key == "lambda_gamma") {
        cfg.lambda_gamma = std::stod(value);
      } else if (key == "independent_t") {
        cfg.independent_t = detail::parse_bool(value);
      } else if (key == "hidden") {
        cfg.hidden = std::stoi(value);
      } else if (key == "time_embed") {
        cfg.time_embed = std::stoi(value);
      } else if (key == "cond_embed") {
        cfg.cond_embed = std::stoi(value);
      } else if (key == "pretrain_steps") {
        cfg.pretrain_steps = std::stoi(value);
      } else if (key == "pretrain_lr") {
        cfg.pretrain_lr = std::stod(value);
      } else if (key == "pretrain_batch") {
        cfg.pretrain_batch = std::stoi(value);
      } else if (key == "eval_every") {
        cfg.eval_every = std::stoi(value);
      } else if (key == "eval_draws") {
        cfg.eval_draws = std::stoi(value);
      } else if (key == "data_dim") {
        cfg.task.dim = std::stoi(value);
      } else if (key == "num_conditions") {
        cfg.task.num_conditions = std::stoi(value);
      } else if (key == "mode_radius") {
        cfg.task.mode_radius = std::stod(value);
      } else if (key == "data_sigma") {
        cfg.task.data_sigma = std::stod(value);
      } else if (key == "group_spread") {
        cfg.task.group_spread = std::stod(value);
      } else if (key == "list_len") {
        cfg.task.list_len = std::stoi(value);
      } else if (key == "train_groups") {
        cfg.task.train_groups = std::stoi(value);
      } else if (key == "heldout_groups") {
        cfg.task.heldout_groups = std::stoi(value);
      } else if (key == "pretrain_points") {
        cfg.task.pretrain_points = std::stoi(value);
      } else if (key == "corruption") {
        cfg.task.corruption = std::stod(value);
      } else {
        throw std::invalid_argument("unknown config key '" + key + "'");
      }
    } catch (const std::invalid_argument&) {
      throw;
    } catch (const std::exception& e) {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  " (" + key + "): " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

// Canonical dump of a resolved configuration; parses back to itself.
inline std::string dump_training_config(const TrainingConfig& cfg) {
  std::ostringstream out;
  char buf[64];
  auto put = [&](const char* key, double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << key << " = " << buf << "\n";
  };
  out << "seed = " << cfg.seed << "\n";
  out << "steps = " << cfg.steps << "\n";
  out << "batch_groups = " << cfg.batch_groups << "\n";
  put("lr", cfg.lr);
  put("warmup_frac", cfg.warmup_frac);
  put("adam_beta1", cfg.adam_beta1);
  put("adam_beta2", cfg.adam_beta2);
  put("adam_eps", cfg.adam_eps);
  out << "loss = " << loss_kind_name(cfg.loss) << "\n";
  put("beta_eff", cfg.beta_eff);
  out << "omega_mode = "
      << (cfg.omega_mode == OmegaMode::Constant ? "constant" : "snr") << "\n";
  out << "timesteps = " << cfg.timesteps << "\n";
  put("beta_start", cfg.beta_start);
  put("beta_end", cfg.beta_end);
  put("lambda_gamma", cfg.lambda_gamma);
  out << "independent_t = " << (cfg.independent_t ? "true" : "false") << "\n";
  out << "hidden = " << cfg.hidden << "\n";
  out << "time_embed = " << cfg.time_embed << "\n";
  out << "cond_embed = " << cfg.cond_embed << "\n";
  out << "pretrain_steps = " << cfg.pretrain_steps << "\n";
  put("pretrain_lr", cfg.pretrain_lr);
  out << "pretrain_batch = " << cfg.pretrain_batch << "\n";
  out << "eval_every = " << cfg.eval_every << "\n";
  out << "eval_draws = " << cfg.eval_draws << "\n";
  out << "data_dim = " << cfg.task.dim << "\n";
  out << "num_conditions = " << cfg.task.num_conditions << "\n";
  put("mode_radius", cfg.task.mode_radius);
  put("data_sigma", cfg.task.data_sigma);
  put("group_spread", cfg.task.group_spread);
  out << "list_len = " << cfg.task.list_len << "\n";
  out << "train_groups = " << cfg.task.train_groups << "\n";
  out << "heldout_groups = " << cfg.task.heldout_groups << "\n";
  out << "pretrain_points = " << cfg.task.pretrain_points << "\n";
  put("corruption", cfg.task.corruption);
  return out.str();
}

}  // namespace lpo
