#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lpo/denoiser.hpp"

namespace lpo {

// Policy/reference pair with the architecture header. JSON keeps the format
// human-inspectable; doubles round-trip exactly through nlohmann's
// shortest-representation printing.
struct Checkpoint {
  DenoiserArch arch;
  std::vector<double> theta;
  std::vector<double> ref;
};

inline std::string checkpoint_to_json(const Checkpoint& ckpt) {
  nlohmann::ordered_json doc;
  doc["format"] = "lpo-checkpoint-v1";
  doc["arch"] = {{"data_dim", ckpt.arch.data_dim},
                 {"time_embed", ckpt.arch.time_embed},
                 {"hidden", ckpt.arch.hidden},
                 {"cond_embed", ckpt.arch.cond_embed},
                 {"num_conditions", ckpt.arch.num_conditions}};
  doc["theta"] = ckpt.theta;
  doc["ref"] = ckpt.ref;
  return doc.dump();
}

inline Checkpoint checkpoint_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("checkpoint: bad JSON: ") +
                                e.what());
  }
  Checkpoint ckpt;
  try {
    if (doc.at("format").get<std::string>() != "lpo-checkpoint-v1") {
      throw std::invalid_argument("checkpoint: unknown format");
    }
    const auto& arch = doc.at("arch");
    ckpt.arch.data_dim = arch.at("data_dim").get<int>();
    ckpt.arch.time_embed = arch.at("time_embed").get<int>();
    ckpt.arch.hidden = arch.at("hidden").get<int>();
    ckpt.arch.cond_embed = arch.at("cond_embed").get<int>();
    ckpt.arch.num_conditions = arch.at("num_conditions").get<int>();
    ckpt.theta = doc.at("theta").get<std::vector<double>>();
    ckpt.ref = doc.at("ref").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("checkpoint: missing field: ") +
                                e.what());
  }
  ckpt.arch.validate();
  const std::size_t expected = ckpt.arch.param_count();
  if (ckpt.theta.size() != expected || ckpt.ref.size() != expected) {
    throw std::invalid_argument(
        "checkpoint: parameter count mismatch, expected " +
        std::to_string(expected) + ", got theta " +
        std::to_string(ckpt.theta.size()) + " / ref " +
        std::to_string(ckpt.ref.size()));
  }
  return ckpt;
}

inline Denoiser denoiser_from_params(const DenoiserArch& arch,
                                     const std::vector<double>& params) {
  Denoiser d(arch);
  if (params.size() != d.params().size()) {
    throw std::invalid_argument("denoiser_from_params: count mismatch");
  }
  d.params() = params;
  return d;
}

}  // namespace lpo
