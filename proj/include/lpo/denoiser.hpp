#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "lpo/rng.hpp"

namespace lpo {

// Small epsilon-prediction MLP: input is the noisy point, a sinusoidal time
// embedding, and (when conditions exist) a learned per-condition embedding;
// two tanh hidden layers; linear output back to data dimension. tanh keeps
// everything smooth, which the finite-difference gradient checks rely on.
struct DenoiserArch {
  int data_dim = 2;
  int time_embed = 16;  // even
  int hidden = 64;
  int cond_embed = 8;
  int num_conditions = 0;  // 0 = unconditional

  int input_dim() const {
    return data_dim + time_embed + (num_conditions > 0 ? cond_embed : 0);
  }

  std::size_t param_count() const {
    const std::size_t in = static_cast<std::size_t>(input_dim());
    const std::size_t h = static_cast<std::size_t>(hidden);
    const std::size_t d = static_cast<std::size_t>(data_dim);
    std::size_t count = h * in + h;  // W1, b1
    count += h * h + h;              // W2, b2
    count += d * h + d;              // W3, b3
    if (num_conditions > 0) {
      count += static_cast<std::size_t>(num_conditions) *
               static_cast<std::size_t>(cond_embed);
    }
    return count;
  }

  void validate() const {
    if (data_dim < 1 || hidden < 1 || time_embed < 2 || time_embed % 2 != 0) {
      throw std::invalid_argument("DenoiserArch: bad dimensions");
    }
    if (num_conditions < 0 || (num_conditions > 0 && cond_embed < 1)) {
      throw std::invalid_argument("DenoiserArch: bad condition embedding");
    }
  }
};

class Denoiser {
 public:
  Denoiser() = default;

  explicit Denoiser(const DenoiserArch& arch)
      : arch_(arch), params_(arch.param_count(), 0.0) {
    arch_.validate();
  }

  static Denoiser init(const DenoiserArch& arch, Rng& rng) {
    Denoiser d(arch);
    const std::size_t in = static_cast<std::size_t>(arch.input_dim());
    const std::size_t h = static_cast<std::size_t>(arch.hidden);
    const std::size_t dd = static_cast<std::size_t>(arch.data_dim);
    std::size_t off = 0;
    auto xavier = [&](std::size_t rows, std::size_t cols) {
      const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
      for (std::size_t i = 0; i < rows * cols; ++i) {
        d.params_[off++] = rng.uniform(-a, a);
      }
      off += rows;  // biases stay zero
    };
    xavier(h, in);
    xavier(h, h);
    xavier(dd, h);
    if (arch.num_conditions > 0) {
      const std::size_t table = static_cast<std::size_t>(arch.num_conditions) *
                                static_cast<std::size_t>(arch.cond_embed);
      for (std::size_t i = 0; i < table; ++i) {
        d.params_[off++] = 0.1 * rng.normal();
      }
    }
    return d;
  }

  const DenoiserArch& arch() const { return arch_; }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  // Activations cached by forward() for the reverse pass.
  struct Trace {
    std::vector<double> input;
    std::vector<double> a1;  // tanh(z1)
    std::vector<double> a2;  // tanh(z2)
    int condition_id = -1;
  };

  std::vector<double> forward(std::span<const double> x, int t,
                              int condition_id = -1,
                              Trace* trace = nullptr) const {
    if (static_cast<int>(x.size()) != arch_.data_dim) {
      throw std::invalid_argument("Denoiser::forward: dimension mismatch");
    }
    const std::size_t in_dim = static_cast<std::size_t>(arch_.input_dim());
    const std::size_t h = static_cast<std::size_t>(arch_.hidden);
    const std::size_t d = static_cast<std::size_t>(arch_.data_dim);

    std::vector<double> input(in_dim, 0.0);
    std::size_t pos = 0;
    for (std::size_t i = 0; i < d; ++i) input[pos++] = x[i];
    write_time_embedding(t, &input[pos]);
    pos += static_cast<std::size_t>(arch_.time_embed);
    if (arch_.num_conditions > 0) {
      if (condition_id < 0 || condition_id >= arch_.num_conditions) {
        throw std::invalid_argument("Denoiser::forward: bad condition id");
      }
      const double* emb = embedding_ptr(condition_id);
      for (int i = 0; i < arch_.cond_embed; ++i) input[pos++] = emb[i];
    }

    const Offsets o = offsets();
    std::vector<double> a1(h), a2(h), out(d);
    for (std::size_t r = 0; r < h; ++r) {
      double z = params_[o.b1 + r];
      const double* row = &params_[o.w1 + r * in_dim];
      for (std::size_t c = 0; c < in_dim; ++c) z += row[c] * input[c];
      a1[r] = std::tanh(z);
    }
    for (std::size_t r = 0; r < h; ++r) {
      double z = params_[o.b2 + r];
      const double* row = &params_[o.w2 + r * h];
      for (std::size_t c = 0; c < h; ++c) z += row[c] * a1[c];
      a2[r] = std::tanh(z);
    }
    for (std::size_t r = 0; r < d; ++r) {
      double z = params_[o.b3 + r];
      const double* row = &params_[o.w3 + r * h];
      for (std::size_t c = 0; c < h; ++c) z += row[c] * a2[c];
      out[r] = z;
    }

    if (trace != nullptr) {
      trace->input = std::move(input);
      trace->a1 = std::move(a1);
      trace->a2 = std::move(a2);
      trace->condition_id = condition_id;
    }
    return out;
  }

  // Accumulates d(loss)/d(params) into grad, given d(loss)/d(output).
  // grad must have param_count() entries.
  void backward(const Trace& trace, std::span<const double> d_out,
                std::span<double> grad) const {
    const std::size_t in_dim = static_cast<std::size_t>(arch_.input_dim());
    const std::size_t h = static_cast<std::size_t>(arch_.hidden);
    const std::size_t d = static_cast<std::size_t>(arch_.data_dim);
    if (d_out.size() != d || grad.size() != params_.size()) {
      throw std::invalid_argument("Denoiser::backward: size mismatch");
    }
    const Offsets o = offsets();

    // output layer
    std::vector<double> da2(h, 0.0);
    for (std::size_t r = 0; r < d; ++r) {
      const double g = d_out[r];
      double* grow = &grad[o.w3 + r * h];
      const double* row = &params_[o.w3 + r * h];
      for (std::size_t c = 0; c < h; ++c) {
        grow[c] += g * trace.a2[c];
        da2[c] += g * row[c];
      }
      grad[o.b3 + r] += g;
    }
    // second hidden layer
    std::vector<double> da1(h, 0.0);
    for (std::size_t r = 0; r < h; ++r) {
      const double dz = da2[r] * (1.0 - trace.a2[r] * trace.a2[r]);
      double* grow = &grad[o.w2 + r * h];
      const double* row = &params_[o.w2 + r * h];
      for (std::size_t c = 0; c < h; ++c) {
        grow[c] += dz * trace.a1[c];
        da1[c] += dz * row[c];
      }
      grad[o.b2 + r] += dz;
    }
    // first hidden layer; input gradient only matters for the condition
    // embedding slice (x and the time embedding are not parameters)
    const bool conditioned =
        arch_.num_conditions > 0 && trace.condition_id >= 0;
    std::vector<double> d_input;
    if (conditioned) d_input.assign(in_dim, 0.0);
    for (std::size_t r = 0; r < h; ++r) {
      const double dz = da1[r] * (1.0 - trace.a1[r] * trace.a1[r]);
      double* grow = &grad[o.w1 + r * in_dim];
      for (std::size_t c = 0; c < in_dim; ++c) {
        grow[c] += dz * trace.input[c];
      }
      grad[o.b1 + r] += dz;
      if (conditioned) {
        const double* row = &params_[o.w1 + r * in_dim];
        for (std::size_t c = 0; c < in_dim; ++c) d_input[c] += dz * row[c];
      }
    }
    if (conditioned) {
      const std::size_t emb_off =
          o.embeddings + static_cast<std::size_t>(trace.condition_id) *
                             static_cast<std::size_t>(arch_.cond_embed);
      const std::size_t emb_start =
          static_cast<std::size_t>(arch_.data_dim + arch_.time_embed);
      for (int i = 0; i < arch_.cond_embed; ++i) {
        grad[emb_off + static_cast<std::size_t>(i)] +=
            d_input[emb_start + static_cast<std::size_t>(i)];
      }
    }
  }

 private:
  struct Offsets {
    std::size_t w1, b1, w2, b2, w3, b3, embeddings;
  };

  Offsets offsets() const {
    const std::size_t in = static_cast<std::size_t>(arch_.input_dim());
    const std::size_t h = static_cast<std::size_t>(arch_.hidden);
    const std::size_t d = static_cast<std::size_t>(arch_.data_dim);
    Offsets o{};
    o.w1 = 0;
    o.b1 = o.w1 + h * in;
    o.w2 = o.b1 + h;
    o.b2 = o.w2 + h * h;
    o.w3 = o.b2 + h;
    o.b3 = o.w3 + d * h;
    o.embeddings = o.b3 + d;
    return o;
  }

  const double* embedding_ptr(int condition_id) const {
    const Offsets o = offsets();
    return &params_[o.embeddings + static_cast<std::size_t>(condition_id) *
                                       static_cast<std::size_t>(
                                           arch_.cond_embed)];
  }

  void write_time_embedding(int t, double* out) const {
    const int half = arch_.time_embed / 2;
    for (int i = 0; i < half; ++i) {
      const double freq =
          std::exp(-std::log(10000.0) * i / std::max(1, half - 1));
      out[2 * i] = std::sin(t * freq);
      out[2 * i + 1] = std::cos(t * freq);
    }
  }

  DenoiserArch arch_;
  std::vector<double> params_;
};

}  // namespace lpo
