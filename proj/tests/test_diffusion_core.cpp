#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "lpo/denoiser.hpp"
#include "lpo/diffusion.hpp"
#include "lpo/rng.hpp"
#include "lpo/schedule.hpp"

using lpo::DataPoint;
using lpo::Denoiser;
using lpo::DenoiserArch;
using lpo::NoiseSchedule;
using lpo::Rng;

TEST_CASE("linear schedule hand arithmetic") {
  const NoiseSchedule s = lpo::make_linear_schedule(2, 0.1, 0.2);
  CHECK(s.beta(1) == Catch::Approx(0.1));
  CHECK(s.beta(2) == Catch::Approx(0.2));
  CHECK(s.alpha(1) == Catch::Approx(0.9));
  CHECK(s.alpha(2) == Catch::Approx(0.8));
  CHECK(s.alpha_bar(1) == Catch::Approx(0.9));
  CHECK(s.alpha_bar(2) == Catch::Approx(0.72));
}

TEST_CASE("single-step schedule") {
  const NoiseSchedule s = lpo::make_linear_schedule(1, 0.5, 0.5);
  CHECK(s.alpha_bar(1) == Catch::Approx(0.5));
}

TEST_CASE("schedule parameter validation") {
  CHECK_THROWS_AS(lpo::make_linear_schedule(2, 0.2, 0.1),
                  std::invalid_argument);
  CHECK_THROWS_AS(lpo::make_linear_schedule(0, 0.1, 0.2),
                  std::invalid_argument);
  CHECK_THROWS_AS(lpo::make_linear_schedule(2, 0.0, 0.2),
                  std::invalid_argument);
  CHECK_THROWS_AS(lpo::make_linear_schedule(2, 0.1, 1.0),
                  std::invalid_argument);
}

TEST_CASE("alpha_bar and lambda decrease strictly") {
  const NoiseSchedule s = lpo::make_linear_schedule(100, 1e-4, 0.02);
  for (int t = 2; t <= s.T; ++t) {
    CHECK(s.alpha_bar(t) < s.alpha_bar(t - 1));
    CHECK(s.lambda(t) < s.lambda(t - 1));
    CHECK(s.alpha_bar(t) > 0.0);
    CHECK(s.alpha_bar(t) < 1.0);
  }
  CHECK(s.omega(5) == 1.0);
  const NoiseSchedule snr =
      lpo::make_linear_schedule(10, 1e-3, 0.05, lpo::OmegaMode::SnrWeighted);
  for (int t = 1; t <= snr.T; ++t) {
    CHECK(snr.omega(t) == Catch::Approx(snr.alpha_bar(t) /
                                        (1.0 - snr.alpha_bar(t))));
    CHECK(snr.omega(t) > 0.0);
  }
}

TEST_CASE("forward_noise closed form") {
  const NoiseSchedule s = lpo::make_linear_schedule(2, 0.1, 0.2);
  const std::vector<double> x0{1.0, -2.0};
  const std::vector<double> zero{0.0, 0.0};
  const std::vector<double> e{0.5, 1.5};

  // eps = 0 keeps only the scaled signal
  const auto signal_only = lpo::forward_noise(x0, 2, zero, s);
  CHECK(signal_only[0] == Catch::Approx(std::sqrt(0.72) * 1.0));
  CHECK(signal_only[1] == Catch::Approx(std::sqrt(0.72) * -2.0));

  // x0 = 0 keeps only the scaled noise
  const auto noise_only = lpo::forward_noise(zero, 2, e, s);
  CHECK(noise_only[0] == Catch::Approx(std::sqrt(1.0 - 0.72) * 0.5));
  CHECK(noise_only[1] == Catch::Approx(std::sqrt(1.0 - 0.72) * 1.5));

  CHECK_THROWS_AS(lpo::forward_noise(x0, 3, e, s), std::invalid_argument);
  const std::vector<double> short_eps{0.5};
  CHECK_THROWS_AS(lpo::forward_noise(x0, 1, short_eps, s),
                  std::invalid_argument);
}

TEST_CASE("forward_noise marginal matches the closed-form moments") {
  const NoiseSchedule s = lpo::make_linear_schedule(50, 1e-3, 0.05);
  const std::vector<double> x0{0.7, -0.3};
  const int t = 30;
  Rng rng(91);
  const int n = 20000;
  std::vector<double> mean(2, 0.0), sq(2, 0.0);
  std::vector<double> eps(2);
  for (int i = 0; i < n; ++i) {
    for (auto& e : eps) e = rng.normal();
    const auto xt = lpo::forward_noise(x0, t, eps, s);
    for (int d = 0; d < 2; ++d) {
      mean[d] += xt[d];
      sq[d] += xt[d] * xt[d];
    }
  }
  const double expected_var = 1.0 - s.alpha_bar(t);
  const double sd = std::sqrt(expected_var);
  for (int d = 0; d < 2; ++d) {
    mean[d] /= n;
    const double var = sq[d] / n - mean[d] * mean[d];
    const double expected_mean = std::sqrt(s.alpha_bar(t)) * x0[d];
    // three standard errors
    CHECK(std::abs(mean[d] - expected_mean) < 3.0 * sd / std::sqrt(n));
    CHECK(std::abs(var - expected_var) <
          3.0 * expected_var * std::sqrt(2.0 / (n - 1)));
  }
}

TEST_CASE("denoiser parameter count and forward contract") {
  DenoiserArch arch;
  arch.data_dim = 2;
  arch.time_embed = 8;
  arch.hidden = 16;
  arch.cond_embed = 4;
  arch.num_conditions = 3;
  // in = 2 + 8 + 4 = 14
  const std::size_t expected = 16 * 14 + 16 + 16 * 16 + 16 + 2 * 16 + 2 +
                               3 * 4;
  CHECK(arch.param_count() == expected);

  Rng rng(5);
  const Denoiser d = Denoiser::init(arch, rng);
  CHECK(d.params().size() == expected);
  const auto out = d.forward(std::vector<double>{0.1, -0.2}, 3, 1);
  CHECK(out.size() == 2);
  CHECK(lpo::all_finite(out));

  CHECK_THROWS_AS(d.forward(std::vector<double>{0.1}, 3, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(d.forward(std::vector<double>{0.1, 0.2}, 3, 7),
                  std::invalid_argument);
}

TEST_CASE("denoiser backward matches central finite differences") {
  DenoiserArch arch;
  arch.data_dim = 3;
  arch.time_embed = 6;
  arch.hidden = 10;
  arch.cond_embed = 4;
  arch.num_conditions = 2;
  Rng rng(77);
  Denoiser d = Denoiser::init(arch, rng);

  const std::vector<double> x{0.3, -0.8, 0.2};
  const int t = 4;
  const int cond = 1;
  // loss = sum of squared outputs, d(loss)/d(out) = 2 out
  auto loss_value = [&](const Denoiser& model) {
    const auto out = model.forward(x, t, cond);
    double acc = 0.0;
    for (const double v : out) acc += v * v;
    return acc;
  };

  Denoiser::Trace trace;
  const auto out = d.forward(x, t, cond, &trace);
  std::vector<double> d_out(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) d_out[i] = 2.0 * out[i];
  std::vector<double> grad(d.params().size(), 0.0);
  d.backward(trace, d_out, grad);

  const double h = 1e-6;
  Rng pick(123);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t idx = pick.below(d.params().size());
    Denoiser plus = d, minus = d;
    plus.params()[idx] += h;
    minus.params()[idx] -= h;
    const double fd = (loss_value(plus) - loss_value(minus)) / (2.0 * h);
    const double scale = std::max({1.0, std::abs(fd), std::abs(grad[idx])});
    CHECK(std::abs(grad[idx] - fd) / scale < 1e-5);
  }
}

TEST_CASE("dm_loss basics") {
  DenoiserArch arch;
  arch.data_dim = 2;
  arch.time_embed = 8;
  arch.hidden = 12;
  arch.num_conditions = 0;
  const NoiseSchedule sched = lpo::make_linear_schedule(10, 1e-3, 0.05);
  Rng rng(3);
  Denoiser d = Denoiser::init(arch, rng);

  std::vector<DataPoint> batch;
  for (int i = 0; i < 8; ++i) {
    batch.push_back({{rng.normal(), rng.normal()}, -1});
  }

  CHECK_THROWS_AS(lpo::dm_loss(d, {}, sched, rng), std::invalid_argument);

  // zero-output denoiser: loss is the mean squared norm of the drawn noise
  Denoiser zero(arch);
  Rng fixed_a(555);
  const auto res = lpo::dm_loss(zero, batch, sched, fixed_a);
  // replay the same draws to compute the expected value by hand
  Rng fixed_b(555);
  double expected = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    (void)fixed_b.below(static_cast<std::uint64_t>(sched.T));
    const double e0 = fixed_b.normal();
    const double e1 = fixed_b.normal();
    expected += e0 * e0 + e1 * e1;
  }
  expected /= static_cast<double>(batch.size());
  CHECK(res.loss == Catch::Approx(expected).epsilon(1e-12));
  CHECK(res.grad.size() == zero.params().size());
}

TEST_CASE("dm_loss gradient matches finite differences") {
  DenoiserArch arch;
  arch.data_dim = 2;
  arch.time_embed = 6;
  arch.hidden = 8;
  arch.num_conditions = 2;
  arch.cond_embed = 3;
  const NoiseSchedule sched = lpo::make_linear_schedule(10, 1e-3, 0.05);
  Rng init_rng(9);
  Denoiser d = Denoiser::init(arch, init_rng);
  std::vector<DataPoint> batch;
  Rng data_rng(10);
  for (int i = 0; i < 4; ++i) {
    batch.push_back({{data_rng.normal(), data_rng.normal()}, i % 2});
  }

  const std::uint64_t draw_seed = 2222;
  Rng rng_a(draw_seed);
  const auto res = lpo::dm_loss(d, batch, sched, rng_a);

  const double h = 1e-5;
  Rng pick(31);
  for (int rep = 0; rep < 150; ++rep) {
    const std::size_t idx = pick.below(d.params().size());
    Denoiser plus = d, minus = d;
    plus.params()[idx] += h;
    minus.params()[idx] -= h;
    Rng rp(draw_seed), rm(draw_seed);
    const double fd = (lpo::dm_loss(plus, batch, sched, rp).loss -
                       lpo::dm_loss(minus, batch, sched, rm).loss) /
                      (2.0 * h);
    const double scale = std::max({1.0, std::abs(fd), std::abs(res.grad[idx])});
    CHECK(std::abs(res.grad[idx] - fd) / scale < 1e-5);
  }
}

TEST_CASE("ancestral sampling is deterministic and finite") {
  DenoiserArch arch;
  arch.data_dim = 2;
  arch.time_embed = 8;
  arch.hidden = 12;
  arch.num_conditions = 0;
  Rng init_rng(12);
  const Denoiser d = Denoiser::init(arch, init_rng);
  const NoiseSchedule sched = lpo::make_linear_schedule(20, 1e-3, 0.05);

  Rng ra(99), rb(99);
  const auto sa = lpo::ancestral_sample(d, sched, 5, ra);
  const auto sb = lpo::ancestral_sample(d, sched, 5, rb);
  CHECK(sa == sb);
  for (const auto& x : sa) CHECK(lpo::all_finite(x));

  // T = 1 degenerate schedule still yields finite samples
  const NoiseSchedule tiny = lpo::make_linear_schedule(1, 0.5, 0.5);
  Rng rc(1);
  for (const auto& x : lpo::ancestral_sample(d, tiny, 3, rc)) {
    CHECK(lpo::all_finite(x));
  }
}

TEST_CASE("sampler recovers a bimodal 1d distribution") {
  // train a tiny unconditional model on two well-separated modes; compare
  // samples with fresh data via a two-sample Kolmogorov-Smirnov statistic
  DenoiserArch arch;
  arch.data_dim = 1;
  arch.time_embed = 8;
  arch.hidden = 56;
  arch.num_conditions = 0;
  const NoiseSchedule sched = lpo::make_linear_schedule(100, 1e-3, 0.2);

  Rng rng(2718);
  Denoiser d = Denoiser::init(arch, rng);
  auto draw_data = [](Rng& r) {
    const double mode = r.uniform() < 0.5 ? -1.2 : 1.2;
    return mode + 0.2 * r.normal();
  };

  // test-local Adam so the check stays independent of the trainer module
  std::vector<double> m(d.params().size(), 0.0), v(d.params().size(), 0.0);
  Rng train_rng(3141);
  const int steps = 12000;
  for (int step = 0; step < steps; ++step) {
    std::vector<DataPoint> batch;
    for (int i = 0; i < 96; ++i) batch.push_back({{draw_data(train_rng)}, -1});
    const auto res = lpo::dm_loss(d, batch, sched, train_rng);
    const double lr = step < steps * 3 / 5 ? 3e-3
                      : step < steps * 17 / 20 ? 6e-4
                                               : 1.2e-4;
    const double c1 = 1.0 - std::pow(0.9, step + 1);
    const double c2 = 1.0 - std::pow(0.999, step + 1);
    for (std::size_t i = 0; i < d.params().size(); ++i) {
      m[i] = 0.9 * m[i] + 0.1 * res.grad[i];
      v[i] = 0.999 * v[i] + 0.001 * res.grad[i] * res.grad[i];
      d.params()[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + 1e-8);
    }
  }

  Rng sample_rng(777);
  const auto samples = lpo::ancestral_sample(d, sched, 2000, sample_rng);
  std::vector<double> generated;
  for (const auto& s : samples) generated.push_back(s[0]);
  std::vector<double> reference;
  Rng ref_rng(778);
  for (int i = 0; i < 2000; ++i) reference.push_back(draw_data(ref_rng));

  std::sort(generated.begin(), generated.end());
  std::sort(reference.begin(), reference.end());
  // two-sample KS statistic
  double ks = 0.0;
  std::size_t i = 0, j = 0;
  while (i < generated.size() && j < reference.size()) {
    if (generated[i] <= reference[j]) {
      ++i;
    } else {
      ++j;
    }
    const double f1 = static_cast<double>(i) / generated.size();
    const double f2 = static_cast<double>(j) / reference.size();
    ks = std::max(ks, std::abs(f1 - f2));
  }
  // alpha = 0.01 critical value: 1.628 sqrt((n+m)/(nm))
  const double critical =
      1.628 * std::sqrt((2000.0 + 2000.0) / (2000.0 * 2000.0));
  CHECK(ks < critical);

  // both modes are populated
  const auto negatives = std::count_if(generated.begin(), generated.end(),
                                       [](double v) { return v < 0.0; });
  CHECK(negatives > 400);
  CHECK(negatives < 1600);
}
