#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "testing.hpp"
#include "smdl/core/rng.hpp"
#include "smdl/llc/llc.hpp"
#include "smdl/zoo/landscape.hpp"
#include "smdl/zoo/mlp.hpp"

using namespace smdl;
using zoo::Box;
using zoo::ParamPoint;

namespace {

ParamPoint origin(const zoo::Landscape& k) { return {std::vector<double>(k.dimension(), 0.0), k.bounds()}; }

double gaussian_oracle(double d, double nb, double gamma) { return 0.5 * d * nb / (nb + 0.5 * gamma); }

// Exact stationary mean of ||w||^2 under the discretized update on K = ||w||^2, relative to
// the continuous Gibbs value: the AR(1) coefficient is 1 - a with a = eps (2 nβ + γ) / 2.
double discretization_bias(double eps, double nb, double gamma) {
  const double a = 0.5 * eps * (2.0 * nb + gamma);
  return 1.0 / (1.0 - 0.5 * a) - 1.0;
}

// Finite only at the origin, so chains fail on their first move.
class NanObjective final : public zoo::Objective {
 public:
  std::size_t dimension() const override { return 2; }
  double loss(std::span<const double> w, std::size_t) const override {
    return (w[0] == 0.0 && w[1] == 0.0) ? 0.0 : std::nan("");
  }
  double loss_and_grad(std::span<const double> w, std::size_t b, std::span<double> g) const override {
    g[0] = g[1] = 0.0;
    return loss(w, b);
  }
};

// Loss maximized at the reference point: the estimator goes negative.
class HillObjective final : public zoo::Objective {
 public:
  std::size_t dimension() const override { return 1; }
  double loss(std::span<const double> w, std::size_t) const override { return 1.0 - w[0] * w[0]; }
  double loss_and_grad(std::span<const double> w, std::size_t b, std::span<double> g) const override {
    g[0] = -2.0 * w[0];
    return loss(w, b);
  }
};

}  // namespace

TEST_CASE("sgld step fixed point and pure diffusion") {
  llc::LlcConfig cfg;
  cfg.gamma = 0.0;
  cfg.step_size = 0.04;
  const Box box = Box::cube(3, -1, 1);
  const ParamPoint w({0.1, -0.2, 0.3}, box), ws({0, 0, 0}, box);
  const std::vector<double> zero(3, 0.0), e1{1.0, 0.0, 0.0};
  CHECK(llc::sgld_step(w, zero, ws, cfg, zero).w == w.w);

  cfg.gamma = 5.0;
  const auto next = llc::sgld_step(ws, zero, ws, cfg, e1);
  CHECK(next.w[0] == doctest::Approx(0.2));
  CHECK(next.w[1] == 0.0);
}

TEST_CASE("sgld clamps to the box and rejects non-finite updates") {
  llc::LlcConfig cfg;
  cfg.step_size = 1.0;
  cfg.gamma = 0.0;
  const Box box = Box::cube(2, -1, 1);
  std::vector<double> w{0.9, 0.0};
  const std::vector<double> g(2, 0.0), ws(2, 0.0), noise{5.0, 0.0};
  CHECK(llc::sgld_update(w, g, ws, box, cfg, noise) == 1);
  CHECK(w[0] == 1.0);
  const std::vector<double> bad{std::nan(""), 0.0};
  CHECK_THROWS_AS(llc::sgld_update(w, bad, ws, box, cfg, noise), Error);
}

TEST_CASE("sgld stationary variance matches the Gaussian oracle") {
  constexpr std::size_t d = 16;
  const double nb = 30.0, gamma = 1.0, eps = 0.04 / (2 * nb + gamma);
  llc::LlcConfig cfg;
  cfg.beta_n = nb;
  cfg.gamma = gamma;
  cfg.step_size = eps;
  const Box box = Box::cube(d, -10, 10);
  std::vector<double> w(d, 0.0), g(d), ws(d, 0.0), noise(d), sumsq(d, 0.0);
  core::RngStream rng(3, 0);
  const int burn = 1000, steps = 10000;
  for (int t = 0; t < burn + steps; ++t) {
    for (std::size_t i = 0; i < d; ++i) g[i] = 2.0 * w[i];
    rng.fill_normal(noise);
    llc::sgld_update(w, g, ws, box, cfg, noise);
    if (t >= burn)
      for (std::size_t i = 0; i < d; ++i) sumsq[i] += w[i] * w[i];
  }
  double pooled = 0.0;
  for (double s : sumsq) pooled += s / steps;
  pooled /= d;
  CHECK(rel_err(pooled, 1.0 / (2 * nb + gamma)) <= 0.10);
}

TEST_CASE("discretization bias of the oracle step size is below 2%") {
  const double nb = 30.0, gamma = 1.0, eps = 0.07 / (2 * nb + gamma);
  CHECK(discretization_bias(eps, nb, gamma) < 0.02);
  CHECK(discretization_bias(eps, nb, gamma) - discretization_bias(eps / 2, nb, gamma) < 0.02);
}

TEST_CASE("psgld with constant gradient rescales the sgld drift") {
  llc::LlcConfig cfg;
  cfg.preconditioner = llc::Preconditioner::rmsprop;
  cfg.rms_decay = 0.9;
  cfg.rms_stabilizer = 0.5;
  cfg.gamma = 0.0;
  cfg.step_size = 1e-3;
  const Box box = Box::cube(2, -100, 100);
  const std::vector<double> g{2.0, -0.25}, ws(2, 0.0), zero(2, 0.0);
  llc::RmsState st;
  std::vector<double> w(2, 0.0);
  for (int i = 0; i < 2000; ++i) {
    w.assign(2, 0.0);
    llc::psgld_update(w, g, ws, box, cfg, zero, st);
  }
  std::vector<double> plain(2, 0.0);
  llc::sgld_update(plain, g, ws, box, cfg, zero);
  for (std::size_t i = 0; i < 2; ++i)
    CHECK(rel_err(w[i], plain[i] / (std::abs(g[i]) + cfg.rms_stabilizer)) <= 1e-12);
}

TEST_CASE("psgld with zero gradients and unit preconditioner equals sgld") {
  llc::LlcConfig cfg;
  cfg.preconditioner = llc::Preconditioner::rmsprop;
  cfg.rms_stabilizer = 1.0;
  cfg.gamma = 7.0;
  cfg.step_size = 0.01;
  const Box box = Box::cube(3, -1, 1);
  std::vector<double> a{0.1, 0.2, -0.3}, b = a, ws(3, 0.0), zero(3, 0.0), noise(3);
  llc::RmsState st;
  core::RngStream rng(1, 1);
  for (int t = 0; t < 500; ++t) {
    rng.fill_normal(noise);
    llc::sgld_update(a, zero, ws, box, cfg, noise);
    llc::psgld_update(b, zero, ws, box, cfg, noise, st);
    REQUIRE(a == b);
  }
}

TEST_CASE("psgld balances an anisotropic quadratic that sgld does not") {
  // The step size sits just inside the stability limit of the stiff coordinate, which
  // plain SGLD then oversamples; the preconditioner shrinks that coordinate's step.
  const auto k = zoo::make_anisotropic_quadratic({1.0, 100.0}, Box::cube(2, -10, 10));
  llc::LlcConfig cfg;
  cfg.beta_n = 1.0;
  cfg.gamma = 0.0;
  cfg.step_size = 0.019;
  cfg.chains = 8;
  cfg.steps_per_chain = 20000;
  cfg.rms_stabilizer = 1e-2;
  cfg.rms_decay = 0.99;
  auto contributions = [&](const llc::LlcConfig& c) {
    // Replay the chains to split the loss by coordinate.
    std::vector<double> acc(2, 0.0);
    for (std::size_t ch = 0; ch < c.chains; ++ch) {
      core::RngStream rng(11, ch);
      std::vector<double> w(2, 0.0), g(2), ws(2, 0.0), noise(2);
      llc::RmsState st;
      for (std::size_t t = 0; t < c.steps_per_chain; ++t) {
        k->value_and_gradient(w, g);
        if (t >= c.effective_burn_in()) {
          acc[0] += w[0] * w[0];
          acc[1] += 100.0 * w[1] * w[1];
        }
        rng.fill_normal(noise);
        if (c.preconditioner == llc::Preconditioner::rmsprop)
          llc::psgld_update(w, g, ws, k->bounds(), c, noise, st);
        else
          llc::sgld_update(w, g, ws, k->bounds(), c, noise);
      }
    }
    return std::max(acc[0], acc[1]) / std::min(acc[0], acc[1]);
  };
  const double plain = contributions(cfg);
  cfg.preconditioner = llc::Preconditioner::rmsprop;
  const double pre = contributions(cfg);
  CHECK(plain > 5.0);
  CHECK(pre < 1.25);
}

TEST_CASE("estimate_llc Gaussian oracle on d=2") {
  const auto k = zoo::make_quadratic(2, Box::cube(2, -2, 2));
  llc::LlcConfig cfg;
  cfg.beta_n = 30.0;
  cfg.gamma = 1.0;
  cfg.step_size = 0.07 / 61.0;
  cfg.chains = 4;
  cfg.steps_per_chain = 2000;
  const auto est = llc::estimate_llc(*k, origin(*k), cfg, 0);
  CHECK(rel_err(gaussian_oracle(2, 30, 1), 0.9836) <= 1e-4);
  CHECK(rel_err(est.lambda_hat, gaussian_oracle(2, 30, 1)) <= 0.10);
  CHECK(est.per_chain_means.size() == 4);
  CHECK(std::abs(llc::lambda_from_trace(est) - est.lambda_hat) <= 1e-12);
}

TEST_CASE("estimate_llc on a flat landscape is zero") {
  const auto k = zoo::make_flat(Box::cube(2, -1, 1));
  llc::LlcConfig cfg;
  const ParamPoint ws({0.0, 0.0}, k->bounds());
  const auto est = llc::estimate_llc(*k, ws, cfg, 5);
  CHECK(std::abs(est.lambda_hat) < 0.05);
}

TEST_CASE("estimate_llc orders quadratic > minimally singular > singular") {
  llc::LlcConfig cfg;
  cfg.beta_n = 30.0;
  cfg.gamma = 1.0;
  cfg.step_size = 1e-3;
  cfg.steps_per_chain = 2000;
  const auto q = zoo::make_quadratic(2);
  const auto ms = zoo::make_normal_crossing({{1, 1}, {0}});
  const auto s = zoo::make_normal_crossing({{1, 2}, {0, 1}});
  const double lq = llc::estimate_llc(*q, origin(*q), cfg, 1).lambda_hat;
  const double lm = llc::estimate_llc(*ms, origin(*ms), cfg, 1).lambda_hat;
  const double ls = llc::estimate_llc(*s, origin(*s), cfg, 1).lambda_hat;
  CHECK(lq > lm);
  CHECK(lm > ls);
}

TEST_CASE("localization shrinks the post-burn-in distance") {
  const auto k = zoo::make_quadratic(4);
  llc::LlcConfig cfg;
  cfg.step_size = 1e-6;
  cfg.steps_per_chain = 2000;
  double prev = std::numeric_limits<double>::infinity();
  for (double gamma : {300.0, 1e4, 1e6}) {
    cfg.gamma = gamma;
    const auto est = llc::estimate_llc(*k, origin(*k), cfg, 2);
    double dist = 0.0;
    for (double v : est.mean_distance) dist += v;
    CHECK(dist < prev);
    prev = dist;
  }
}

TEST_CASE("estimate_llc is deterministic and policy independent") {
  const auto k = zoo::make_normal_crossing({{1, 2}, {0, 1}});
  llc::LlcConfig cfg;
  cfg.preconditioner = llc::Preconditioner::rmsprop;
  cfg.rms_stabilizer = 1e-2;
  const auto a = llc::estimate_llc(*k, origin(*k), cfg, 9, kernels::Exec::parallel);
  const auto b = llc::estimate_llc(*k, origin(*k), cfg, 9, kernels::Exec::serial);
  CHECK(llc::to_json(a) == llc::to_json(b));
  CHECK(llc::trace_csv(a) == llc::trace_csv(b));
  CHECK(llc::to_json(a) == llc::to_json(llc::estimate_llc(*k, origin(*k), cfg, 9)));
}

TEST_CASE("diverged chains raise with diagnostics") {
  NanObjective obj;
  llc::LlcConfig cfg;
  cfg.chains = 3;
  try {
    llc::estimate_llc(obj, ParamPoint({0.0, 0.0}, Box::cube(2, -1, 1)), cfg, 0);
    FAIL("expected divergence");
  } catch (const llc::ChainDivergedError& e) {
    CHECK(e.chain() == 0);
    CHECK(e.step() == 1);
    CHECK(e.partial_means().size() == 3);
    CHECK(e.kind() == ErrorKind::chain_diverged);
  }
}

TEST_CASE("negative estimates are returned and flagged") {
  HillObjective obj;
  llc::LlcConfig cfg;
  cfg.gamma = 0.0;
  cfg.step_size = 1e-2;
  const auto est = llc::estimate_llc(obj, ParamPoint({0.0}, Box::cube(1, -1, 1)), cfg, 0);
  CHECK(est.lambda_hat < 0.0);
  CHECK(est.negative);
}

TEST_CASE("config validation names the field") {
  llc::LlcConfig cfg;
  cfg.burn_in = cfg.steps_per_chain;
  try {
    cfg.validate();
    FAIL("expected invalid config");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("burn_in") != std::string::npos);
  }
  cfg = {};
  cfg.beta_n = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  CHECK(cfg.effective_burn_in() == 20);
}

TEST_CASE("estimate_llc on a minibatched MLP") {
  const zoo::MlpModel model({{4, 8, 2}});
  const auto data = zoo::make_teacher_dataset(model, {256});
  zoo::TrainConfig tc;
  tc.steps = 500;
  const auto trained = zoo::train_sgd(model, data, tc);
  const zoo::MlpObjective obj(model, data, 32);
  CHECK(obj.batch_count() == 8);
  llc::LlcConfig cfg;
  cfg.beta_n = 100;
  cfg.gamma = 100;
  const std::size_t d = model.parameter_count();
  const auto est = llc::estimate_llc(obj, ParamPoint(trained.final_params, Box::cube(d, -1e3, 1e3)), cfg, 4);
  CHECK(std::isfinite(est.lambda_hat));
  CHECK(std::abs(llc::lambda_from_trace(est) - est.lambda_hat) <= 1e-12);
}
