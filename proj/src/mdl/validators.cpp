#include <algorithm>
#include <cmath>
#include <limits>

#include "smdl/core/error.hpp"
#include "smdl/kernels/sublevel.hpp"
#include "smdl/mdl/mdl.hpp"

namespace smdl::mdl {

namespace {

// Slack for rounding in the audited inequalities.
bool at_most(double a, double b) { return a <= b + 1e-14 * std::max({1.0, std::abs(a), std::abs(b)}); }

void require_restricted(const SimplexDist& p, double m, const char* who) {
  for (double x : p.probs())
    if (x < m - 1e-15)
      fail(ErrorKind::invalid_input, std::string(who) + ": distribution outside the restricted simplex");
}

double squared_distance(const SimplexDist& a, const SimplexDist& b) {
  double s = 0.0;
  for (std::size_t x = 0; x < a.size(); ++x) s += (a[x] - b[x]) * (a[x] - b[x]);
  return s;
}

}  // namespace

BoundCheck validate_kl_l2(const SimplexDist& q, const SimplexDist& p, double m_simplex) {
  require(q.size() == p.size(), "kl-l2 check: distributions live on different outcome spaces");
  require(m_simplex > 0.0, "kl-l2 check: m_simplex must be positive");
  require_restricted(q, m_simplex, "kl-l2 check");
  require_restricted(p, m_simplex, "kl-l2 check");
  const double d2 = squared_distance(p, q);
  BoundCheck c{0.5 * d2, kl(q, p), d2 / (2.0 * m_simplex), true};
  c.pass = at_most(c.lower, c.value) && at_most(c.value, c.upper);
  return c;
}

BoundCheck validate_triangle(const SimplexDist& q, const SimplexDist& p, const SimplexDist& p_prime,
                             double m_simplex) {
  require(q.size() == p.size() && q.size() == p_prime.size(),
          "triangle check: distributions live on different outcome spaces");
  require(m_simplex > 0.0, "triangle check: m_simplex must be positive");
  require_restricted(q, m_simplex, "triangle check");
  require_restricted(p, m_simplex, "triangle check");
  require_restricted(p_prime, m_simplex, "triangle check");
  BoundCheck c{0.0, kl(p, p_prime), (kl(q, p) + kl(q, p_prime)) / (2.0 * m_simplex), true};
  c.pass = at_most(c.value, c.upper);
  return c;
}

BoundCheck validate_variance_bound(const SimplexDist& q, const SimplexDist& p) {
  require(q.size() == p.size(), "variance check: distributions live on different outcome spaces");
  double sup = -std::numeric_limits<double>::infinity(), inf = std::numeric_limits<double>::infinity();
  double mean = 0.0, second = 0.0;
  for (std::size_t x = 0; x < q.size(); ++x) {
    if (q[x] == 0.0) continue;
    require(p[x] > 0.0, "variance check: log ratio is unbounded");
    const double l = std::log(q[x] / p[x]);
    sup = std::max(sup, l);
    inf = std::min(inf, l);
    mean += q[x] * l;
    second += q[x] * l * l;
  }
  const double k = std::max(mean, 0.0);
  const double var = std::max(second - mean * mean, 0.0);
  const double c_lo = 2.0 / std::max(1.0, std::exp(-inf));
  const double c_hi = 2.0 / std::min(1.0, std::exp(-sup));
  BoundCheck c{(c_lo - k) * k, var, (c_hi - k) * k, true};
  c.pass = at_most(c.lower, c.value) && at_most(c.value, c.upper);
  return c;
}

FluctuationReport validate_kn_fluctuation(const SimplexDist& q, const SimplexDist& p, std::uint64_t n,
                                          std::size_t trials, std::uint64_t seed, kernels::Exec exec) {
  require(q.size() == p.size(), "fluctuation check: distributions live on different outcome spaces");
  require(n >= 1 && trials >= 2, "fluctuation check: need n >= 1 and at least 2 trials");
  const std::size_t k = q.size();
  std::vector<double> ell(k, 0.0);
  FluctuationReport r;
  r.n = n;
  r.trials = trials;
  double second = 0.0;
  for (std::size_t x = 0; x < k; ++x) {
    if (q[x] == 0.0) continue;
    require(p[x] > 0.0, "fluctuation check: log ratio is unbounded");
    ell[x] = std::log(q[x] / p[x]);
    r.kl += q[x] * ell[x];
    second += q[x] * ell[x] * ell[x];
  }
  const double nd = static_cast<double>(n);
  r.bernstein_variance = nd * std::max(second - r.kl * r.kl, 0.0);
  for (std::size_t x = 0; x < k; ++x)
    if (q[x] > 0.0) r.bound_m = std::max(r.bound_m, std::abs(ell[x] - r.kl));

  std::vector<double> z(trials);
  const bool parallel = exec == kernels::Exec::parallel;
#pragma omp parallel for schedule(static) if (parallel)
  for (std::size_t t = 0; t < trials; ++t) {
    core::RngStream rng(seed, t);
    const auto counts = sample_counts(rng, q.probs(), n);
    double s = 0.0;
    for (std::size_t x = 0; x < k; ++x) s += static_cast<double>(counts[x]) * ell[x];
    z[t] = s - nd * r.kl;
  }

  double s = 0.0, s2 = 0.0;
  for (double v : z) s += v;
  r.mean = s / static_cast<double>(trials);
  for (double v : z) s2 += (v - r.mean) * (v - r.mean);
  r.se = std::sqrt(s2 / static_cast<double>(trials - 1) / static_cast<double>(trials));

  std::vector<double> a(trials);
  std::transform(z.begin(), z.end(), a.begin(), [](double v) { return std::abs(v); });
  std::sort(a.begin(), a.end());
  const auto idx = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(trials))) - 1;
  r.p99_abs = a[std::min(idx, trials - 1)];

  r.t = {0.5, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0};
  for (double t : r.t) {
    const auto above = static_cast<double>(a.end() - std::lower_bound(a.begin(), a.end(), t));
    const double frac = above / static_cast<double>(trials);
    // Two-sided Bernstein: P(|Σ X_i| >= t) <= 2 exp(−t² / (2 (n Var + M t / 3))).
    const double denom = 2.0 * (r.bernstein_variance + r.bound_m * t / 3.0);
    const double bound = denom > 0.0 ? std::min(1.0, 2.0 * std::exp(-t * t / denom)) : 0.0;
    r.tail_fraction.push_back(frac);
    r.tail_bound.push_back(bound);
    // Three binomial standard errors of slack for the empirical fraction.
    const double slack = 3.0 * std::sqrt(std::max(bound * (1.0 - bound), 1.0 / static_cast<double>(trials)) /
                                         static_cast<double>(trials));
    if (frac > bound + slack) r.pass = false;
  }
  return r;
}

InclusionCheck validate_volume_inclusions(const zoo::CategoricalModel& model, const SimplexDist& q,
                                          const SimplexDist& p_star, double epsilon, std::uint64_t mc_samples,
                                          std::uint64_t seed, kernels::Exec exec) {
  require(epsilon > 0.0, "volume inclusions: epsilon must be positive");
  require(q.size() == model.outcome_count() && p_star.size() == model.outcome_count(),
          "volume inclusions: distributions live on a different outcome space");
  require(kl(q, p_star) <= epsilon, "volume inclusions: need KL(q || p*) <= epsilon");
  InclusionCheck r;
  r.c = 1.0 / model.simplex_floor();
  r.epsilon = epsilon;
  const double e_in = epsilon, e_mid = r.c * epsilon, e_out = 0.5 * r.c * (r.c + 1.0) * epsilon;
  const std::size_t k = model.outcome_count();
  // Normalizing by each level lets one threshold serve all three sets on the same samples.
  const kernels::MultiField field = [&](std::span<const double> w, std::span<double> out) {
    std::vector<double> p(k);
    model.distribution(w, p);
    const double fwd = zoo::kl_divergence(q.probs(), p);
    out[0] = fwd / e_in;
    out[1] = zoo::kl_divergence(p, p_star.probs()) / e_mid;
    out[2] = fwd / e_out;
  };
  const std::vector<double> one{1.0};
  const auto hits = kernels::count_sublevel(model.bounds(), 3, field, one, mc_samples, seed, exec);
  const double vol = model.bounds().volume();
  r.inner = volume::volume_from_hits(hits[0], mc_samples, vol);
  r.middle = volume::volume_from_hits(hits[1], mc_samples, vol);
  r.outer = volume::volume_from_hits(hits[2], mc_samples, vol);
  auto within = [](const volume::VolumeEstimate& a, const volume::VolumeEstimate& b) {
    return a.volume <= b.volume + 3.0 * std::hypot(a.se, b.se);
  };
  r.pass = within(r.inner, r.middle) && within(r.middle, r.outer);
  return r;
}

SimplexDist random_restricted(core::RngStream& rng, std::size_t k, double m_simplex) {
  require(k >= 1 && m_simplex >= 0.0 && m_simplex * static_cast<double>(k) <= 1.0,
          "random_restricted: need 0 <= m <= 1/k");
  // Affine image of a flat Dirichlet: uniform on {p : min p >= m}.
  std::vector<double> e(k);
  double s = 0.0;
  for (auto& x : e) {
    x = -std::log1p(-rng.uniform());
    s += x;
  }
  const double free = 1.0 - m_simplex * static_cast<double>(k);
  double total = 0.0;
  for (std::size_t x = 0; x + 1 < k; ++x) {
    e[x] = m_simplex + free * e[x] / s;
    total += e[x];
  }
  e[k - 1] = std::max(m_simplex, 1.0 - total);
  return SimplexDist(std::move(e), m_simplex);
}

}  // namespace smdl::mdl
