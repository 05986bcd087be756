#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "testing.hpp"
#include "smdl/core/error.hpp"
#include "smdl/core/rng.hpp"
#include "smdl/mdl/mdl.hpp"
#include "smdl/zoo/categorical.hpp"

using namespace smdl;
using mdl::SimplexDist;

namespace {

bool throws_kind(ErrorKind kind, auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind() == kind;
  }
  return false;
}

SimplexDist bern(double p1, double floor = 0.0) { return SimplexDist({1.0 - p1, p1}, floor); }

mdl::NetConfig small_net() {
  mdl::NetConfig cfg;
  cfg.grid_per_axis = 401;
  cfg.mc_samples = 200000;
  return cfg;
}

// Bernoulli with KL(1/2 || 1/2 + δ) = target: -½ log(1 - 4δ²) = target.
double delta_for_kl(double target) { return 0.5 * std::sqrt(1.0 - std::exp(-2.0 * target)); }

}  // namespace

TEST_CASE("kl examples") {
  const auto q = bern(0.5);
  CHECK(mdl::kl(q, q) == 0.0);
  // 0.5 log(0.5/0.46) + 0.5 log(0.5/0.54), frozen from an independent evaluation.
  CHECK(rel_err(mdl::kl(q, bern(0.54)), 3.2102839014612e-3) <= 1e-10);

  const SimplexDist a({0.7, 0.2, 0.1}), b({0.2, 0.3, 0.5});
  CHECK(mdl::kl(a, b) > 0.0);
  CHECK(mdl::kl(b, a) > 0.0);
  CHECK(std::abs(mdl::kl(a, b) - mdl::kl(b, a)) > 1e-3);
  CHECK(throws_kind(ErrorKind::invalid_input, [&] { mdl::kl(a, q); }));
}

TEST_CASE("simplex distribution validation") {
  CHECK(throws_kind(ErrorKind::invalid_input, [] { SimplexDist({0.5, 0.6}); }));
  CHECK(throws_kind(ErrorKind::invalid_input, [] { SimplexDist({0.1, 0.9}, 0.2); }));
  CHECK(throws_kind(ErrorKind::invalid_input, [] { SimplexDist({}); }));
  CHECK_NOTHROW(SimplexDist({0.2, 0.8}, 0.2));
}

TEST_CASE("multinomial counts") {
  SUBCASE("small n matches the binomial pmf") {
    const std::vector<double> q{0.7, 0.3};
    const std::size_t trials = 200000;
    std::vector<double> freq(6, 0.0);
    core::RngStream rng(1, 0);
    for (std::size_t t = 0; t < trials; ++t) {
      const auto c = mdl::sample_counts(rng, q, 5);
      REQUIRE(c[0] + c[1] == 5);
      freq[c[1]] += 1.0;
    }
    const double pmf[] = {0.16807, 0.36015, 0.3087, 0.1323, 0.02835, 0.00243};
    for (int k = 0; k <= 5; ++k) {
      CAPTURE(k);
      const double f = freq[k] / trials;
      CHECK(std::abs(f - pmf[k]) <= 4.0 * std::sqrt(pmf[k] * (1 - pmf[k]) / trials));
    }
  }
  SUBCASE("large n moments over three outcomes") {
    const std::vector<double> q{0.2, 0.5, 0.3};
    const std::uint64_t n = 100000;
    const std::size_t trials = 20000;
    std::vector<double> s(3, 0.0), s2(3, 0.0);
    core::RngStream rng(2, 0);
    for (std::size_t t = 0; t < trials; ++t) {
      const auto c = mdl::sample_counts(rng, q, n);
      REQUIRE(c[0] + c[1] + c[2] == n);
      for (int x = 0; x < 3; ++x) {
        s[x] += static_cast<double>(c[x]);
        s2[x] += static_cast<double>(c[x]) * static_cast<double>(c[x]);
      }
    }
    for (int x = 0; x < 3; ++x) {
      CAPTURE(x);
      const double mean = s[x] / trials;
      const double var = s2[x] / trials - mean * mean;
      const double true_var = n * q[x] * (1 - q[x]);
      CHECK(std::abs(mean - n * q[x]) <= 4.0 * std::sqrt(true_var / trials));
      CHECK(rel_err(var, true_var) <= 0.05);
    }
  }
  SUBCASE("deterministic per stream") {
    const std::vector<double> q{0.5, 0.5};
    core::RngStream a(9, 4), b(9, 4);
    CHECK(mdl::sample_counts(a, q, 12345) == mdl::sample_counts(b, q, 12345));
  }
}

TEST_CASE("random restricted simplex draws") {
  core::RngStream rng(3, 0);
  std::vector<double> mean(3, 0.0);
  for (int i = 0; i < 20000; ++i) {
    const auto p = mdl::random_restricted(rng, 3, 0.2);
    for (int x = 0; x < 3; ++x) {
      REQUIRE(p[x] >= 0.2 - 1e-15);
      mean[x] += p[x] / 20000;
    }
  }
  for (double m : mean) CHECK(std::abs(m - 1.0 / 3.0) < 0.005);
}

TEST_CASE("eps-net with a tolerance above the image diameter is a single center") {
  const auto model = zoo::make_singular_bernoulli();
  const auto net = mdl::build_eps_net(*model, 1.0, 1, small_net());
  REQUIRE(net.size() == 1);
  CHECK(net.centers[0] == std::vector<double>{0.5, 0.5});
  CHECK(net.vr_volumes[0] == doctest::Approx(1.0));
  CHECK(net.code_lengths[0] == 0.0);
}

TEST_CASE("eps-net on the singular bernoulli model") {
  const auto model = zoo::make_singular_bernoulli();
  const auto net = mdl::build_eps_net(*model, 1e-3, 5, small_net());
  CHECK(net.audit_points == 10000);
  CHECK(net.size() > 5);
  CHECK(net.centers[0] == std::vector<double>{0.5, 0.5});

  const auto vmax = std::max_element(net.vr_volumes.begin(), net.vr_volumes.end());
  CHECK(vmax - net.vr_volumes.begin() == 0);
  const auto cmin = std::min_element(net.code_lengths.begin(), net.code_lengths.end());
  CHECK(cmin - net.code_lengths.begin() == 0);
  for (std::size_t j = 0; j < net.size(); ++j) {
    CAPTURE(j);
    CHECK(std::isfinite(net.code_lengths[j]));
    CHECK(net.code_lengths[j] > 0.0);
  }
  // The V^R sets cover W, so the Kraft sum is at least one up to Monte-Carlo error.
  // Ball overlap pushes it above one; the amount is reported, not asserted.
  MESSAGE("kraft sum " << net.kraft_sum());
  CHECK(net.kraft_sum() >= 1.0 - 1e-2);

  // Covering property on an independent uniform sample.
  core::RngStream rng(77, 0);
  std::size_t uncovered = 0;
  for (int i = 0; i < 20000; ++i) {
    const std::vector<double> w{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};
    if (mdl::covering_distance(net, model->distribution(w)) > 1e-3) ++uncovered;
  }
  CHECK(uncovered == 0);

  CHECK(mdl::build_eps_net(*model, 1e-3, 5, small_net()).vr_volumes == net.vr_volumes);
}

TEST_CASE("eps-net covering failure names a witness") {
  const auto model = zoo::make_singular_bernoulli();
  mdl::NetConfig coarse = small_net();
  coarse.grid_per_axis = 2;  // only the four corners
  coarse.max_refinements = 0;
  try {
    mdl::build_eps_net(*model, 1e-3, 1, coarse);
    FAIL("expected covering failure");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::covering_failure);
    CHECK(std::string(e.what()).find("w = (") != std::string::npos);
  }
  CHECK(throws_kind(ErrorKind::invalid_input, [&] { mdl::build_eps_net(*model, 0.0, 1, small_net()); }));
}

TEST_CASE("eps-net refines a grid that fails the audit") {
  const auto model = zoo::make_singular_bernoulli();
  mdl::NetConfig coarse = small_net();
  coarse.grid_per_axis = 3;
  coarse.max_refinements = 6;
  const auto net = mdl::build_eps_net(*model, 1e-3, 1, coarse);
  CHECK(net.grid_per_axis > 3);
  CHECK((net.grid_per_axis - 1) % 2 == 0);
  core::RngStream rng(78, 0);
  for (int i = 0; i < 20000; ++i) {
    const std::vector<double> w{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};
    REQUIRE(mdl::covering_distance(net, model->distribution(w)) <= 1e-3);
  }
}

TEST_CASE("nearest center breaks ties by lowest index") {
  mdl::EpsilonNet net;
  net.centers = {{0.4, 0.6}, {0.6, 0.4}, {0.4, 0.6}};
  CHECK(mdl::nearest_center(net, std::vector<double>{0.5, 0.5}) == 0);
  CHECK(mdl::nearest_center(net, std::vector<double>{0.39, 0.61}) == 0);
  CHECK(mdl::nearest_center(net, std::vector<double>{0.62, 0.38}) == 1);
}

TEST_CASE("two-part redundancy bookkeeping") {
  const auto model = zoo::make_singular_bernoulli();
  const std::vector<double> q{0.5, 0.5};
  const std::uint64_t n = 64;
  const double a = 1.0;
  const auto net = mdl::build_eps_net(*model, a / n, 3, small_net());

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto r = mdl::two_part_redundancy(*model, net, q, n, a, seed);
    CHECK(r.counts[0] + r.counts[1] == n);
    const auto& c = net.centers[r.center];
    const double excess = r.counts[0] * std::log(0.5 / c[0]) + r.counts[1] * std::log(0.5 / c[1]);
    CHECK(std::abs(r.excess - excess) <= 1e-12);
    CHECK(std::abs(r.redundancy - (r.code_length + r.excess)) <= 1e-12);
    CHECK(r.code_length == net.code_lengths[r.center]);
    CHECK(r.center == mdl::nearest_center(net, model->mle(r.counts)));
  }

  // Balanced data snaps to the uniform center, so the data term vanishes exactly.
  bool found = false;
  for (std::uint64_t seed = 0; seed < 200 && !found; ++seed) {
    const auto r = mdl::two_part_redundancy(*model, net, q, n, a, seed);
    if (r.counts[0] != r.counts[1]) continue;
    found = true;
    CHECK(r.center == 0);
    CHECK(r.excess == 0.0);
    CHECK(r.redundancy == net.code_lengths[0]);
  }
  CHECK(found);

  CHECK(throws_kind(ErrorKind::invalid_input, [&] { mdl::two_part_redundancy(*model, net, q, 2 * n, a, 0); }));
  const auto fresh = mdl::two_part_redundancy(*model, q, n, a, 4, 3, small_net());
  CHECK(fresh.redundancy == mdl::two_part_redundancy(*model, net, q, n, a, 4).redundancy);
}

TEST_CASE("redundancy and net csv") {
  mdl::RedundancyRun r;
  r.n = 64;
  r.a = 1;
  r.seed = 3;
  r.code_length = std::log(2.0);
  r.excess = 2 * std::log(2.0);
  r.redundancy = 3 * std::log(2.0);
  CHECK(mdl::redundancy_csv_header() == "n,a,seed,code_length_bits,excess_bits,redundancy_bits");
  CHECK(mdl::redundancy_csv_row(r) == "64,1,3,1,2,3");

  mdl::EpsilonNet net;
  net.centers = {{0.5, 0.5}};
  net.vr_volumes = {0.25};
  net.code_lengths = {std::log(4.0)};
  CHECK(mdl::net_csv(net) == "center,p1,vr_volume,code_length_bits\n0,0.5,0.25,2\n");
}

TEST_CASE("kl sandwich audit") {
  const double m = 0.2;
  const auto q = SimplexDist({0.3, 0.3, 0.4}, m);
  const auto same = mdl::validate_kl_l2(q, q, m);
  CHECK(same.lower == 0.0);
  CHECK(same.value == 0.0);
  CHECK(same.upper == 0.0);
  CHECK(same.pass);

  core::RngStream rng(11, 0);
  std::size_t violations = 0;
  double best_ratio = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const auto a = mdl::random_restricted(rng, 3, m), b = mdl::random_restricted(rng, 3, m);
    const auto c = mdl::validate_kl_l2(a, b, m);
    if (!c.pass) ++violations;
    if (c.lower > 0.0) best_ratio = std::max(best_ratio, c.value / (2.0 * c.lower));
  }
  CHECK(violations == 0);
  // Some pair has KL / ‖p−q‖² strictly above ½, so the lower constant is not tight.
  CHECK(best_ratio > 0.5 * 1.05);

  CHECK(throws_kind(ErrorKind::invalid_input,
                    [&] { mdl::validate_kl_l2(SimplexDist({0.1, 0.45, 0.45}), q, m); }));
}

TEST_CASE("pseudo-triangle audit") {
  const double m = 0.2;
  const auto q = SimplexDist({0.3, 0.3, 0.4}, m), p = SimplexDist({0.5, 0.25, 0.25}, m);
  CHECK(mdl::validate_triangle(q, p, p, m).value == 0.0);
  CHECK(mdl::validate_triangle(q, p, p, m).pass);
  const auto deg = mdl::validate_triangle(q, q, q, m);
  CHECK(deg.value == 0.0);
  CHECK(deg.upper == 0.0);
  CHECK(deg.pass);

  core::RngStream rng(12, 0);
  std::size_t violations = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto a = mdl::random_restricted(rng, 3, m), b = mdl::random_restricted(rng, 3, m),
               c = mdl::random_restricted(rng, 3, m);
    if (!mdl::validate_triangle(a, b, c, m).pass) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("log-ratio variance audit") {
  const auto q = bern(0.5);
  const auto same = mdl::validate_variance_bound(q, q);
  CHECK(same.lower == 0.0);
  CHECK(same.value == 0.0);
  CHECK(same.upper == 0.0);

  // Two-point variance with equal weights: ¼ (ℓ(1) − ℓ(0))².
  const auto p = bern(0.54);
  const double l1 = std::log(0.5 / 0.54), l0 = std::log(0.5 / 0.46);
  const auto c = mdl::validate_variance_bound(q, p);
  CHECK(rel_err(c.value, 0.25 * (l1 - l0) * (l1 - l0)) <= 1e-12);
  CHECK(c.lower <= c.value);
  CHECK(c.value <= c.upper);
  CHECK(c.pass);

  core::RngStream rng(13, 0);
  std::size_t violations = 0;
  for (int i = 0; i < 10000; ++i)
    if (!mdl::validate_variance_bound(mdl::random_restricted(rng, 3, 0.2), mdl::random_restricted(rng, 3, 0.2)).pass)
      ++violations;
  CHECK(violations == 0);
}

TEST_CASE("K_n fluctuation audit") {
  const auto q = bern(0.5);
  const auto zero = mdl::validate_kn_fluctuation(q, q, 1000, 100, 1);
  CHECK(zero.mean == 0.0);
  CHECK(zero.p99_abs == 0.0);

  std::vector<double> p99;
  for (std::uint64_t n : {1000, 10000, 100000}) {
    CAPTURE(n);
    const auto p = bern(0.5 + delta_for_kl(1.0 / n));
    CHECK(rel_err(mdl::kl(q, p), 1.0 / n) <= 1e-9);
    const auto r = mdl::validate_kn_fluctuation(q, p, n, 10000, 21);
    CHECK(std::abs(r.mean) <= 3.0 * r.se);
    CHECK(r.pass);
    p99.push_back(r.p99_abs);
  }
  MESSAGE("p99 " << p99[0] << " " << p99[1] << " " << p99[2]);
  CHECK(*std::max_element(p99.begin(), p99.end()) < 2.0 * *std::min_element(p99.begin(), p99.end()));

  const auto p = bern(0.5 + delta_for_kl(1e-3));
  CHECK(mdl::validate_kn_fluctuation(q, p, 1000, 500, 4, kernels::Exec::serial).p99_abs ==
        mdl::validate_kn_fluctuation(q, p, 1000, 500, 4, kernels::Exec::parallel).p99_abs);
}

TEST_CASE("volume inclusion sandwich") {
  const auto model = zoo::make_singular_bernoulli();
  const auto q = SimplexDist(model->truth());

  const auto full = mdl::validate_volume_inclusions(*model, q, q, 10.0, 100000, 1);
  CHECK(full.inner.volume == 1.0);
  CHECK(full.middle.volume == 1.0);
  CHECK(full.outer.volume == 1.0);
  CHECK(full.c == doctest::Approx(5.0));

  const auto at_q = mdl::validate_volume_inclusions(*model, q, q, 1e-2, 1000000, 2);
  CHECK(at_q.pass);
  CHECK(at_q.inner.volume <= at_q.middle.volume);
  CHECK(at_q.middle.volume <= at_q.outer.volume);

  const auto p_star = bern(0.5 + delta_for_kl(0.5e-3));
  const auto off = mdl::validate_volume_inclusions(*model, q, p_star, 1e-3, 1000000, 3);
  CHECK(off.pass);
  CHECK(off.inner.volume <= off.middle.volume);
  CHECK(off.middle.volume <= off.outer.volume);

  CHECK(throws_kind(ErrorKind::invalid_input,
                    [&] { mdl::validate_volume_inclusions(*model, q, bern(0.6), 1e-3, 1000, 3); }));
}
