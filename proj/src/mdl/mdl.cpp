#include "smdl/mdl/mdl.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numbers>
#include <unordered_set>

#include "smdl/core/error.hpp"
#include "smdl/harness/format.hpp"
#include "smdl/kernels/sublevel.hpp"

namespace smdl::mdl {

// ---- restricted simplex ---------------------------------------------------------------

SimplexDist::SimplexDist(std::vector<double> probs, double floor) : p_(std::move(probs)), floor_(floor) {
  require(!p_.empty(), "simplex distribution: empty outcome space");
  require(floor_ >= 0.0 && floor_ * static_cast<double>(p_.size()) <= 1.0 + 1e-12,
          "simplex distribution: floor must lie in [0, 1/|X|]");
  double s = 0.0;
  for (double x : p_) {
    require(std::isfinite(x), "simplex distribution: non-finite probability");
    require(x >= floor_ - 1e-15, "simplex distribution: entry " + harness::fmt_double(x) + " below floor " +
                                     harness::fmt_double(floor_));
    s += x;
  }
  require(std::abs(s - 1.0) <= 1e-12, "simplex distribution: entries sum to " + harness::fmt_double(s));
}

double kl(const SimplexDist& q, const SimplexDist& p) {
  require(q.size() == p.size(), "kl: distributions live on different outcome spaces");
  return zoo::kl_divergence(q.probs(), p.probs());
}

namespace {

// log Γ(x) for x > 0 by upward recurrence and the Stirling series (abs error < 1e-14).
// Kept local so concurrent callers never touch the global `signgam` written by lgamma.
double log_gamma(double x) {
  double shift = 0.0;
  while (x < 10.0) {
    shift -= std::log(x);
    x += 1.0;
  }
  const double z = 1.0 / (x * x);
  const double series =
      (1.0 / 12.0 - z * (1.0 / 360.0 - z * (1.0 / 1260.0 - z * (1.0 / 1680.0 - z / 1188.0)))) / x;
  return shift + (x - 0.5) * std::log(x) - x + 0.5 * std::log(2.0 * std::numbers::pi) + series;
}

// Exact binomial draw by inversion over values ordered outward from the mode.
std::uint64_t binomial(core::RngStream& rng, std::uint64_t n, double p) {
  if (n == 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  const double nd = static_cast<double>(n);
  const auto mode = std::min<std::uint64_t>(n, static_cast<std::uint64_t>(std::floor((nd + 1.0) * p)));
  const double md = static_cast<double>(mode);
  const double log_pmf = log_gamma(nd + 1.0) - log_gamma(md + 1.0) - log_gamma(nd - md + 1.0) + md * std::log(p) +
                         (nd - md) * std::log1p(-p);
  const double odds = p / (1.0 - p);
  const double u = rng.uniform();
  double pm = std::exp(log_pmf);
  double acc = pm;
  if (u < acc) return mode;
  std::uint64_t lo = mode, hi = mode;
  double p_lo = pm, p_hi = pm;
  while (lo > 0 || hi < n) {
    if (hi < n) {
      p_hi *= static_cast<double>(n - hi) / static_cast<double>(hi + 1) * odds;
      ++hi;
      acc += p_hi;
      if (u < acc) return hi;
    }
    if (lo > 0) {
      p_lo *= static_cast<double>(lo) / static_cast<double>(n - lo + 1) / odds;
      --lo;
      acc += p_lo;
      if (u < acc) return lo;
    }
  }
  return mode;  // only reachable through rounding in the accumulated mass
}

}  // namespace

std::vector<std::uint64_t> sample_counts(core::RngStream& rng, std::span<const double> q, std::uint64_t n) {
  require(!q.empty(), "sample_counts: empty distribution");
  std::vector<std::uint64_t> counts(q.size(), 0);
  std::uint64_t left = n;
  double rest = 1.0;
  for (std::size_t x = 0; x + 1 < q.size() && left > 0; ++x) {
    const double p = rest > 0.0 ? std::clamp(q[x] / rest, 0.0, 1.0) : 1.0;
    counts[x] = binomial(rng, left, p);
    left -= counts[x];
    rest -= q[x];
  }
  counts.back() += left;
  return counts;
}

// ---- epsilon-net ----------------------------------------------------------------------

double EpsilonNet::kraft_sum() const {
  double s = 0.0;
  for (double v : vr_volumes) s += v / box_volume;
  return s;
}

std::size_t EpsilonNet::zero_volume_centers() const {
  return static_cast<std::size_t>(std::count(vr_volumes.begin(), vr_volumes.end(), 0.0));
}

namespace {

// KL(p || c) from precomputed log p and log c.
double kl_logs(std::span<const double> p, std::span<const double> log_p, std::span<const double> log_c) {
  double s = 0.0;
  for (std::size_t x = 0; x < p.size(); ++x)
    if (p[x] > 0.0) s += p[x] * (log_p[x] - log_c[x]);
  return std::max(s, 0.0);
}

std::vector<double> logs(std::span<const double> p) {
  std::vector<double> out(p.size());
  for (std::size_t x = 0; x < p.size(); ++x) out[x] = std::log(p[x]);
  return out;
}

std::string point_string(std::span<const double> w) {
  std::string s = "(";
  for (std::size_t i = 0; i < w.size(); ++i) s += (i ? ", " : "") + harness::fmt_double(w[i]);
  return s + ")";
}

constexpr std::uint64_t kAuditStream = 1ULL << 62;

}  // namespace

namespace {

struct Candidates {
  std::vector<double> img, log_img;
  std::size_t count = 0;
};

// Pushforward of a g^d grid over the box, deduplicated on a lattice in p far finer than
// the ε-balls. First occurrence wins, so candidate order follows grid order.
Candidates pushforward(const zoo::CategoricalModel& model, std::size_t g, double epsilon) {
  const auto& box = model.bounds();
  const std::size_t d = box.dimension();
  const std::size_t k = model.outcome_count();
  double total = 1.0;
  for (std::size_t i = 0; i < d; ++i) total *= static_cast<double>(g);
  require(total <= static_cast<double>(1 << 24), "eps-net: pushforward grid too large");
  const auto count = static_cast<std::size_t>(total);
  const double h = 1e-3 * std::sqrt(epsilon);

  Candidates c;
  std::unordered_set<std::string> seen;
  std::vector<double> w(d), p(k);
  std::string key(k * sizeof(std::int64_t), '\0');
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t r = i;
    for (std::size_t j = 0; j < d; ++j) {
      const std::size_t idx = r % g;
      r /= g;
      w[j] = box.lo(j) + (box.hi(j) - box.lo(j)) * static_cast<double>(idx) / static_cast<double>(g - 1);
    }
    model.distribution(w, p);
    for (std::size_t x = 0; x < k; ++x) {
      const std::int64_t q = std::llround(p[x] / h);
      std::memcpy(key.data() + x * sizeof q, &q, sizeof q);
    }
    if (!seen.insert(key).second) continue;
    for (std::size_t x = 0; x < k; ++x) {
      c.img.push_back(p[x]);
      c.log_img.push_back(std::log(p[x]));
    }
    ++c.count;
  }
  return c;
}

// Greedy farthest-point covering of the candidates down to `radius`.
std::vector<std::vector<double>> greedy_cover(const zoo::CategoricalModel& model, const Candidates& c,
                                              double radius) {
  const std::size_t k = model.outcome_count();
  auto cand = [&](const std::vector<double>& v, std::size_t i) { return std::span<const double>(v).subspan(i * k, k); };
  std::vector<std::vector<double>> centers;
  std::vector<double> dist(c.count, std::numeric_limits<double>::infinity());
  auto add_center = [&](std::vector<double> ctr) {
    const auto lc = logs(ctr);
    for (std::size_t i = 0; i < c.count; ++i)
      dist[i] = std::min(dist[i], kl_logs(cand(c.img, i), cand(c.log_img, i), lc));
    centers.push_back(std::move(ctr));
  };
  add_center(model.distribution(model.bounds().center()));
  for (;;) {
    // First maximum, so ties pick the lowest candidate index.
    const auto it = std::max_element(dist.begin(), dist.end());
    if (*it <= radius) break;
    const auto ci = cand(c.img, static_cast<std::size_t>(it - dist.begin()));
    add_center({ci.begin(), ci.end()});
  }
  return centers;
}

}  // namespace

EpsilonNet build_eps_net(const zoo::CategoricalModel& model, double epsilon, std::uint64_t seed,
                         const NetConfig& cfg) {
  require(epsilon > 0.0 && std::isfinite(epsilon), "eps-net: epsilon must be positive");
  require(cfg.grid_per_axis >= 2, "eps-net: grid needs at least 2 points per axis");
  require(cfg.mc_samples >= 1, "eps-net: mc_samples must be positive");
  require(cfg.cover_margin >= 0.0 && cfg.cover_margin < 1.0, "eps-net: cover_margin must lie in [0, 1)");
  const auto& box = model.bounds();
  const std::size_t d = box.dimension();
  const std::size_t k = model.outcome_count();

  EpsilonNet net;
  net.epsilon = epsilon;
  net.box_volume = box.volume();
  net.mc_samples = cfg.mc_samples;

  // Covering with audit; a failed audit refines the grid (nested, g -> 2g - 1) while allowed.
  std::size_t g = cfg.grid_per_axis;
  for (std::size_t round = 0;; ++round) {
    net.centers = greedy_cover(model, pushforward(model, g, epsilon), epsilon * (1.0 - cfg.cover_margin));
    net.grid_per_axis = g;
    core::RngStream rng(seed, kAuditStream);
    std::vector<double> w(d), p(k);
    std::string witness;
    for (std::size_t a = 0; a < cfg.audit_samples && witness.empty(); ++a) {
      for (std::size_t j = 0; j < d; ++j) w[j] = rng.uniform(box.lo(j), box.hi(j));
      model.distribution(w, p);
      const double dd = covering_distance(net, p);
      if (dd > epsilon)
        witness = "eps-net covering failure: w = " + point_string(w) + " is at KL " + harness::fmt_double(dd) +
                  " > epsilon " + harness::fmt_double(epsilon);
    }
    if (witness.empty()) break;
    double next = 1.0;
    for (std::size_t i = 0; i < d; ++i) next *= static_cast<double>(2 * g - 1);
    if (round >= cfg.max_refinements || next > static_cast<double>(1 << 24))
      fail(ErrorKind::covering_failure, witness);
    g = 2 * g - 1;
  }
  net.audit_points = cfg.audit_samples;

  // V^R for every center on one shared sample.
  const std::size_t nc = net.centers.size();
  std::vector<std::vector<double>> log_c(nc);
  for (std::size_t j = 0; j < nc; ++j) log_c[j] = logs(net.centers[j]);
  const kernels::MultiField field = [&](std::span<const double> w, std::span<double> out) {
    std::vector<double> p(k), lp(k);
    model.distribution(w, p);
    for (std::size_t x = 0; x < k; ++x) lp[x] = std::log(p[x]);
    for (std::size_t j = 0; j < nc; ++j) out[j] = kl_logs(p, lp, log_c[j]);
  };
  const std::vector<double> thresholds{epsilon};
  const auto hits = kernels::count_sublevel(box, nc, field, thresholds, cfg.mc_samples, seed, cfg.exec);
  for (std::size_t j = 0; j < nc; ++j) {
    const auto v = volume::volume_from_hits(hits[j], cfg.mc_samples, net.box_volume);
    net.vr_volumes.push_back(v.volume);
    net.vr_standard_errors.push_back(v.se);
    net.code_lengths.push_back(v.volume > 0.0 ? std::log(net.box_volume / v.volume)
                                              : std::numeric_limits<double>::infinity());
  }
  return net;
}

std::size_t nearest_center(const EpsilonNet& net, std::span<const double> p) {
  require(!net.centers.empty(), "eps-net: no centers");
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < net.centers.size(); ++j) {
    const double d = zoo::kl_divergence(p, net.centers[j]);
    if (d < best_d) best_d = d, best = j;
  }
  return best;
}

double covering_distance(const EpsilonNet& net, std::span<const double> p) {
  return zoo::kl_divergence(p, net.centers.at(nearest_center(net, p)));
}

std::string net_csv(const EpsilonNet& net) {
  std::string s = "center,p1,vr_volume,code_length_bits\n";
  for (std::size_t j = 0; j < net.size(); ++j)
    s += std::to_string(j) + "," + harness::fmt_double(net.centers[j].size() > 1 ? net.centers[j][1] : 0.0) + "," +
         harness::fmt_double(net.vr_volumes[j]) + "," + harness::fmt_double(to_bits(net.code_lengths[j])) + "\n";
  return s;
}

// ---- two-part code --------------------------------------------------------------------

RedundancyRun two_part_redundancy(const zoo::CategoricalModel& model, const EpsilonNet& net,
                                  std::span<const double> q, std::uint64_t n, double a, std::uint64_t seed) {
  require(n >= 1, "redundancy: n must be positive");
  require(a > 0.0, "redundancy: grid constant a must be positive");
  require(q.size() == model.outcome_count(), "redundancy: q lives on a different outcome space");
  const double eps = a / static_cast<double>(n);
  require(std::abs(net.epsilon - eps) <= 1e-12 * eps, "redundancy: net was built for a different epsilon");

  RedundancyRun r;
  r.n = n;
  r.a = a;
  r.seed = seed;
  core::RngStream rng(seed, 0);
  r.counts = sample_counts(rng, q, n);
  const auto p_hat = model.mle(r.counts);
  r.center = nearest_center(net, p_hat);
  r.code_length = net.code_lengths[r.center];
  if (!std::isfinite(r.code_length))
    fail(ErrorKind::insufficient_data, "redundancy: V^R of the selected center has no Monte-Carlo hits");
  const auto& c = net.centers[r.center];
  double excess = 0.0;
  for (std::size_t x = 0; x < q.size(); ++x)
    if (r.counts[x] > 0) excess += static_cast<double>(r.counts[x]) * std::log(q[x] / c[x]);
  r.excess = excess;
  r.redundancy = r.code_length + r.excess;
  return r;
}

RedundancyRun two_part_redundancy(const zoo::CategoricalModel& model, std::span<const double> q, std::uint64_t n,
                                  double a, std::uint64_t seed, std::uint64_t net_seed, const NetConfig& cfg) {
  require(n >= 1 && a > 0.0, "redundancy: need n >= 1 and a > 0");
  const auto net = build_eps_net(model, a / static_cast<double>(n), net_seed, cfg);
  return two_part_redundancy(model, net, q, n, a, seed);
}

std::string redundancy_csv_header() { return "n,a,seed,code_length_bits,excess_bits,redundancy_bits"; }

std::string redundancy_csv_row(const RedundancyRun& r) {
  return std::to_string(r.n) + "," + harness::fmt_double(r.a) + "," + std::to_string(r.seed) + "," +
         harness::fmt_double(to_bits(r.code_length)) + "," + harness::fmt_double(to_bits(r.excess)) + "," +
         harness::fmt_double(to_bits(r.redundancy));
}

}  // namespace smdl::mdl
