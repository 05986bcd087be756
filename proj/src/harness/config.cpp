#include "smdl/harness/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "smdl/core/error.hpp"
#include "smdl/zoo/categorical.hpp"

namespace smdl::harness {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& key, const std::string& what) {
  fail(ErrorKind::config, "config: key '" + key + "' " + what);
}

// View of one JSON object that records which keys were read, so leftovers can be
// reported as unknown.
class Node {
 public:
  Node(const json* j, std::string path) : j_(j), path_(std::move(path)) {
    if (j_ && !j_->is_object()) fail(ErrorKind::config, "config: key '" + display() + "' must be an object");
  }

  std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

  const json* find(const std::string& k) {
    if (!j_) return nullptr;
    const auto it = j_->find(k);
    if (it == j_->end()) return nullptr;
    used_.insert(k);
    return &*it;
  }

  Node child(const std::string& k) { return Node(find(k), key(k)); }
  bool present(const std::string& k) const { return j_ && j_->contains(k); }

  void number(const std::string& k, double& out, double lo = -std::numeric_limits<double>::infinity(),
              bool lo_open = false) {
    if (const auto* v = find(k)) out = as_number(*v, key(k));
    check_lo(k, out, lo, lo_open);
  }

  template <class U>
  void integer(const std::string& k, U& out, long long lo = 0) {
    if (const auto* v = find(k)) out = static_cast<U>(as_integer(*v, key(k), lo));
  }

  void string(const std::string& k, std::string& out) {
    if (const auto* v = find(k)) {
      if (!v->is_string()) config_error(key(k), "must be a string");
      out = v->get<std::string>();
    }
  }

  void boolean(const std::string& k, bool& out) {
    if (const auto* v = find(k)) {
      if (!v->is_boolean()) config_error(key(k), "must be true or false");
      out = v->get<bool>();
    }
  }

  void numbers(const std::string& k, std::vector<double>& out, double lo, bool lo_open, bool nonempty = true) {
    if (const auto* v = find(k)) {
      if (!v->is_array()) config_error(key(k), "must be an array of numbers");
      out.clear();
      for (std::size_t i = 0; i < v->size(); ++i) out.push_back(as_number((*v)[i], key(k) + "[" + std::to_string(i) + "]"));
      for (double x : out) check_lo(k, x, lo, lo_open);
    }
    if (nonempty && out.empty()) config_error(key(k), "must not be empty");
  }

  template <class U>
  void integers(const std::string& k, std::vector<U>& out, long long lo = 0, bool nonempty = false) {
    if (const auto* v = find(k)) {
      if (!v->is_array()) config_error(key(k), "must be an array of integers");
      out.clear();
      for (std::size_t i = 0; i < v->size(); ++i)
        out.push_back(static_cast<U>(as_integer((*v)[i], key(k) + "[" + std::to_string(i) + "]", lo)));
    }
    if (nonempty && out.empty()) config_error(key(k), "must not be empty");
  }

  void finish() const {
    if (!j_) return;
    for (const auto& [k, v] : j_->items())
      if (!used_.count(k)) config_error(key(k), "is not a recognized setting");
  }

 private:
  std::string display() const { return path_.empty() ? "<root>" : path_; }

  static double as_number(const json& v, const std::string& k) {
    if (!v.is_number()) config_error(k, "must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) config_error(k, "must be finite");
    return x;
  }

  static long long as_integer(const json& v, const std::string& k, long long lo) {
    if (!v.is_number_integer()) config_error(k, "must be an integer");
    const long long x = v.get<long long>();
    if (x < lo) config_error(k, "must be at least " + std::to_string(lo));
    return x;
  }

  void check_lo(const std::string& k, double x, double lo, bool lo_open) const {
    if (lo_open ? !(x > lo) : !(x >= lo)) {
      std::ostringstream os;
      os << "must be " << (lo_open ? "greater than " : "at least ") << lo;
      config_error(key(k), os.str());
    }
  }

  const json* j_;
  std::string path_;
  std::set<std::string> used_;
};

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

LandscapeSpec read_landscape(Node n) {
  LandscapeSpec s;
  n.string("kind", s.kind);
  if (s.kind != "quadratic" && s.kind != "normal_crossing" && s.kind != "bernoulli_kl")
    config_error(n.key("kind"), "must be one of quadratic, normal_crossing, bernoulli_kl");
  n.integer("d", s.d, 1);
  n.integers("exponents", s.exponents, 1);
  n.integers("active", s.active, 0);
  s.bound = s.kind == "bernoulli_kl" ? 0.5 : 1.0;
  n.number("bound", s.bound, 0.0, true);
  if (s.kind == "normal_crossing") {
    if (s.exponents.size() != s.d) config_error(n.key("exponents"), "must have one entry per dimension d");
    if (s.active.empty()) config_error(n.key("active"), "must list at least one coordinate");
    for (auto a : s.active)
      if (a >= s.d) config_error(n.key("active"), "indices must be below d");
  }
  if (s.kind == "bernoulli_kl") s.d = 2;
  n.finish();
  return s;
}

}  // namespace

std::string LandscapeSpec::label() const {
  if (kind == "quadratic") return "quadratic_d" + std::to_string(d);
  if (kind == "bernoulli_kl") return "bernoulli_kl";
  std::string s = "normal_crossing_k";
  for (std::size_t i = 0; i < active.size(); ++i) s += (i ? "-" : "") + std::to_string(exponents[active[i]]);
  return s;
}

zoo::LandscapePtr make_landscape(const LandscapeSpec& spec) {
  const auto box = zoo::Box::cube(spec.d, -spec.bound, spec.bound);
  if (spec.kind == "quadratic") return zoo::make_quadratic(spec.d, box);
  if (spec.kind == "normal_crossing") return zoo::make_normal_crossing({spec.exponents, spec.active}, box);
  if (spec.kind == "bernoulli_kl") return zoo::make_kl_landscape(zoo::make_singular_bernoulli(box));
  fail(ErrorKind::config, "config: unknown landscape kind '" + spec.kind + "'");
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExperimentConfig parse_config(const std::string& text, const Overrides& overrides) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::config, std::string("config: malformed JSON: ") + e.what());
  }
  if (!root.is_object()) fail(ErrorKind::config, "config: top level must be an object");
  if (overrides.seed) root["seed"] = *overrides.seed;
  if (overrides.output_dir) root["output_dir"] = *overrides.output_dir;
  if (overrides.epsilons) root["epsilons"] = *overrides.epsilons;

  ExperimentConfig c;
  // Where outputs land does not define the experiment, so it stays out of the hash.
  json identity = root;
  identity.erase("output_dir");
  c.canonical_json = identity.dump();
  c.hash = fnv1a(c.canonical_json);
  Node top(&root, "");

  {
    auto n = top.child("model");
    n.integers("layers", c.model.layers, 1);
    if (c.model.layers.size() < 2) config_error("model.layers", "needs at least input and output sizes");
    std::string act = "tanh", loss = "mse";
    n.string("activation", act);
    n.string("loss", loss);
    if (act != "tanh" && act != "identity") config_error("model.activation", "must be tanh or identity");
    if (loss != "mse" && loss != "cross_entropy") config_error("model.loss", "must be mse or cross_entropy");
    c.model.activation = act == "tanh" ? zoo::Activation::tanh : zoo::Activation::identity;
    c.model.loss = loss == "mse" ? zoo::LossKind::mse : zoo::LossKind::cross_entropy;
    n.finish();
  }
  {
    auto n = top.child("data");
    n.integer("samples", c.data.samples, 1);
    n.number("weight_scale", c.data.weight_scale, 0.0, true);
    n.number("output_noise", c.data.output_noise, 0.0);
    n.integer("seed", c.data.seed, 0);
    n.finish();
  }
  {
    auto n = top.child("training");
    n.integer("steps", c.training.steps, 1);
    n.number("learning_rate", c.training.learning_rate, 0.0, true);
    n.integer("batch_size", c.training.batch_size, 1);
    n.number("init_scale", c.training.init_scale, 0.0, true);
    n.integers("schedule", c.training.schedule, 0);
    for (auto s : c.training.schedule)
      if (s > c.training.steps) config_error("training.schedule", "entries must not exceed training.steps");
    if (c.training.schedule.empty()) c.training.schedule = {c.training.steps};
    n.finish();
  }
  {
    auto n = top.child("llc");
    n.number("beta_n", c.llc.beta_n, 0.0, true);
    n.number("gamma", c.llc.gamma, 0.0);
    n.number("step_size", c.llc.step_size, 0.0, true);
    n.integer("chains", c.llc.chains, 1);
    n.integer("steps_per_chain", c.llc.steps_per_chain, 1);
    if (n.present("burn_in")) {
      std::size_t b = 0;
      n.integer("burn_in", b, 0);
      c.llc.burn_in = b;
    }
    n.integer("batch_size", c.llc.batch_size, 0);
    n.integer("baseline_batches", c.llc.baseline_batches, 0);
    std::string pre = "none";
    n.string("preconditioner", pre);
    if (pre != "none" && pre != "rmsprop") config_error("llc.preconditioner", "must be none or rmsprop");
    c.llc.preconditioner = pre == "none" ? llc::Preconditioner::none : llc::Preconditioner::rmsprop;
    n.number("rms_decay", c.llc.rms_decay, 0.0);
    n.finish();
    try {
      c.llc.validate();
    } catch (const Error& e) {
      fail(ErrorKind::config, std::string("config: section 'llc': ") + e.what());
    }
  }
  {
    auto n = top.child("quantize");
    std::string mode = "loss_minimized";
    n.string("mode", mode);
    if (mode != "loss_minimized" && mode != "max_abs") config_error("quantize.mode", "must be loss_minimized or max_abs");
    c.quantize.critical.mode = mode == "max_abs" ? compress::MMode::max_abs : compress::MMode::loss_minimized;
    n.integer("nq_cap", c.quantize.critical.nq_cap, 4);
    n.integer("grid_points", c.quantize.critical.m_search.grid_points, 2);
    n.number("lo_fraction", c.quantize.critical.m_search.lo_fraction, 0.0, true);
    n.number("relative_tolerance", c.quantize.critical.m_search.relative_tolerance, 0.0, true);
    n.integers("curve", c.quantize.curve, 4);
    for (auto q : c.quantize.curve)
      if (q % 2) config_error("quantize.curve", "entries must be even");
    n.finish();
  }
  {
    auto n = top.child("factorize");
    n.integers("layers", c.factorize.layers, 0);
    n.finish();
  }
  {
    auto n = top.child("noise");
    std::string mode = "relative";
    n.string("mode", mode);
    if (mode != "relative" && mode != "absolute") config_error("noise.mode", "must be relative or absolute");
    c.noise.mode = mode == "relative" ? compress::NoiseMode::relative : compress::NoiseMode::absolute;
    n.integer("draws", c.noise.search.draws, 1);
    n.number("sigma_lo", c.noise.search.sigma_lo, 0.0, true);
    n.number("sigma_hi", c.noise.search.sigma_hi, c.noise.search.sigma_lo, true);
    n.number("relative_tolerance", c.noise.search.relative_tolerance, 0.0, true);
    n.numbers("curve", c.noise.curve, 0.0, true);
    n.finish();
  }
  {
    auto n = top.child("prune");
    n.numbers("fractions", c.prune.fractions, 0.0, true);
    for (double p : c.prune.fractions)
      if (p > 1.0) config_error("prune.fractions", "entries must lie in (0, 1]");
    n.integer("retrain_steps", c.prune.retrain_steps, 0);
    n.finish();
  }
  {
    auto n = top.child("volume");
    if (const auto* ls = n.find("landscapes")) {
      if (!ls->is_array() || ls->empty()) config_error("volume.landscapes", "must be a non-empty array");
      for (std::size_t i = 0; i < ls->size(); ++i)
        c.volume.landscapes.push_back(read_landscape(Node(&(*ls)[i], "volume.landscapes[" + std::to_string(i) + "]")));
    } else {
      c.volume.landscapes = {{"quadratic", 2, {}, {}, 1.0},
                             {"normal_crossing", 2, {1, 1}, {0}, 1.0},
                             {"normal_crossing", 2, {1, 2}, {0, 1}, 2.0}};
    }
    n.integer("ladder_lo", c.volume.ladder_lo, 0);
    n.integer("ladder_hi", c.volume.ladder_hi, 0);
    if (c.volume.ladder_hi < c.volume.ladder_lo) config_error("volume.ladder_hi", "must be at least volume.ladder_lo");
    n.integer("samples", c.volume.samples, 1);
    if (n.present("multiplicity")) {
      int m = 1;
      n.integer("multiplicity", m, 1);
      if (m > 3) config_error("volume.multiplicity", "must be 1, 2 or 3");
      c.volume.multiplicity = m;
    }
    n.numbers("bits_epsilons", c.volume.bits_epsilons, 0.0, true);
    for (double e : c.volume.bits_epsilons)
      if (e >= 1.0) config_error("volume.bits_epsilons", "entries must lie in (0, 1)");
    n.finish();
  }
  {
    auto n = top.child("mdl");
    n.integers("ns", c.mdl.ns, 1, true);
    n.number("a", c.mdl.a, 0.0, true);
    n.integer("seeds", c.mdl.seeds, 1);
    n.integer("grid_per_axis", c.mdl.net.grid_per_axis, 2);
    n.integer("mc_samples", c.mdl.net.mc_samples, 1);
    n.integer("audit_samples", c.mdl.net.audit_samples, 0);
    n.number("cover_margin", c.mdl.net.cover_margin, 0.0);
    if (c.mdl.net.cover_margin >= 1.0) config_error("mdl.cover_margin", "must lie in [0, 1)");
    n.integer("max_refinements", c.mdl.net.max_refinements, 0);
    n.finish();
  }
  {
    auto n = top.child("audit");
    n.integer("instances", c.audit.instances, 1);
    n.number("m_simplex", c.audit.m_simplex, 0.0, true);
    n.integer("outcomes", c.audit.outcomes, 2);
    if (c.audit.m_simplex * static_cast<double>(c.audit.outcomes) > 1.0)
      config_error("audit.m_simplex", "must be at most 1 / audit.outcomes");
    n.integer("inclusion_configs", c.audit.inclusion_configs, 0);
    n.integer("inclusion_samples", c.audit.inclusion_samples, 1);
    n.integers("fluctuation_ns", c.audit.fluctuation_ns, 1);
    n.integer("fluctuation_trials", c.audit.fluctuation_trials, 2);
    n.finish();
  }
  {
    auto n = top.child("analyze");
    n.string("scheme", c.analyze.scheme);
    if (c.analyze.scheme != "quantize" && c.analyze.scheme != "factorize" && c.analyze.scheme != "noise" &&
        c.analyze.scheme != "prune")
      config_error("analyze.scheme", "must be quantize, factorize, noise or prune");
    n.string("sweep_csv", c.analyze.sweep_csv);
    n.string("llc_csv", c.analyze.llc_csv);
    n.integers("exclude_steps", c.analyze.exclude_steps, 0);
    n.boolean("gnuplot", c.analyze.gnuplot);
    n.finish();
  }
  top.numbers("epsilons", c.epsilons, 0.0, true);
  top.integer("seed", c.seed, 0);
  top.string("output_dir", c.output_dir);
  if (c.output_dir.empty()) config_error("output_dir", "must not be empty");
  top.finish();
  c.training.seed = c.seed;
  return c;
}

ExperimentConfig load_config(const std::string& path, const Overrides& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::config, "config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), overrides);
}

}  // namespace smdl::harness
