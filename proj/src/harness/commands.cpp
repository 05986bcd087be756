#include "smdl/harness/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>

#include "smdl/compress/compress.hpp"
#include "smdl/core/error.hpp"
#include "smdl/core/rng.hpp"
#include "smdl/harness/analysis.hpp"
#include "smdl/harness/format.hpp"
#include "smdl/kernels/dataset_loss.hpp"
#include "smdl/llc/llc.hpp"
#include "smdl/mdl/mdl.hpp"
#include "smdl/volume/volume.hpp"
#include "smdl/zoo/categorical.hpp"
#include "smdl/zoo/mlp.hpp"

namespace smdl::harness {

namespace fs = std::filesystem;

namespace {

#ifdef SMDL_VERSION
constexpr const char* kVersion = SMDL_VERSION;
#else
constexpr const char* kVersion = "unknown";
#endif

std::string opt(double v) { return std::isnan(v) ? std::string() : fmt_double(v); }

class Writer {
 public:
  Writer(const std::string& command, const ExperimentConfig& cfg) : command_(command), cfg_(cfg) {
    fs::create_directories(cfg.output_dir);
  }

  std::string path(const std::string& name) const { return (fs::path(cfg_.output_dir) / name).string(); }

  // CSV with the manifest line first.
  void csv(const std::string& name, const std::string& header, const std::string& rows) {
    raw(name, manifest_line(command_, cfg_) + "\n" + header + "\n" + rows);
  }

  void raw(const std::string& name, const std::string& text) {
    const auto p = path(name);
    fs::create_directories(fs::path(p).parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::invalid_input, "cannot write '" + p + "'");
    out << text;
    if (!out) fail(ErrorKind::invalid_input, "write failed for '" + p + "'");
    out_.files.push_back(p);
  }

  CommandOutput finish(std::string summary) {
    std::string files = "[";
    for (std::size_t i = 0; i < out_.files.size(); ++i)
      files += (i ? ", \"" : "\"") + fs::path(out_.files[i]).filename().string() + "\"";
    files += "]";
    raw(command_ + ".manifest.json", "{\"command\": \"" + command_ + "\", \"config_hash\": \"" + hash_hex(cfg_.hash) +
                                         "\", \"seed\": " + std::to_string(cfg_.seed) + ", \"version\": \"" + kVersion +
                                         "\", \"outputs\": " + files + ", \"config\": " + cfg_.canonical_json + "}\n");
    out_.summary = std::move(summary);
    return std::move(out_);
  }

  CommandOutput& output() { return out_; }

 private:
  std::string command_;
  const ExperimentConfig& cfg_;
  CommandOutput out_;
};

// Toy model and its teacher data, rebuilt from the config by every subcommand.
struct Toy {
  zoo::MlpModel model;
  zoo::Dataset data;

  explicit Toy(const ExperimentConfig& cfg) : model(cfg.model), data(zoo::make_teacher_dataset(model, cfg.data)) {}

  compress::LossEval loss() const {
    return [this](std::span<const double> w) { return kernels::dataset_loss(model, w, data); };
  }
};

std::string checkpoint_dir(const ExperimentConfig& cfg) { return (fs::path(cfg.output_dir) / "checkpoints").string(); }

std::vector<zoo::Checkpoint> load_checkpoints(const ExperimentConfig& cfg, const zoo::MlpModel& model) {
  std::vector<zoo::Checkpoint> out;
  for (auto step : cfg.training.schedule) {
    const auto p = (fs::path(checkpoint_dir(cfg)) / zoo::checkpoint_filename(step)).string();
    if (!fs::exists(p)) fail(ErrorKind::invalid_input, "checkpoint '" + p + "' not found; run train-toy first");
    auto c = zoo::read_checkpoint(p);
    if (c.spec_hash != model.spec().hash())
      fail(ErrorKind::invalid_input, "checkpoint '" + p + "' was trained for a different model spec");
    if (c.params.size() != model.parameter_count())
      fail(ErrorKind::invalid_input, "checkpoint '" + p + "' has the wrong parameter count");
    out.push_back(std::move(c));
  }
  return out;
}

std::string record(const compress::SweepRecord& r) { return compress::sweep_csv_row(r) + "\n"; }

compress::SweepRecord row(std::int64_t step, const char* scheme, double control, double delta, std::uint64_t seed) {
  compress::SweepRecord r;
  r.step = step;
  r.scheme = scheme;
  r.control_parameter = control;
  r.delta_loss = delta;
  r.seed = seed;
  return r;
}

// ---- subcommands ----------------------------------------------------------------------

CommandOutput train_toy(const ExperimentConfig& cfg) {
  Writer w("train-toy", cfg);
  const Toy toy(cfg);
  const auto trace = zoo::train_sgd(toy.model, toy.data, cfg.training, {}, {}, false, checkpoint_dir(cfg));
  std::string rows;
  for (const auto& c : trace.checkpoints) {
    rows += std::to_string(c.step) + "," + fmt_double(c.train_loss) + "," + std::to_string(c.seed) + "\n";
    w.output().files.push_back((fs::path(checkpoint_dir(cfg)) / zoo::checkpoint_filename(c.step)).string());
  }
  w.csv("train.csv", "step,train_loss,seed", rows);
  return w.finish(std::to_string(trace.checkpoints.size()) + " checkpoints, final loss " + fmt_double(trace.final_loss));
}

CommandOutput estimate_llc(const ExperimentConfig& cfg) {
  Writer w("estimate-llc", cfg);
  const Toy toy(cfg);
  const zoo::MlpObjective objective(toy.model, toy.data, cfg.llc.batch_size);
  std::string rows;
  std::size_t negative = 0;
  for (const auto& c : load_checkpoints(cfg, toy.model)) {
    const zoo::ParamPoint ws(c.params, zoo::Box::cube(c.params.size(), -kMlpParameterBound, kMlpParameterBound));
    const auto est = llc::estimate_llc(objective, ws, cfg.llc, cfg.seed);
    if (est.negative) ++negative;
    rows += llc_csv_row({c.step, est.lambda_hat, cfg.llc.beta_n, cfg.llc.gamma, cfg.llc.step_size, cfg.llc.chains,
                         cfg.seed}) +
            "\n";
  }
  w.csv("llc.csv", llc_csv_header(), rows);
  return w.finish(std::to_string(cfg.training.schedule.size()) + " checkpoints, " + std::to_string(negative) +
                  " negative estimates");
}

CommandOutput quantize_sweep(const ExperimentConfig& cfg) {
  Writer w("quantize-sweep", cfg);
  const Toy toy(cfg);
  const auto loss = toy.loss();
  std::string rows;
  for (const auto& c : load_checkpoints(cfg, toy.model)) {
    const double base = loss(c.params);
    for (auto nq : cfg.quantize.curve) {
      const auto r = compress::quantization_delta(c.params, static_cast<int>(nq), cfg.quantize.critical.mode, loss, base,
                                                  cfg.quantize.critical.m_search);
      rows += record(row(c.step, "quantize", static_cast<double>(nq), r.delta_loss, cfg.seed));
    }
    for (double eps : cfg.epsilons) {
      const auto r = compress::critical_nq(c.params, eps, loss, cfg.quantize.critical);
      auto rec = row(c.step, "quantize", r.n_q, r.delta_loss, cfg.seed);
      rec.critical_value = r.n_q;
      rec.epsilon = eps;
      rows += record(rec);
    }
  }
  w.csv("quantize_sweep.csv", compress::sweep_csv_header(), rows);
  return w.finish("quantize sweep over " + std::to_string(cfg.training.schedule.size()) + " checkpoints");
}

CommandOutput factorize_sweep(const ExperimentConfig& cfg) {
  Writer w("factorize-sweep", cfg);
  const Toy toy(cfg);
  const auto loss = toy.loss();
  const auto layers = cfg.factorize.layers.empty() ? compress::hidden_layer_selection(toy.model) : cfg.factorize.layers;
  if (layers.empty()) fail(ErrorKind::invalid_input, "the model has no hidden-to-hidden layer to factorize");
  std::size_t grid = 0;
  for (auto l : layers) {
    if (l >= toy.model.layer_count()) fail(ErrorKind::config, "config: key 'factorize.layers' names a missing layer");
    grid = std::max(grid, std::min(toy.model.layer(l).in, toy.model.layer(l).out));
  }
  std::string rows;
  for (const auto& c : load_checkpoints(cfg, toy.model)) {
    const double base = loss(c.params);
    for (std::size_t t = 1; t <= grid; ++t) {
      const double keep = static_cast<double>(t) / static_cast<double>(grid);
      const auto f = compress::factorize(toy.model, c.params, keep, layers);
      rows += record(row(c.step, "factorize", keep, loss(f.params) - base, cfg.seed));
    }
    for (double eps : cfg.epsilons) {
      const auto r = compress::critical_compression_fraction(toy.model, c.params, eps, loss, layers);
      auto rec = row(c.step, "factorize", r.keep_fraction, r.delta_loss, cfg.seed);
      rec.critical_value = r.compression_fraction;
      rec.epsilon = eps;
      rows += record(rec);
    }
  }
  w.csv("factorize_sweep.csv", compress::sweep_csv_header(), rows);
  return w.finish("factorize sweep over " + std::to_string(cfg.training.schedule.size()) + " checkpoints");
}

CommandOutput noise_sweep(const ExperimentConfig& cfg) {
  Writer w("noise-sweep", cfg);
  const Toy toy(cfg);
  const auto loss = toy.loss();
  std::string rows;
  for (const auto& c : load_checkpoints(cfg, toy.model)) {
    const double base = loss(c.params);
    for (double s : cfg.noise.curve)
      rows += record(row(c.step, "noise", s,
                         compress::mean_noise_delta(c.params, s, cfg.noise.mode, loss, base, cfg.noise.search.draws, cfg.seed),
                         cfg.seed));
    for (double eps : cfg.epsilons) {
      const auto r = compress::critical_sigma(c.params, eps, cfg.noise.mode, loss, cfg.seed, cfg.noise.search);
      auto rec = row(c.step, "noise", r.sigma, r.delta_loss, cfg.seed);
      rec.critical_value = r.sigma;
      rec.epsilon = eps;
      rows += record(rec);
    }
  }
  w.csv("noise_sweep.csv", compress::sweep_csv_header(), rows);
  return w.finish("noise sweep over " + std::to_string(cfg.training.schedule.size()) + " checkpoints");
}

CommandOutput prune_sweep(const ExperimentConfig& cfg) {
  Writer w("prune-sweep", cfg);
  const Toy toy(cfg);
  std::string rows;
  for (const auto& c : load_checkpoints(cfg, toy.model)) {
    std::vector<std::pair<double, double>> deltas;
    for (double p : cfg.prune.fractions) {
      const auto r = compress::prune_and_retrain(toy.model, toy.data, c.params, p, cfg.training, cfg.seed,
                                                 static_cast<std::size_t>(cfg.prune.retrain_steps));
      deltas.emplace_back(p, r.delta_loss);
      rows += record(row(c.step, "prune", p, r.delta_loss, cfg.seed));
    }
    for (double eps : cfg.epsilons) {
      // Smallest kept fraction within tolerance; keeping every unit (p = 1) always qualifies.
      double best = 1.0, best_delta = 0.0;
      for (const auto& [p, d] : deltas)
        if (d <= eps && p < best) best = p, best_delta = d;
      auto rec = row(c.step, "prune", best, best_delta, cfg.seed);
      rec.critical_value = best;
      rec.epsilon = eps;
      rows += record(rec);
    }
  }
  w.csv("prune_sweep.csv", compress::sweep_csv_header(), rows);
  return w.finish("prune sweep over " + std::to_string(cfg.training.schedule.size()) + " checkpoints");
}

CommandOutput volume_fit(const ExperimentConfig& cfg) {
  Writer w("volume-fit", cfg);
  const auto mode = cfg.volume.multiplicity ? volume::MultiplicityMode::of(*cfg.volume.multiplicity)
                                            : volume::MultiplicityMode::select();
  std::string curves, fits, bits;
  std::string summary;
  for (const auto& spec : cfg.volume.landscapes) {
    const auto k = make_landscape(spec);
    const auto label = spec.label();
    const auto curve = volume::volume_curve(*k, volume::dyadic_ladder(cfg.volume.ladder_lo, cfg.volume.ladder_hi),
                                            cfg.volume.samples, cfg.seed);
    for (std::size_t i = 0; i < curve.size(); ++i)
      curves += label + "," + fmt_double(curve.epsilons[i]) + "," + fmt_double(curve.volumes[i]) + "," +
                fmt_double(curve.standard_errors[i]) + "," + std::to_string(curve.hits[i]) + "\n";
    const auto fit = volume::fit_scaling(curve, mode);
    const auto& truth = k->ground_truth();
    fits += label + "," + fmt_double(fit.lambda) + "," + std::to_string(fit.multiplicity) + "," + fmt_double(fit.log_c) +
            "," + fmt_double(fit.r_squared) + "," + fmt_double(fit.epsilon_min) + "," + fmt_double(fit.epsilon_max) + "," +
            std::to_string(fit.points) + "," + (truth ? fmt_double(truth->lambda.value()) : "") + "," +
            (truth ? std::to_string(truth->multiplicity) : "") + "\n";
    summary += (summary.empty() ? "" : "; ") + label + " lambda " + fmt_double(fit.lambda);

    // Critical bits from the cell condition: a cell of side width / n_q matches V(ε).
    auto eps = cfg.volume.bits_epsilons;
    std::sort(eps.rbegin(), eps.rend());
    const auto bc = volume::volume_curve(*k, eps, cfg.volume.samples, cfg.seed);
    const double d = static_cast<double>(k->dimension());
    const double width = 2.0 * spec.bound;
    for (std::size_t i = 0; i < bc.size(); ++i) {
      const double v = bc.volumes[i];
      const double measured =
          v > 0.0 ? std::log2(width) - std::log2(v) / d : std::numeric_limits<double>::quiet_NaN();
      const double predicted = truth ? bits_per_coordinate(truth->lambda.value(), k->dimension(), bc.epsilons[i],
                                                           truth->multiplicity)
                                     : std::numeric_limits<double>::quiet_NaN();
      bits += label + "," + fmt_double(bc.epsilons[i]) + "," + opt(measured) + "," + opt(predicted) + "\n";
    }
  }
  w.csv("volume_curves.csv", "landscape,epsilon,volume,se,hits", curves);
  w.csv("volume_fit.csv",
        "landscape,lambda,multiplicity,log_c,r_squared,epsilon_min,epsilon_max,points,true_lambda,true_multiplicity",
        fits);
  w.csv("volume_bits.csv", "landscape,epsilon,measured_bits,predicted_bits", bits);
  return w.finish(summary);
}

CommandOutput mdl_redundancy(const ExperimentConfig& cfg) {
  Writer w("mdl-redundancy", cfg);
  const auto model = zoo::make_singular_bernoulli();
  const auto q = model->truth();
  std::string rows, summary_rows;
  for (auto n : cfg.mdl.ns) {
    const double eps = cfg.mdl.a / static_cast<double>(n);
    const auto net = mdl::build_eps_net(*model, eps, cfg.seed + n, cfg.mdl.net);
    std::vector<mdl::RedundancyRun> runs(cfg.mdl.seeds);
    std::vector<std::string> errors(cfg.mdl.seeds);
#pragma omp parallel for schedule(static)
    for (std::size_t k = 0; k < cfg.mdl.seeds; ++k) {
      try {
        runs[k] = mdl::two_part_redundancy(*model, net, q, n, cfg.mdl.a, cfg.seed + k);
      } catch (const Error& e) {
        errors[k] = e.what();
      }
    }
    for (std::size_t k = 0; k < cfg.mdl.seeds; ++k)
      if (!errors[k].empty()) fail(ErrorKind::insufficient_data, errors[k]);
    std::vector<double> r;
    for (const auto& run : runs) {
      rows += mdl::redundancy_csv_row(run) + "\n";
      r.push_back(run.redundancy);
    }
    std::sort(r.begin(), r.end());
    const std::size_t h = r.size() / 2;
    const double median = r.size() % 2 ? r[h] : 0.5 * (r[h - 1] + r[h]);
    summary_rows += std::to_string(n) + "," + fmt_double(cfg.mdl.a) + "," + fmt_double(eps) + "," +
                    std::to_string(net.size()) + "," + std::to_string(net.grid_per_axis) + "," +
                    fmt_double(net.kraft_sum()) + "," + fmt_double(mdl::to_bits(median)) + "\n";
    w.raw("nets/net_n" + std::to_string(n) + ".csv", manifest_line("mdl-redundancy", cfg) + "\n" + mdl::net_csv(net));
  }
  w.csv("redundancy.csv", mdl::redundancy_csv_header(), rows);
  w.csv("redundancy_summary.csv", "n,a,epsilon,centers,grid_per_axis,kraft_sum,median_redundancy_bits", summary_rows);
  return w.finish(std::to_string(cfg.mdl.ns.size()) + " sample sizes x " + std::to_string(cfg.mdl.seeds) + " seeds");
}

// Realizable inclusion configuration: q = p_w, p* = p_w' with KL(q || p*) <= ε.
struct InclusionCase {
  mdl::SimplexDist q, p_star;
  double epsilon;
};

InclusionCase inclusion_case(const zoo::CategoricalModel& model, core::RngStream& rng) {
  const auto& box = model.bounds();
  const double m = model.simplex_floor();
  auto draw = [&] {
    std::vector<double> w(box.dimension());
    for (std::size_t j = 0; j < w.size(); ++j) w[j] = rng.uniform(box.lo(j), box.hi(j));
    return model.distribution(w);
  };
  const double eps = std::pow(10.0, rng.uniform(-3.0, -1.0));
  const auto q = draw();
  for (int attempt = 0; attempt < 10000; ++attempt) {
    const auto p = draw();
    if (zoo::kl_divergence(q, p) <= eps) return {mdl::SimplexDist(q, m), mdl::SimplexDist(p, m), eps};
  }
  return {mdl::SimplexDist(q, m), mdl::SimplexDist(q, m), eps};
}

CommandOutput lemma_audit(const ExperimentConfig& cfg) {
  Writer w("lemma-audit", cfg);
  const auto& a = cfg.audit;
  std::string rows;
  std::size_t total_violations = 0;
  auto emit = [&](const std::string& name, std::size_t n, std::size_t v, double worst) {
    rows += name + "," + std::to_string(n) + "," + std::to_string(v) + "," + fmt_double(worst) + "\n";
    total_violations += v;
  };
  // Worst observed value / bound; at most 1 when the inequality holds.
  auto ratio = [](double value, double bound) { return bound > 0.0 ? value / bound : (value > 0.0 ? INFINITY : 0.0); };

  {
    core::RngStream rng(cfg.seed, 0);
    std::size_t v = 0;
    double worst = 0.0;
    for (std::size_t i = 0; i < a.instances; ++i) {
      const auto q = mdl::random_restricted(rng, a.outcomes, a.m_simplex);
      const auto p = mdl::random_restricted(rng, a.outcomes, a.m_simplex);
      const auto c = mdl::validate_kl_l2(q, p, a.m_simplex);
      if (!c.pass) ++v;
      worst = std::max({worst, ratio(c.lower, c.value), ratio(c.value, c.upper)});
    }
    emit("kl_l2_sandwich", a.instances, v, worst);
  }
  {
    core::RngStream rng(cfg.seed, 1);
    std::size_t v = 0;
    double worst = 0.0;
    for (std::size_t i = 0; i < a.instances; ++i) {
      const auto q = mdl::random_restricted(rng, a.outcomes, a.m_simplex);
      const auto p = mdl::random_restricted(rng, a.outcomes, a.m_simplex);
      const auto pp = mdl::random_restricted(rng, a.outcomes, a.m_simplex);
      const auto c = mdl::validate_triangle(q, p, pp, a.m_simplex);
      if (!c.pass) ++v;
      worst = std::max(worst, ratio(c.value, c.upper));
    }
    emit("pseudo_triangle", a.instances, v, worst);
  }
  {
    core::RngStream rng(cfg.seed, 2);
    std::size_t v = 0;
    double worst = 0.0;
    for (std::size_t i = 0; i < a.instances; ++i) {
      const auto q = mdl::random_restricted(rng, a.outcomes, a.m_simplex);
      const auto p = mdl::random_restricted(rng, a.outcomes, a.m_simplex);
      const auto c = mdl::validate_variance_bound(q, p);
      if (!c.pass) ++v;
      worst = std::max({worst, ratio(c.lower, c.value), ratio(c.value, c.upper)});
    }
    emit("log_ratio_variance", a.instances, v, worst);
  }
  {
    core::RngStream rng(cfg.seed, 3);
    std::size_t v = 0;
    double worst = 0.0;
    for (auto n : a.fluctuation_ns) {
      const std::vector<double> uniform(a.outcomes, 1.0 / static_cast<double>(a.outcomes));
      const mdl::SimplexDist q(uniform, a.m_simplex);
      const auto p = mdl::random_restricted(rng, a.outcomes, a.m_simplex);
      const auto r = mdl::validate_kn_fluctuation(q, p, n, a.fluctuation_trials, cfg.seed + n);
      if (!r.pass) ++v;
      for (std::size_t i = 0; i < r.t.size(); ++i) worst = std::max(worst, ratio(r.tail_fraction[i], r.tail_bound[i]));
    }
    emit("kn_fluctuation", a.fluctuation_ns.size(), v, worst);
  }
  {
    const auto model = zoo::make_singular_bernoulli();
    core::RngStream rng(cfg.seed, 4);
    std::size_t v = 0;
    double worst = 0.0;
    for (std::size_t i = 0; i < a.inclusion_configs; ++i) {
      const auto c = inclusion_case(*model, rng);
      const auto r = mdl::validate_volume_inclusions(*model, c.q, c.p_star, c.epsilon, a.inclusion_samples, cfg.seed + i);
      if (!r.pass) ++v;
      worst = std::max({worst, ratio(r.inner.volume, r.middle.volume), ratio(r.middle.volume, r.outer.volume)});
    }
    emit("volume_inclusions", a.inclusion_configs, v, worst);
  }
  w.csv("lemma_audit.csv", "validator,instances,violations,worst_ratio", rows);
  auto out = w.finish(std::to_string(total_violations) + " violations");
  out.violations = total_violations > 0;
  return out;
}

CommandOutput analyze_cmd(const ExperimentConfig& cfg) {
  Writer w("analyze", cfg);
  const auto& an = cfg.analyze;
  const auto sweep_path = an.sweep_csv.empty() ? w.path(an.scheme + "_sweep.csv") : an.sweep_csv;
  const auto llc_path = an.llc_csv.empty() ? w.path("llc.csv") : an.llc_csv;
  const auto sweep = read_sweep_csv(sweep_path);
  const auto llc = read_llc_csv(llc_path);
  std::string rows, fit_rows, summary;
  std::vector<AnalysisResult> results;
  for (double eps : cfg.epsilons) {
    results.push_back(analyze(sweep, llc, an.scheme, eps, an.exclude_steps));
    rows += analysis_csv_rows(results.back());
    fit_rows += fit_csv_row(results.back()) + "\n";
    summary += (summary.empty() ? "" : "; ") + std::string("epsilon ") + fmt_double(eps) + " R^2 " +
               fmt_double(results.back().r_squared);
  }
  w.csv("analysis.csv", analysis_csv_header(), rows);
  w.csv("analysis_fit.csv", fit_csv_header(), fit_rows);
  if (an.gnuplot)
    for (std::size_t i = 0; i < results.size(); ++i)
      w.raw("analysis_" + std::to_string(i) + ".gp", gnuplot_script(results[i], "analysis.csv"));
  return w.finish(summary);
}

const std::map<std::string, std::function<CommandOutput(const ExperimentConfig&)>>& table() {
  static const std::map<std::string, std::function<CommandOutput(const ExperimentConfig&)>> t{
      {"train-toy", train_toy},           {"estimate-llc", estimate_llc},   {"volume-fit", volume_fit},
      {"quantize-sweep", quantize_sweep}, {"factorize-sweep", factorize_sweep}, {"noise-sweep", noise_sweep},
      {"prune-sweep", prune_sweep},       {"mdl-redundancy", mdl_redundancy}, {"lemma-audit", lemma_audit},
      {"analyze", analyze_cmd}};
  return t;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"train-toy",   "estimate-llc",   "volume-fit",  "quantize-sweep",
                                              "factorize-sweep", "noise-sweep", "prune-sweep", "mdl-redundancy",
                                              "lemma-audit", "analyze"};
  return names;
}

std::string manifest_line(const std::string& command, const ExperimentConfig& cfg) {
  return "# manifest: command=" + command + " config_hash=" + hash_hex(cfg.hash) + " seed=" + std::to_string(cfg.seed) +
         " version=" + kVersion;
}

CommandOutput run_command(const std::string& command, const ExperimentConfig& cfg) {
  const auto it = table().find(command);
  if (it == table().end()) fail(ErrorKind::invalid_input, "unknown subcommand '" + command + "'");
  try {
    return it->second(cfg);
  } catch (const Error& e) {
    throw Error(e.kind(), command + ": " + e.what());
  } catch (const fs::filesystem_error& e) {
    throw Error(ErrorKind::invalid_input, command + ": " + e.what());
  }
}

}  // namespace smdl::harness
