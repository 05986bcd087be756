#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "doctest.h"
#include "testing.hpp"
#include "smdl/compress/compress.hpp"
#include "smdl/core/error.hpp"
#include "smdl/harness/analysis.hpp"
#include "smdl/harness/commands.hpp"
#include "smdl/harness/config.hpp"

using namespace smdl;
namespace fs = std::filesystem;

namespace {

std::string error_of(auto&& f, ErrorKind* kind = nullptr) {
  try {
    f();
  } catch (const Error& e) {
    if (kind) *kind = e.kind();
    return e.what();
  }
  return {};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

compress::SweepRecord critical_row(std::int64_t step, double value, double eps) {
  compress::SweepRecord r;
  r.step = step;
  r.scheme = "quantize";
  r.control_parameter = value;
  r.delta_loss = 0.5 * eps;
  r.critical_value = value;
  r.epsilon = eps;
  r.seed = 3;
  return r;
}

harness::LlcRow llc_row(std::int64_t step, double lambda) { return {step, lambda, 100, 100, 1e-3, 4, 3}; }

// Small enough for a unit test: 8 checkpoints of a 4-8-8-4 network.
const char* kTinyConfig = R"({
  "model": {"layers": [4, 8, 8, 4]},
  "data": {"samples": 256},
  "training": {"steps": 1600, "schedule": [200, 400, 600, 800, 1000, 1200, 1400, 1600]},
  "llc": {"beta_n": 100, "gamma": 100, "step_size": 0.001, "chains": 2, "steps_per_chain": 100},
  "quantize": {"curve": [4, 8, 16]},
  "epsilons": [0.01],
  "seed": 5
})";

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("smdl_test_harness_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("config defaults and overrides") {
  const auto c = harness::parse_config("{}");
  CHECK(c.model.layers == std::vector<std::size_t>{4, 16, 16, 4});
  CHECK(c.epsilons == std::vector<double>{0.25, 0.5, 1.0});
  CHECK(c.training.schedule == std::vector<std::int64_t>{c.training.steps});
  CHECK(c.volume.landscapes.size() == 3);

  harness::Overrides ov;
  ov.seed = 9;
  ov.epsilons = std::vector<double>{0.1};
  const auto o = harness::parse_config("{}", ov);
  CHECK(o.seed == 9);
  CHECK(o.training.seed == 9);
  CHECK(o.epsilons == std::vector<double>{0.1});
  CHECK(o.hash != c.hash);

  // The output directory is not part of the experiment's identity.
  ov = {};
  ov.output_dir = "elsewhere";
  const auto moved = harness::parse_config("{}", ov);
  CHECK(moved.output_dir == "elsewhere");
  CHECK(moved.hash == c.hash);
  CHECK(harness::parse_config(R"({"seed": 0})").hash != c.hash);
  CHECK(harness::hash_hex(0x1234) == "0000000000001234");
}

TEST_CASE("config errors name the key") {
  ErrorKind kind{};
  auto msg = error_of([] { harness::parse_config(R"({"llc": {"gama": 1}})"); }, &kind);
  CHECK(kind == ErrorKind::config);
  CHECK(msg.find("'llc.gama'") != std::string::npos);

  msg = error_of([] { harness::parse_config(R"({"llc": {"gamma": "big"}})"); }, &kind);
  CHECK(kind == ErrorKind::config);
  CHECK(msg.find("'llc.gamma'") != std::string::npos);

  msg = error_of([] { harness::parse_config(R"({"epsilons": [0.5, -1]})"); });
  CHECK(msg.find("'epsilons'") != std::string::npos);

  msg = error_of([] { harness::parse_config(R"({"quantize": {"curve": [4, 5]}})"); });
  CHECK(msg.find("'quantize.curve'") != std::string::npos);

  msg = error_of([] { harness::parse_config(R"({"volume": {"landscapes": [{"kind": "cubic"}]}})"); });
  CHECK(msg.find("'volume.landscapes[0].kind'") != std::string::npos);

  msg = error_of([] { harness::parse_config(R"({"training": {"steps": 10, "schedule": [20]}})"); });
  CHECK(msg.find("'training.schedule'") != std::string::npos);

  msg = error_of([] { harness::parse_config(R"({"model": 3})"); });
  CHECK(msg.find("'model'") != std::string::npos);

  error_of([] { harness::parse_config("{not json"); }, &kind);
  CHECK(kind == ErrorKind::config);
  error_of([] { harness::load_config("/nonexistent/config.json"); }, &kind);
  CHECK(kind == ErrorKind::config);
}

TEST_CASE("bits per coordinate") {
  CHECK(harness::bits_per_coordinate(1.0, 2, std::ldexp(1.0, -8), 1) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(harness::bits_per_coordinate(0.25, 2, std::ldexp(1.0, -8), 1) == doctest::Approx(1.0).epsilon(1e-15));
  for (std::size_t d = 1; d <= 6; ++d) {
    CAPTURE(d);
    const double regular = harness::bits_per_coordinate(0.5 * static_cast<double>(d), d, 1e-3, 1);
    CHECK(rel_err(regular, 0.5 * std::log2(1e3)) <= 1e-14);
  }
  // The multiplicity correction subtracts ((m-1)/d) log2 log(1/ε).
  const double e = 1e-4;
  CHECK(rel_err(harness::bits_per_coordinate(0.5, 2, e, 2),
                0.25 * std::log2(1.0 / e) - 0.5 * std::log2(std::log(1.0 / e))) <= 1e-14);

  // Monotone in λ, and in log(1/ε) wherever ln(1/ε) > (m-1)/λ.
  for (int m = 1; m <= 3; ++m)
    for (double lam : {0.25, 0.5, 1.0, 2.0}) {
      CAPTURE(m);
      CAPTURE(lam);
      CHECK(harness::bits_per_coordinate(lam * 1.1, 3, 1e-3, m) > harness::bits_per_coordinate(lam, 3, 1e-3, m));
      double prev = -INFINITY;
      for (int k = 1; k <= 40; ++k) {
        const double eps = std::pow(2.0, -k);
        if (std::log(1.0 / eps) <= (m - 1) / lam) continue;
        const double b = harness::bits_per_coordinate(lam, 3, eps, m);
        CHECK(b > prev);
        prev = b;
      }
    }

  ErrorKind kind{};
  error_of([] { harness::bits_per_coordinate(1.0, 2, 1.0, 1); }, &kind);
  CHECK(kind == ErrorKind::invalid_input);
  CHECK_FALSE(error_of([] { harness::bits_per_coordinate(0.0, 2, 0.5, 1); }).empty());
  CHECK_FALSE(error_of([] { harness::bits_per_coordinate(1.0, 0, 0.5, 1); }).empty());
}

TEST_CASE("analyze on exact and degenerate data") {
  std::vector<compress::SweepRecord> sweep;
  std::vector<harness::LlcRow> llc;
  for (int i = 0; i < 6; ++i) {
    llc.push_back(llc_row(100 * (i + 1), 2.0 + i));
    sweep.push_back(critical_row(100 * (i + 1), 4.0 + 3.0 * (2.0 + i), 0.5));
    auto curve = critical_row(100 * (i + 1), 8, 0.5);
    curve.critical_value = std::nan("");
    curve.epsilon = std::nan("");
    sweep.push_back(curve);
  }
  const auto r = harness::analyze(sweep, llc, "quantize", 0.5, {});
  CHECK(r.points.size() == 6);
  CHECK(r.included == 6);
  CHECK(r.r_squared == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.slope == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(r.intercept == doctest::Approx(4.0).epsilon(1e-12));

  SUBCASE("exclusion changes only the fit") {
    auto noisy = sweep;
    noisy[0].critical_value += 5.0;
    const auto all = harness::analyze(noisy, llc, "quantize", 0.5, {});
    const auto ex = harness::analyze(noisy, llc, "quantize", 0.5, {100});
    CHECK(all.r_squared < 1.0);
    CHECK(ex.r_squared == doctest::Approx(1.0).epsilon(1e-12));
    REQUIRE(ex.points.size() == all.points.size());
    for (std::size_t i = 0; i < ex.points.size(); ++i) {
      CHECK(ex.points[i].step == all.points[i].step);
      CHECK(ex.points[i].lambda_hat == all.points[i].lambda_hat);
      CHECK(ex.points[i].critical_value == all.points[i].critical_value);
    }
    CHECK_FALSE(ex.points[0].included);
    CHECK(ex.included == 5);
  }
  SUBCASE("shared lambda is rank deficient") {
    auto flat = llc;
    for (auto& row : flat) row.lambda_hat = 3.0;
    ErrorKind kind{};
    error_of([&] { harness::analyze(sweep, flat, "quantize", 0.5, {}); }, &kind);
    CHECK(kind == ErrorKind::rank_deficient);
  }
  SUBCASE("fewer than three included points") {
    ErrorKind kind{};
    error_of([&] { harness::analyze(sweep, llc, "quantize", 0.5, {100, 200, 300, 400}); }, &kind);
    CHECK(kind == ErrorKind::insufficient_data);
    error_of([&] { harness::analyze(sweep, llc, "quantize", 0.25, {}); }, &kind);
    CHECK(kind == ErrorKind::insufficient_data);
  }
  SUBCASE("missing llc row") {
    auto short_llc = llc;
    short_llc.pop_back();
    CHECK(error_of([&] { harness::analyze(sweep, short_llc, "quantize", 0.5, {}); }).find("no llc row") !=
          std::string::npos);
  }
}

TEST_CASE("re-analysis from CSV text is exact") {
  std::vector<compress::SweepRecord> sweep;
  std::vector<harness::LlcRow> llc;
  std::string sweep_text = "# manifest: test\n" + compress::sweep_csv_header() + "\n";
  std::string llc_text = "# manifest: test\n" + harness::llc_csv_header() + "\n";
  for (int i = 0; i < 8; ++i) {
    const double lam = 1.0 / 3.0 + 0.7 * i + 0.01 * i * i;
    llc.push_back(llc_row(10 * i, lam));
    sweep.push_back(critical_row(10 * i, std::round(4 + 2.2 * lam + std::sin(i)), 0.1));
    sweep_text += compress::sweep_csv_row(sweep.back()) + "\n";
    llc_text += harness::llc_csv_row(llc.back()) + "\n";
  }
  const auto direct = harness::analyze(sweep, llc, "quantize", 0.1, {0});
  const auto replay =
      harness::analyze(harness::parse_sweep_csv(sweep_text), harness::parse_llc_csv(llc_text), "quantize", 0.1, {0});
  CHECK(replay.slope == direct.slope);
  CHECK(replay.intercept == direct.intercept);
  CHECK(replay.r_squared == direct.r_squared);
  CHECK(harness::analysis_csv_rows(replay) == harness::analysis_csv_rows(direct));
  CHECK(harness::fit_csv_row(replay) == harness::fit_csv_row(direct));

  const auto plot = harness::gnuplot_script(direct, "analysis.csv");
  CHECK(plot.find("plot 'analysis.csv'") != std::string::npos);

  CHECK_FALSE(error_of([] { harness::parse_sweep_csv("step,wrong\n1,2\n"); }).empty());
  CHECK(error_of([] { harness::parse_llc_csv(harness::llc_csv_header() + "\n1,2,3\n", "x.csv"); }).find("x.csv:2") !=
        std::string::npos);
  CHECK_FALSE(error_of([] { harness::parse_llc_csv(harness::llc_csv_header() + "\n1,abc,1,1,1,1,1\n"); }).empty());
}

TEST_CASE("toy pipeline end to end is deterministic") {
  const auto root = scratch("e2e");
  auto run_all = [&](const std::string& dir) {
    harness::Overrides ov;
    ov.output_dir = (root / dir).string();
    const auto cfg = harness::parse_config(kTinyConfig, ov);
    for (const char* cmd : {"train-toy", "estimate-llc", "quantize-sweep", "analyze"}) harness::run_command(cmd, cfg);
    return cfg;
  };
  const auto cfg = run_all("a");
  run_all("b");

  const auto sweep = harness::read_sweep_csv((root / "a" / "quantize_sweep.csv").string());
  std::size_t critical = 0;
  for (const auto& r : sweep) critical += !std::isnan(r.critical_value);
  CHECK(critical == 8);
  const auto fit = slurp((root / "a" / "analysis_fit.csv").string());
  CHECK(fit.find("r_squared") != std::string::npos);
  CHECK(fit.rfind("# manifest: command=analyze config_hash=" + harness::hash_hex(cfg.hash), 0) == 0);

  for (const char* f : {"train.csv", "llc.csv", "quantize_sweep.csv", "analysis.csv", "analysis_fit.csv",
                        "checkpoints/ckpt_00000800.bin"}) {
    CAPTURE(f);
    const auto a = slurp((root / "a" / f).string());
    CHECK_FALSE(a.empty());
    CHECK(a == slurp((root / "b" / f).string()));
  }
  fs::remove_all(root);
}

TEST_CASE("subcommand errors carry context") {
  const auto root = scratch("errors");
  harness::Overrides ov;
  ov.output_dir = root.string();
  const auto cfg = harness::parse_config(kTinyConfig, ov);
  ErrorKind kind{};
  const auto msg = error_of([&] { harness::run_command("estimate-llc", cfg); }, &kind);
  CHECK(msg.rfind("estimate-llc: ", 0) == 0);
  CHECK(msg.find("train-toy") != std::string::npos);
  CHECK(kind == ErrorKind::invalid_input);
  CHECK_FALSE(error_of([&] { harness::run_command("compile", cfg); }).empty());
  CHECK(harness::command_names().size() == 10);
  fs::remove_all(root);
}

TEST_CASE("lemma audit subcommand") {
  const auto root = scratch("audit");
  harness::Overrides ov;
  ov.output_dir = root.string();
  const auto cfg = harness::parse_config(
      R"({"audit": {"instances": 500, "inclusion_configs": 3, "inclusion_samples": 20000,
                    "fluctuation_ns": [100], "fluctuation_trials": 500}})",
      ov);
  const auto out = harness::run_command("lemma-audit", cfg);
  CHECK_FALSE(out.violations);
  const auto text = slurp((root / "lemma_audit.csv").string());
  for (const char* v : {"kl_l2_sandwich,500,0,", "pseudo_triangle,500,0,", "log_ratio_variance,500,0,",
                        "kn_fluctuation,1,0,", "volume_inclusions,3,0,"})
    CHECK(text.find(v) != std::string::npos);
  fs::remove_all(root);
}

#ifdef SMDL_CLI_PATH
TEST_CASE("cli exit codes") {
  const auto root = scratch("cli");
  fs::create_directories(root);
  auto run = [&](const std::string& args) {
    const auto cmd = std::string(SMDL_CLI_PATH) + " " + args + " > " + (root / "log.txt").string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };
  const auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream((root / name).string()) << text;
    return (root / name).string();
  };
  const auto good = write("good.json", R"({"audit": {"instances": 100, "inclusion_configs": 1,
      "inclusion_samples": 10000, "fluctuation_ns": [50], "fluctuation_trials": 200}})");
  const auto bad = write("bad.json", R"({"llc": {"gama": 1}})");
  const auto huge = write("huge.json", R"({"noise": {"sigma_hi": 1e-5}, "training": {"steps": 10},
      "model": {"layers": [2, 3, 3, 2]}, "data": {"samples": 64}, "epsilons": [1000]})");

  CHECK(run("lemma-audit --config " + good + " --out " + (root / "o").string()) == 0);
  CHECK(run("analyze --config " + bad) == 1);
  CHECK(slurp((root / "log.txt").string()).find("llc.gama") != std::string::npos);
  CHECK(run("analyze --config " + (root / "missing.json").string()) == 1);
  CHECK(run("frobnicate --config " + good) == 1);
  // Missing checkpoints are a validation error.
  CHECK(run("quantize-sweep --config " + good + " --out " + (root / "empty").string()) == 1);
  // An unreachable tolerance is a numerical failure.
  CHECK(run("train-toy --config " + huge + " --out " + (root / "h").string()) == 0);
  CHECK(run("noise-sweep --config " + huge + " --out " + (root / "h").string()) == 2);
  CHECK(slurp((root / "log.txt").string()).find("noise-sweep: ") != std::string::npos);
  fs::remove_all(root);
}
#endif
