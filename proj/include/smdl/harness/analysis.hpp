#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "smdl/compress/compress.hpp"

namespace smdl::harness {

// Critical bits per coordinate from the cell-vs-basin volume condition at equality:
// (λ/d) log2(1/ε) − ((m−1)/d) log2(log(1/ε)). Throws invalid_input unless λ > 0, d >= 1,
// m >= 1 and 0 < ε < 1.
double bits_per_coordinate(double lambda, std::size_t d, double epsilon, int multiplicity);

struct LlcRow {
  std::int64_t step = 0;
  double lambda_hat = 0.0;
  double nbeta = 0.0;
  double gamma = 0.0;
  double step_size = 0.0;
  std::size_t chains = 0;
  std::uint64_t seed = 0;
};

std::string llc_csv_header();
std::string llc_csv_row(const LlcRow& r);

// Readers skip '#' lines and check the header. Malformed rows raise invalid_input
// naming the file and line.
std::vector<compress::SweepRecord> read_sweep_csv(const std::string& path);
std::vector<compress::SweepRecord> parse_sweep_csv(const std::string& text, const std::string& name = "sweep");
std::vector<LlcRow> read_llc_csv(const std::string& path);
std::vector<LlcRow> parse_llc_csv(const std::string& text, const std::string& name = "llc");

struct AnalysisPoint {
  std::int64_t step = 0;
  double lambda_hat = 0.0;
  double critical_value = 0.0;
  bool included = true;
  double fitted = 0.0;
  double residual = 0.0;
};

struct AnalysisResult {
  std::string scheme;
  double epsilon = 0.0;
  std::vector<AnalysisPoint> points;  // every joined checkpoint, ordered by step
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t included = 0;
};

// Joins the critical rows of `scheme` at `epsilon` (relative match 1e-12) with λ̂ by step and
// fits critical value on λ̂ over the checkpoints not listed in `exclude_steps`. Stored
// points are never dropped. Throws insufficient_data with fewer than 3 included points and
// rank_deficient when all included λ̂ coincide.
AnalysisResult analyze(const std::vector<compress::SweepRecord>& sweep, const std::vector<LlcRow>& llc,
                       const std::string& scheme, double epsilon, const std::vector<std::int64_t>& exclude_steps);

std::string analysis_csv_header();
// Data rows (no header) for one ε; several results can share one file.
std::string analysis_csv_rows(const AnalysisResult& r);
std::string fit_csv_header();
std::string fit_csv_row(const AnalysisResult& r);

// Plot script for the analysis CSV: points plus the fitted line.
std::string gnuplot_script(const AnalysisResult& r, const std::string& csv_name);

}  // namespace smdl::harness
