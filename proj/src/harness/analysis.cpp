#include "smdl/harness/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "smdl/core/error.hpp"
#include "smdl/core/linear_fit.hpp"
#include "smdl/harness/format.hpp"

namespace smdl::harness {

double bits_per_coordinate(double lambda, std::size_t d, double epsilon, int multiplicity) {
  require(lambda > 0.0 && std::isfinite(lambda), "bits_per_coordinate: lambda must be positive");
  require(d >= 1, "bits_per_coordinate: dimension must be at least 1");
  require(multiplicity >= 1, "bits_per_coordinate: multiplicity must be at least 1");
  require(epsilon > 0.0 && epsilon < 1.0, "bits_per_coordinate: epsilon must lie in (0, 1)");
  const double dd = static_cast<double>(d);
  const double lead = lambda / dd * std::log2(1.0 / epsilon);
  if (multiplicity == 1) return lead;
  return lead - static_cast<double>(multiplicity - 1) / dd * std::log2(std::log(1.0 / epsilon));
}

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::invalid_input, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

// Data lines of a CSV with a fixed header; comment lines start with '#'.
std::vector<std::pair<std::size_t, std::vector<std::string>>> rows_of(const std::string& text, const std::string& name,
                                                                      const std::string& header) {
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  bool seen_header = false;
  const auto width = split(header).size();
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!seen_header) {
      if (line != header) fail(ErrorKind::invalid_input, name + ":" + std::to_string(lineno) + ": expected header '" + header + "'");
      seen_header = true;
      continue;
    }
    auto f = split(line);
    if (f.size() != width)
      fail(ErrorKind::invalid_input, name + ":" + std::to_string(lineno) + ": expected " + std::to_string(width) + " fields");
    rows.emplace_back(lineno, std::move(f));
  }
  if (!seen_header) fail(ErrorKind::invalid_input, name + ": missing header '" + header + "'");
  return rows;
}

double to_double(const std::string& s, const std::string& where) {
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size()) fail(ErrorKind::invalid_input, where + ": not a number: '" + s + "'");
  return v;
}

long long to_int(const std::string& s, const std::string& where) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (s.empty() || pos != s.size()) fail(ErrorKind::invalid_input, where + ": not an integer: '" + s + "'");
  return v;
}

std::uint64_t to_uint(const std::string& s, const std::string& where) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (s.empty() || s[0] == '-' || pos != s.size()) fail(ErrorKind::invalid_input, where + ": not an unsigned integer: '" + s + "'");
  return v;
}

bool same_epsilon(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b)); }

}  // namespace

std::string llc_csv_header() { return "step,lambda_hat,nbeta,gamma,step_size,chains,seed"; }

std::string llc_csv_row(const LlcRow& r) {
  return std::to_string(r.step) + "," + fmt_double(r.lambda_hat) + "," + fmt_double(r.nbeta) + "," +
         fmt_double(r.gamma) + "," + fmt_double(r.step_size) + "," + std::to_string(r.chains) + "," +
         std::to_string(r.seed);
}

std::vector<compress::SweepRecord> parse_sweep_csv(const std::string& text, const std::string& name) {
  std::vector<compress::SweepRecord> out;
  for (const auto& [lineno, f] : rows_of(text, name, compress::sweep_csv_header())) {
    const std::string at = name + ":" + std::to_string(lineno);
    compress::SweepRecord r;
    r.step = to_int(f[0], at);
    r.scheme = f[1];
    r.control_parameter = to_double(f[2], at);
    r.delta_loss = to_double(f[3], at);
    r.critical_value = to_double(f[4], at);
    r.epsilon = to_double(f[5], at);
    r.seed = to_uint(f[6], at);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<compress::SweepRecord> read_sweep_csv(const std::string& path) { return parse_sweep_csv(slurp(path), path); }

std::vector<LlcRow> parse_llc_csv(const std::string& text, const std::string& name) {
  std::vector<LlcRow> out;
  for (const auto& [lineno, f] : rows_of(text, name, llc_csv_header())) {
    const std::string at = name + ":" + std::to_string(lineno);
    LlcRow r;
    r.step = to_int(f[0], at);
    r.lambda_hat = to_double(f[1], at);
    r.nbeta = to_double(f[2], at);
    r.gamma = to_double(f[3], at);
    r.step_size = to_double(f[4], at);
    r.chains = static_cast<std::size_t>(to_uint(f[5], at));
    r.seed = to_uint(f[6], at);
    out.push_back(r);
  }
  return out;
}

std::vector<LlcRow> read_llc_csv(const std::string& path) { return parse_llc_csv(slurp(path), path); }

AnalysisResult analyze(const std::vector<compress::SweepRecord>& sweep, const std::vector<LlcRow>& llc,
                       const std::string& scheme, double epsilon, const std::vector<std::int64_t>& exclude_steps) {
  require(epsilon > 0.0, "analyze: epsilon must be positive");
  std::map<std::int64_t, double> lambda;
  for (const auto& r : llc) {
    if (lambda.count(r.step)) fail(ErrorKind::invalid_input, "analyze: duplicate llc row for step " + std::to_string(r.step));
    lambda[r.step] = r.lambda_hat;
  }
  std::map<std::int64_t, double> critical;
  for (const auto& r : sweep) {
    if (r.scheme != scheme || std::isnan(r.critical_value) || !same_epsilon(r.epsilon, epsilon)) continue;
    if (critical.count(r.step))
      fail(ErrorKind::invalid_input, "analyze: duplicate critical row for step " + std::to_string(r.step));
    critical[r.step] = r.critical_value;
  }
  AnalysisResult res;
  res.scheme = scheme;
  res.epsilon = epsilon;
  for (const auto& [step, cv] : critical) {
    const auto it = lambda.find(step);
    if (it == lambda.end()) fail(ErrorKind::invalid_input, "analyze: no llc row for checkpoint step " + std::to_string(step));
    AnalysisPoint p;
    p.step = step;
    p.lambda_hat = it->second;
    p.critical_value = cv;
    p.included = std::find(exclude_steps.begin(), exclude_steps.end(), step) == exclude_steps.end();
    res.points.push_back(p);
  }
  std::vector<double> x, y;
  for (const auto& p : res.points)
    if (p.included) {
      x.push_back(p.lambda_hat);
      y.push_back(p.critical_value);
    }
  res.included = x.size();
  if (x.size() < 3)
    fail(ErrorKind::insufficient_data, "analyze: " + std::to_string(x.size()) + " included checkpoints for scheme '" +
                                           scheme + "' at epsilon " + fmt_double(epsilon) + "; need at least 3");
  const auto fit = core::linear_fit(x, y);
  res.slope = fit.slope();
  res.intercept = fit.intercept();
  res.r_squared = fit.r_squared;
  for (auto& p : res.points) {
    p.fitted = res.intercept + res.slope * p.lambda_hat;
    p.residual = p.critical_value - p.fitted;
  }
  return res;
}

std::string analysis_csv_header() { return "epsilon,step,lambda_hat,critical_value,included,fitted,residual"; }

std::string analysis_csv_rows(const AnalysisResult& r) {
  std::string s;
  for (const auto& p : r.points)
    s += fmt_double(r.epsilon) + "," + std::to_string(p.step) + "," + fmt_double(p.lambda_hat) + "," + fmt_double(p.critical_value) + "," +
         (p.included ? "1" : "0") + "," + fmt_double(p.fitted) + "," + fmt_double(p.residual) + "\n";
  return s;
}

std::string fit_csv_header() { return "scheme,epsilon,slope,intercept,r_squared,included,total"; }

std::string fit_csv_row(const AnalysisResult& r) {
  return r.scheme + "," + fmt_double(r.epsilon) + "," + fmt_double(r.slope) + "," + fmt_double(r.intercept) + "," +
         fmt_double(r.r_squared) + "," + std::to_string(r.included) + "," + std::to_string(r.points.size());
}

std::string gnuplot_script(const AnalysisResult& r, const std::string& csv_name) {
  std::ostringstream s;
  s << "set datafile separator ','\n"
    << "set key left top\n"
    << "set xlabel 'LLC estimate'\n"
    << "set ylabel 'critical value (" << r.scheme << ", epsilon " << fmt_double(r.epsilon) << ")'\n"
    << "set title 'R^2 = " << fmt_double(r.r_squared) << "'\n"
    << "f(x) = " << fmt_double(r.intercept) << " + " << fmt_double(r.slope) << " * x\n"
    << "eps = " << fmt_double(r.epsilon) << "\n"
    << "sel(e, inc) = (abs(e - eps) <= 1e-12 * eps && inc)\n"
    << "plot '" << csv_name << "' every ::1 using (sel($1, $5 == 1) ? $3 : 1/0):4 with points pt 7 title 'included', \\\n"
    << "     '" << csv_name << "' every ::1 using (sel($1, $5 == 0) ? $3 : 1/0):4 with points pt 6 title 'excluded', \\\n"
    << "     f(x) with lines title 'fit'\n";
  return s.str();
}

}  // namespace smdl::harness
