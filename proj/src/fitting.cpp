#include "privtuner/fitting.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace privtuner::fitting {

namespace {

std::size_t count_distinct_lambdas(const std::vector<SamplePoint>& samples) {
  std::vector<double> seen;
  for (const SamplePoint& s : samples) {
    bool found = false;
    for (double v : seen) found = found || v == s.lam;
    if (!found) seen.push_back(s.lam);
  }
  return seen.size();
}

}  // namespace

LinearFit fit_linear(const std::vector<SamplePoint>& samples) {
  if (samples.size() < 2 || count_distinct_lambdas(samples) < 2)
    throw std::invalid_argument("fit_linear: need at least two distinct lambdas");

  const double n = static_cast<double>(samples.size());
  double sx = 0.0, sy = 0.0;
  for (const SamplePoint& s : samples) {
    sx += s.lam;
    sy += s.value;
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const SamplePoint& s : samples) {
    sxx += (s.lam - mx) * (s.lam - mx);
    sxy += (s.lam - mx) * (s.value - my);
    syy += (s.value - my) * (s.value - my);
  }

  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (const SamplePoint& s : samples) {
    const double r = s.value - (fit.slope * s.lam + fit.intercept);
    ss_res += r * r;
  }
  fit.r2 = (syy > 0.0) ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

ShiftedQuadraticFit fit_shifted_quadratic(const std::vector<SamplePoint>& samples) {
  if (samples.size() < 3 || count_distinct_lambdas(samples) < 3)
    throw std::invalid_argument("fit_shifted_quadratic: need at least three distinct lambdas");

  // Normal equations for y = a*x^2 + b*x + c. Lambdas are scaled by their
  // mean magnitude first; x^4 sums overflow double for lambda ~ 1e4 otherwise.
  double scale = 0.0;
  for (const SamplePoint& s : samples) scale = std::max(scale, std::fabs(s.lam));
  if (scale == 0.0) scale = 1.0;

  double s0 = 0, s1 = 0, s2 = 0, s3 = 0, s4 = 0;
  double t0 = 0, t1 = 0, t2 = 0;
  for (const SamplePoint& s : samples) {
    const double x = s.lam / scale;
    const double x2 = x * x;
    s0 += 1.0;
    s1 += x;
    s2 += x2;
    s3 += x2 * x;
    s4 += x2 * x2;
    t0 += s.value;
    t1 += s.value * x;
    t2 += s.value * x2;
  }

  // Solve the 3x3 system [s4 s3 s2; s3 s2 s1; s2 s1 s0] * [a b c] = [t2 t1 t0]
  double m[3][4] = {{s4, s3, s2, t2}, {s3, s2, s1, t1}, {s2, s1, s0, t0}};
  for (int col = 0; col < 3; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::fabs(m[r][col]) > std::fabs(m[pivot][col])) pivot = r;
    for (int k = 0; k < 4; ++k) std::swap(m[col][k], m[pivot][k]);
    if (m[col][col] == 0.0)
      throw std::invalid_argument("fit_shifted_quadratic: degenerate sample set");
    for (int r = 0; r < 3; ++r) {
      if (r == col) continue;
      const double factor = m[r][col] / m[col][col];
      for (int k = col; k < 4; ++k) m[r][k] -= factor * m[col][k];
    }
  }
  const double a = m[0][3] / m[0][0] / (scale * scale);
  const double b = m[1][3] / m[1][1] / scale;
  const double c = m[2][3] / m[2][2];

  if (a <= 0.0)
    throw std::invalid_argument("fit_shifted_quadratic: data is not convex increasing");

  ShiftedQuadraticFit fit;
  fit.c1 = a;
  fit.c2 = b / (2.0 * a);
  fit.consistency_residual = std::fabs(c - fit.c1 * fit.c2 * fit.c2);
  return fit;
}

FitModel default_fit() {
  FitModel fit;
  fit.c1 = 0.0066;
  fit.c2 = 22421.0;
  fit.c3 = 29.0862;
  fit.c4 = -30253.0;
  fit.c5 = 68.6450;
  fit.c6 = 57511.0;
  fit.c7 = 0.0205;
  fit.c8 = -30.73;
  return fit;
}

std::vector<SamplePoint> security_dataset() {
  return {
      {2048.0, 44.5},  {4096.0, 65.8},   {6144.0, 96.9},   {8192.0, 130.8},
      {12288.0, 204.8}, {16384.0, 281.7}, {24576.0, 458.7}, {32768.0, 645.0},
  };
}

std::vector<SamplePoint> load_samples_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line))
    throw std::invalid_argument("samples csv: empty input (header required)");

  std::vector<SamplePoint> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::size_t comma = line.find(',');
    if (comma == std::string::npos)
      throw std::invalid_argument("samples csv: missing comma on line " + std::to_string(lineno));
    SamplePoint s;
    try {
      s.lam = std::stod(line.substr(0, comma));
      s.value = std::stod(line.substr(comma + 1));
    } catch (const std::exception&) {
      throw std::invalid_argument("samples csv: bad number on line " + std::to_string(lineno));
    }
    if (s.lam <= 0.0 || !std::isfinite(s.value))
      throw std::invalid_argument("samples csv: invalid sample on line " + std::to_string(lineno));
    out.push_back(s);
  }
  return out;
}

std::vector<SamplePoint> load_samples_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("samples csv: cannot open " + path);
  return load_samples_csv(in);
}

}  // namespace privtuner::fitting
