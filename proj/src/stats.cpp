#include "otoc/stats.hpp"

#include <cmath>
#include <stdexcept>

namespace otoc {

LinearFit weighted_linear_fit(const std::vector<double>& x, const std::vector<double>& y,
                              const std::vector<double>& w) {
  if (x.size() != y.size() || x.size() != w.size()) throw std::invalid_argument("fit: size mismatch");
  if (x.size() < 2) throw std::invalid_argument("fit: need at least two points");
  double S = 0, Sx = 0, Sy = 0, Sxx = 0, Sxy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    S += w[i];
    Sx += w[i] * x[i];
    Sy += w[i] * y[i];
    Sxx += w[i] * x[i] * x[i];
    Sxy += w[i] * x[i] * y[i];
  }
  const double det = S * Sxx - Sx * Sx;
  if (det <= 0) throw std::invalid_argument("fit: degenerate abscissae");
  LinearFit f;
  f.slope = (S * Sxy - Sx * Sy) / det;
  f.intercept = (Sxx * Sy - Sx * Sxy) / det;
  f.slope_stderr = std::sqrt(S / det);
  f.points = static_cast<int>(x.size());
  return f;
}

SampleStats sample_stats(const std::vector<double>& v) {
  if (v.size() < 2) throw std::invalid_argument("sample_stats: need at least two samples");
  SampleStats s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  for (double x : v) s.var += (x - s.mean) * (x - s.mean);
  s.var /= static_cast<double>(v.size() - 1);
  s.stderr_ = std::sqrt(s.var / static_cast<double>(v.size()));
  return s;
}

}  // namespace otoc
