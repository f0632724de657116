#pragma once

#include <vector>

namespace otoc {

struct LinearFit {
  double intercept = 0;
  double slope = 0;
  double slope_stderr = 0;
  int points = 0;
};

// Weighted least squares y = intercept + slope * x with weights w = 1/sigma^2.
LinearFit weighted_linear_fit(const std::vector<double>& x, const std::vector<double>& y,
                              const std::vector<double>& w);

struct SampleStats {
  double mean = 0;
  double var = 0;
  double stderr_ = 0;
};

// Two-pass mean and unbiased variance.
SampleStats sample_stats(const std::vector<double>& v);

}  // namespace otoc
