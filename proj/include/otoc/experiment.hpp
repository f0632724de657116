#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "otoc/config.hpp"
#include "otoc/otoc_mc.hpp"
#include "otoc/stats.hpp"

namespace otoc {

struct Overrides {
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
};

struct BandResult {
  std::string name;
  bool pass = false;
  double value = 0;
  double threshold = 0;
  std::string detail;
  // Reported only; does not enter the pass/fail verdict.
  bool informational = false;
};

struct EnvelopeFit {
  LinearFit fit;
  // fitted coefficient / (2 Delta^2)
  double relative = 0;
};

// Weighted fit of -log(|F_MC| / |F0/Tr Z_HF|) against t^2 over grid points with
// t*Delta <= t_delta_max and |F_MC| > 3 stderr (the log is only meaningful
// where the mean is resolved).
std::optional<EnvelopeFit> fit_envelope(const OtocSeries& s, const ObservablePair& pair, double beta,
                                        const SpectrumModel& model, double t_delta_max = 1e300);

// Fraction of grid points with |F_MC - F_an| <= 3 stderr + |F_an| * 2/N^order.
double F_pointwise_fraction(const OtocSeries& s, double N, int order = 1);

// Copy of `run` at N levels per window with D/N held fixed and the operator
// support pinned to `width` centred sites.
RunConfig scaled_run(const RunConfig& run, double N, int width);

// Default support width for scaling studies: the padded support of `run`.
int default_scaling_width(const RunConfig& run);

struct RunOutcome {
  OtocSeries series;
  std::vector<BandResult> bands;
  std::optional<EnvelopeFit> envelope;
};

RunOutcome run_experiment(const ExperimentConfig& cfg);

int cmd_run(const std::string& config_path, const Overrides& ov, std::ostream& log);
int cmd_validate_moments(const std::string& config_path, const Overrides& ov, std::ostream& log);
int cmd_variance_report(const std::string& config_path, const Overrides& ov, std::ostream& log);

}  // namespace otoc
