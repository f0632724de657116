#pragma once

#include <istream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "otoc/otoc_mc.hpp"

namespace otoc {

struct ConfigError : std::runtime_error {
  ConfigError(const std::string& source, int line, const std::string& msg);
  int line;
};

// INI-style document. Energies are in units of the mean spacing d; beta and
// times are given in units of 1/Delta (keys beta_delta, t_delta_*).
//
// [spectrum]  dimension (required), levels_per_window (required, N = Delta/d), mean_spacing = 1
// [ensemble]  eigenvalue_mode = picket|goe_unfolded, overlap_mode = gaussian|orthogonalized,
//             window = gaussian|lorentzian, band_cutoff = 6, seed = 0
// [operators] kind = hopping|random_offdiag, support_lo, support_hi (both or neither),
//             bandwidth = 1 (hopping) or 4 (random_offdiag), seed = 0
// [run]       beta_delta = 0, t_delta_list = "a, b, ..." or t_delta_min = 0 / t_delta_max / t_points = 25,
//             members = 200, normalization = per_member|mean_Z, compute = both|C|F,
//             workers = 0, acceptance = false,
//             moment_instances = 20, moment_mc_members = 2000, moment_mc_points = 10,
//             variance_levels = "16, 32", variance_t_delta = 0.5, variance_members = 400
// [output]    dir = .
struct ExperimentConfig {
  RunConfig run;
  bool has_t_grid = false;
  std::string out_dir = ".";

  int moment_instances = 20;
  int moment_mc_members = 2000;
  int moment_mc_points = 10;

  std::vector<double> variance_levels{16, 32};
  double variance_t_delta = 0.5;
  int variance_members = 400;

  // section.key -> raw value, in document order of keys
  std::map<std::string, std::string> echo;
};

ExperimentConfig parse_config(std::istream& in, const std::string& source = "<config>");
ExperimentConfig load_config(const std::string& path);

}  // namespace otoc
