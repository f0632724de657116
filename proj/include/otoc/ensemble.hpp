#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "otoc/types.hpp"

namespace otoc {

// Picket-fence HF spectrum: energies m*d for m = 0..D-1, constant density 1/d.
struct SpectrumModel {
  int dimension = 1;
  double mean_spacing = 1.0;
  double delta = 1.0;

  static SpectrumModel from_levels(int D, double N, double d = 1.0) {
    return {D, d, N * d};
  }

  double density() const { return 1.0 / mean_spacing; }
  double levels_per_window() const { return delta / mean_spacing; }
  double energy(int m) const { return m * mean_spacing; }
  Vector energies() const;

  // Throws std::invalid_argument on D < 1, d <= 0, delta <= 0 or N < 1.
  void validate() const;
  // Throws when N < 8; returns a warning message when 8 <= N < 16, else "".
  std::string check_acceptance_scale() const;
};

enum class EigenvalueMode { picket, goe_unfolded };
enum class OverlapMode { gaussian, orthogonalized };
// Lorentzian is reserved; sampling with it throws.
enum class WindowShape { gaussian, lorentzian };

struct EnsembleConfig {
  SpectrumModel spectrum;
  EigenvalueMode eigenvalue_mode = EigenvalueMode::picket;
  OverlapMode overlap_mode = OverlapMode::gaussian;
  WindowShape window = WindowShape::gaussian;
  double band_cutoff = 6.0;
  std::uint64_t seed = 0;

  void validate() const;
  // Largest |m - alpha| kept inside the band.
  int band_halfwidth() const;
};

struct EnsembleMember {
  RealMatrix O;
  Vector E;
  Vector Ebar;
  std::int64_t index = 0;
  OverlapMode mode = OverlapMode::gaussian;

  int dimension() const { return static_cast<int>(E.size()); }
};

double window_weight(double e_m, double ebar_alpha, const SpectrumModel& model);

// Independent stream per (seed, member index, substream).
std::mt19937_64 member_rng(std::uint64_t seed, std::int64_t index, std::uint64_t substream);

EnsembleMember sample_member(const EnsembleConfig& config, std::int64_t member_index);

RealMatrix build_hamiltonian(const EnsembleMember& member);

// Orthogonal polar factor of a square matrix by scaled Newton iteration.
RealMatrix polar_factor(const RealMatrix& X, double tol = 1e-13, int max_iter = 100);

// GOE spectrum of size D unfolded to constant spacing d, sorted ascending and
// centred on the picket grid mean.
Vector sample_unfolded_goe(int D, double d, std::mt19937_64& rng);

// Wigner surmise check on pooled unfolded spacings: 10 equiprobable bins,
// returns the chi-squared p-value.
struct SpacingTest {
  double chi2 = 0;
  double p_value = 0;
  int samples = 0;
};
SpacingTest wigner_surmise_test(const std::vector<double>& spacings, int bins = 10);

}  // namespace otoc
