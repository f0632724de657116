#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "otoc/ensemble.hpp"
#include "otoc/observables.hpp"
#include "otoc/types.hpp"

namespace otoc {

// Product of k factors Y_{m_j n_j}(chi_j). When n_indices is empty the
// cyclic chain n_j = m_{j+1} is implied.
struct MomentSpec {
  std::vector<cplx> chis;
  std::vector<int> m_indices;
  std::vector<int> n_indices;

  int order() const { return static_cast<int>(chis.size()); }
  cplx chi_total() const;
  int n(int j) const;
  bool is_chain() const;
  void validate(int max_order) const;
};

enum class PredictionKind { first_moment, corr_moment, trZ, trZ2_corr, C_of_t, F_of_t, F0, C0, C_asymptote };

struct AnalyticPrediction {
  PredictionKind kind;
  cplx value;
  std::map<std::string, double> inputs;
};

// Sign of the energy-difference exponent of the correlated moment. The
// printed_positive variant exists only to show that it disagrees with the
// exact contraction sum.
enum class MomentSign { negative, printed_positive };

cplx first_moment(cplx chi, double e_m, double delta);

cplx correlated_moment(const MomentSpec& spec, const SpectrumModel& model,
                       MomentSign sign = MomentSign::negative);

// Sum_m exp(-beta e_m), optionally over a window of HF indices.
double trace_Z_HF(double beta, const SpectrumModel& model);
double trace_Z_HF(double beta, const SpectrumModel& model, IndexRange window);

double mean_trZ(double beta, const SpectrumModel& model);
double mean_trZ(double beta, const SpectrumModel& model, IndexRange window);

double corr_trZ_squared(double beta, const SpectrumModel& model);

// Leading-order average of Tr(A Y1 B Y2 A Y3 B Y4) for zero-diagonal A, B.
// means: every Y replaced by its first moment. pair13 / pair24: Y1,Y3 (Y2,Y4)
// correlated, the others replaced by first moments.
struct FourPointTerms {
  cplx means{0.0, 0.0};
  cplx pair13{0.0, 0.0};
  cplx pair24{0.0, 0.0};
  cplx total() const { return means + pair13 + pair24; }
};

FourPointTerms four_point_leading(const RealMatrix& A, const RealMatrix& B,
                                  const std::array<cplx, 4>& chi, const SpectrumModel& model);

struct F0Terms {
  cplx term1{0.0, 0.0};
  cplx term2{0.0, 0.0};
  cplx term3{0.0, 0.0};
  cplx total() const { return term1 + term2 + term3; }
};

F0Terms F0(const ObservablePair& pair, double beta, double t, const SpectrumModel& model);

// exp(-2 t^2 Delta^2 - 3 beta^2 Delta^2 / 8) F0 / Tr Z_HF.
cplx F_prediction(const ObservablePair& pair, double beta, double t, const SpectrumModel& model);

// The three C0 pieces, each summed over the first two traces of the four-trace
// expansion, scaled so that the C contribution is -exp(-2 t^2 Delta^2) C0 / Tr Z_HF.
struct C0Terms {
  cplx means{0.0, 0.0};
  cplx pair13{0.0, 0.0};
  cplx pair24{0.0, 0.0};
  cplx total() const { return means + pair13 + pair24; }
};

C0Terms C0(const ObservablePair& pair, double beta, double t, const SpectrumModel& model);

// The raw leading-order averages of the two traces that build C0.
struct C0Traces {
  FourPointTerms T1;
  FourPointTerms T2;
};
C0Traces C0_traces(const ObservablePair& pair, double beta, double t, const SpectrumModel& model);

enum class AsymptotePrefactor { derived, printed };

// Time-independent terms: [sum_m (W Z W)_mm sum_l K_ml (V^2)_ll + (V <-> W)] / Tr Z_HF
// with K_ml = exp(-(e_m-e_l)^2/(4 Delta^2)) / (2 sqrt(pi) rho Delta). The printed
// variant uses 1/(sqrt(2 pi) rho Delta).
double C_asymptote(const ObservablePair& pair, double beta, const SpectrumModel& model,
                   AsymptotePrefactor prefactor = AsymptotePrefactor::derived);

// All-first-moment part of the last two traces, decaying as exp(-t^2 Delta^2).
double C_transient(const ObservablePair& pair, double beta, double t, const SpectrumModel& model);

struct CPrediction {
  cplx c0_term{0.0, 0.0};
  double transient = 0;
  double asymptote = 0;
  double total() const { return c0_term.real() + transient + asymptote; }
};

CPrediction C_prediction(const ObservablePair& pair, double beta, double t, const SpectrumModel& model);

// Two-level kernel exp(s(e_b+e_c)/2 + s^2 Delta^2/4 - (e_b-e_c)^2/(4 Delta^2)) / (2 sqrt(pi) rho Delta).
cplx pair_kernel(double e_b, double e_c, cplx s, const SpectrumModel& model);

}  // namespace otoc
