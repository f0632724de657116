#pragma once

#include "otoc/ensemble.hpp"
#include "otoc/types.hpp"

namespace otoc {

struct ComplexArgument {
  cplx value{0.0, 0.0};

  // -beta/4 - i t, the quarter-power argument of the regularized correlator.
  static ComplexArgument regularized(double beta, double t);
  // -beta, giving Z = exp(-beta H).
  static ComplexArgument thermal(double beta);
  // -i t, giving U(t).
  static ComplexArgument real_time(double t);

  ComplexArgument conj() const { return {std::conj(value)}; }
};

struct ComplexPropagator {
  ComplexMatrix Y;
  ComplexArgument chi;
  std::int64_t member_index = 0;
};

// exp(chi * E) with the overflow guard |chi E| <= 700.
ComplexVector spectral_phases(const Vector& E, cplx chi);

// Y(chi) = O diag(exp(chi E)) O^T. Throws std::invalid_argument when Re(chi) > 0
// and OverflowError when |chi E_alpha| > 700.
ComplexPropagator build_Y(const EnsembleMember& member, ComplexArgument chi);

ComplexMatrix build_unitary(const EnsembleMember& member, double t);

double trace_Z(const EnsembleMember& member, double beta);
// Trace restricted to HF indices in `window`.
double trace_Z(const EnsembleMember& member, double beta, IndexRange window);

}  // namespace otoc
