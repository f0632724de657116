#include "otoc/propagator.hpp"

#include <cmath>
#include <sstream>

namespace otoc {

ComplexArgument ComplexArgument::regularized(double beta, double t) {
  if (beta < 0) throw std::invalid_argument("beta must be >= 0");
  return {cplx(-beta / 4.0, -t)};
}

ComplexArgument ComplexArgument::thermal(double beta) {
  if (beta < 0) throw std::invalid_argument("beta must be >= 0");
  return {cplx(-beta, 0.0)};
}

ComplexArgument ComplexArgument::real_time(double t) { return {cplx(0.0, -t)}; }

ComplexVector spectral_phases(const Vector& E, cplx chi) {
  ComplexVector out(E.size());
  for (Eigen::Index a = 0; a < E.size(); ++a) {
    const cplx x = chi * E(a);
    if (std::abs(x) > 700.0) {
      std::ostringstream os;
      os << "exp overflow guard: |chi*E| = " << std::abs(x) << " > 700";
      throw OverflowError(os.str());
    }
    out(a) = std::exp(x);
  }
  return out;
}

ComplexPropagator build_Y(const EnsembleMember& member, ComplexArgument chi) {
  if (chi.value.real() > 0) throw std::invalid_argument("build_Y: Re(chi) must be <= 0");
  const ComplexVector ph = spectral_phases(member.E, chi.value);
  const RealMatrix& O = member.O;
  const RealMatrix re = (O * ph.real().asDiagonal()) * O.transpose();
  const RealMatrix im = (O * ph.imag().asDiagonal()) * O.transpose();
  ComplexPropagator out;
  out.Y.resize(O.rows(), O.rows());
  out.Y.real() = 0.5 * (re + re.transpose());
  out.Y.imag() = 0.5 * (im + im.transpose());
  out.chi = chi;
  out.member_index = member.index;
  return out;
}

ComplexMatrix build_unitary(const EnsembleMember& member, double t) {
  return build_Y(member, ComplexArgument::real_time(t)).Y;
}

double trace_Z(const EnsembleMember& member, double beta) {
  return trace_Z(member, beta, {0, member.dimension() - 1});
}

double trace_Z(const EnsembleMember& member, double beta, IndexRange window) {
  if (beta < 0) throw std::invalid_argument("trace_Z: beta must be >= 0");
  const ComplexVector ph = spectral_phases(member.E, cplx(-beta, 0.0));
  const Vector w = ph.real();
  double acc = 0.0;
  for (int m = window.lo; m <= window.hi; ++m) acc += member.O.row(m).cwiseAbs2().dot(w);
  return acc;
}

}  // namespace otoc
