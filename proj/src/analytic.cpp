#include "otoc/analytic.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Sparse>

namespace otoc {

namespace {

using SparseC = Eigen::SparseMatrix<cplx>;
using SparseR = Eigen::SparseMatrix<double>;

constexpr double kPi = std::numbers::pi;

double gauss_norm(const SpectrumModel& model) {
  return std::sqrt(2.0 * kPi) * model.density() * model.delta;
}

// First-moment diagonal exp(chi^2 Delta^2 / 2 + chi e_m).
ComplexVector mean_diagonal(cplx chi, const SpectrumModel& model) {
  ComplexVector y(model.dimension);
  for (int m = 0; m < model.dimension; ++m) y(m) = first_moment(chi, model.energy(m), model.delta);
  return y;
}

SparseC to_sparse(const RealMatrix& A) {
  SparseR s = A.sparseView();
  return s.cast<cplx>();
}

// diag(A diag(y) B)
ComplexVector sandwich_diagonal(const SparseC& A, const ComplexVector& y, const SparseC& B) {
  ComplexVector out = ComplexVector::Zero(A.rows());
  // (A y B)_cc = sum_d A_cd y_d B_dc = sum_d (A^T)_dc y_d B_dc
  const SparseC At = A.transpose();
  const SparseC prod = At.cwiseProduct(B);
  for (int c = 0; c < prod.outerSize(); ++c)
    for (SparseC::InnerIterator it(prod, c); it; ++it) out(c) += it.value() * y(it.row());
  return out;
}

cplx trace_product(const SparseC& X1, const SparseC& X2) {
  const SparseC X2t = X2.transpose();
  return X1.cwiseProduct(X2t).sum();
}

cplx kernel_sum(const ComplexVector& u, const ComplexVector& v, cplx s, const SpectrumModel& model) {
  std::vector<int> iu, iv;
  for (int i = 0; i < u.size(); ++i)
    if (u(i) != cplx(0.0)) iu.push_back(i);
  for (int i = 0; i < v.size(); ++i)
    if (v(i) != cplx(0.0)) iv.push_back(i);
  cplx acc(0.0);
  for (int b : iu)
    for (int c : iv) acc += pair_kernel(model.energy(b), model.energy(c), s, model) * u(b) * v(c);
  return acc;
}

Vector hf_boltzmann(double beta, const SpectrumModel& model) {
  Vector z(model.dimension);
  for (int m = 0; m < model.dimension; ++m) z(m) = std::exp(-beta * model.energy(m));
  return z;
}

double kernel_prefactor(const SpectrumModel& model, AsymptotePrefactor p) {
  return p == AsymptotePrefactor::derived ? 1.0 / (2.0 * std::sqrt(kPi) * model.density() * model.delta)
                                          : 1.0 / gauss_norm(model);
}

}  // namespace

cplx MomentSpec::chi_total() const {
  cplx s(0.0);
  for (const cplx& c : chis) s += c;
  return s;
}

int MomentSpec::n(int j) const {
  if (n_indices.empty()) return m_indices[(j + 1) % m_indices.size()];
  return n_indices[j];
}

bool MomentSpec::is_chain() const {
  const int k = order();
  for (int j = 0; j < k; ++j)
    if (n(j) != m_indices[(j + 1) % k]) return false;
  return true;
}

void MomentSpec::validate(int max_order) const {
  const int k = order();
  if (k < 1 || k > max_order) {
    std::ostringstream os;
    os << "moment order " << k << " outside [1, " << max_order << "]";
    throw std::invalid_argument(os.str());
  }
  if (static_cast<int>(m_indices.size()) != k) throw std::invalid_argument("moment: m_indices size != k");
  if (!n_indices.empty() && static_cast<int>(n_indices.size()) != k)
    throw std::invalid_argument("moment: n_indices size != k");
}

cplx first_moment(cplx chi, double e_m, double delta) {
  return std::exp(chi * chi * delta * delta / 2.0 + chi * e_m);
}

cplx correlated_moment(const MomentSpec& spec, const SpectrumModel& model, MomentSign sign) {
  spec.validate(8);
  if (!spec.is_chain()) return {0.0, 0.0};
  const int k = spec.order();
  const cplx chi = spec.chi_total();
  const double Dl = model.delta;
  double esum = 0.0, spread = 0.0;
  for (int j = 0; j < k; ++j) {
    const double ej = model.energy(spec.m_indices[j]);
    esum += ej;
    for (int l = j + 1; l < k; ++l) {
      const double d = ej - model.energy(spec.m_indices[l]);
      spread += d * d;
    }
  }
  const double s = sign == MomentSign::negative ? -1.0 : 1.0;
  return std::sqrt(1.0 / k) * std::pow(gauss_norm(model), -(k - 1)) *
         std::exp(chi * esum / static_cast<double>(k) + chi * chi * Dl * Dl / (2.0 * k)) *
         std::exp(s * spread / (2.0 * k * Dl * Dl));
}

cplx pair_kernel(double e_b, double e_c, cplx s, const SpectrumModel& model) {
  const double Dl = model.delta;
  const double d = e_b - e_c;
  return std::exp(s * (e_b + e_c) / 2.0 + s * s * Dl * Dl / 4.0 - d * d / (4.0 * Dl * Dl)) /
         (2.0 * std::sqrt(kPi) * model.density() * Dl);
}

double trace_Z_HF(double beta, const SpectrumModel& model) {
  return trace_Z_HF(beta, model, {0, model.dimension - 1});
}

double trace_Z_HF(double beta, const SpectrumModel& model, IndexRange window) {
  double acc = 0.0;
  for (int m = window.lo; m <= window.hi; ++m) acc += std::exp(-beta * model.energy(m));
  return acc;
}

double mean_trZ(double beta, const SpectrumModel& model) {
  return mean_trZ(beta, model, {0, model.dimension - 1});
}

double mean_trZ(double beta, const SpectrumModel& model, IndexRange window) {
  if (beta < 0) throw std::invalid_argument("mean_trZ: beta must be >= 0");
  return std::exp(beta * beta * model.delta * model.delta / 2.0) * trace_Z_HF(beta, model, window);
}

double corr_trZ_squared(double beta, const SpectrumModel& model) {
  const double Dl = model.delta;
  double acc = 0.0;
  for (int m = 0; m < model.dimension; ++m) acc += std::exp(-2.0 * beta * model.energy(m));
  return std::exp(beta * beta * Dl * Dl) * acc / (2.0 * std::sqrt(kPi) * model.density() * Dl);
}

FourPointTerms four_point_leading(const RealMatrix& A, const RealMatrix& B,
                                  const std::array<cplx, 4>& chi, const SpectrumModel& model) {
  const SparseC As = to_sparse(A), Bs = to_sparse(B);
  std::array<ComplexVector, 4> y;
  for (int j = 0; j < 4; ++j) y[j] = mean_diagonal(chi[j], model);

  FourPointTerms out;
  const SparseC X1 = As * y[0].asDiagonal() * Bs * y[1].asDiagonal();
  const SparseC X2 = As * y[2].asDiagonal() * Bs * y[3].asDiagonal();
  out.means = trace_product(X1, X2);

  const ComplexVector u2 = sandwich_diagonal(Bs, y[1], As);
  const ComplexVector u4 = sandwich_diagonal(Bs, y[3], As);
  out.pair13 = kernel_sum(u4, u2, chi[0] + chi[2], model);

  const ComplexVector u1 = sandwich_diagonal(As, y[0], Bs);
  const ComplexVector u3 = sandwich_diagonal(As, y[2], Bs);
  out.pair24 = kernel_sum(u1, u3, chi[1] + chi[3], model);
  return out;
}

F0Terms F0(const ObservablePair& pair, double beta, double t, const SpectrumModel& model) {
  const cplx chi(-beta / 4.0, -t);
  const int D = model.dimension;
  ComplexVector g(D), gs(D);
  for (int m = 0; m < D; ++m) {
    g(m) = std::exp(chi * model.energy(m));
    gs(m) = std::exp(std::conj(chi) * model.energy(m));
  }
  const SparseC V = to_sparse(pair.V), W = to_sparse(pair.W);
  F0Terms out;
  const SparseC X = V * g.asDiagonal() * W * gs.asDiagonal();
  out.term1 = trace_product(X, X);

  const double Dl = model.delta;
  const double pref = 1.0 / (2.0 * std::sqrt(kPi) * model.density() * Dl);
  auto double_sum = [&](const ComplexVector& u, cplx c) {
    cplx acc(0.0);
    for (int a = 0; a < D; ++a) {
      if (u(a) == cplx(0.0)) continue;
      for (int b = 0; b < D; ++b) {
        if (u(b) == cplx(0.0)) continue;
        const double ea = model.energy(a), eb = model.energy(b);
        acc += pref * std::exp(c * (ea + eb)) * std::exp(-(ea - eb) * (ea - eb) / (4.0 * Dl * Dl)) * u(a) * u(b);
      }
    }
    return acc;
  };
  // <WV>_mm = sum_n W_mn exp(chi* e_n) V_nm
  out.term2 = double_sum(sandwich_diagonal(W, gs, V), chi);
  out.term3 = std::conj(double_sum(sandwich_diagonal(V, gs, W), chi));
  return out;
}

cplx F_prediction(const ObservablePair& pair, double beta, double t, const SpectrumModel& model) {
  const double Dl = model.delta;
  return std::exp(-2.0 * t * t * Dl * Dl - 3.0 * beta * beta * Dl * Dl / 8.0) * F0(pair, beta, t, model).total() /
         trace_Z_HF(beta, model);
}

C0Traces C0_traces(const ObservablePair& pair, double beta, double t, const SpectrumModel& model) {
  const cplx it(0.0, t);
  C0Traces out;
  out.T1 = four_point_leading(pair.V, pair.W, {-it, it, -it, it - beta}, model);
  out.T2 = four_point_leading(pair.W, pair.V, {it, -it, it, -beta - it}, model);
  return out;
}

C0Terms C0(const ObservablePair& pair, double beta, double t, const SpectrumModel& model) {
  const double Dl = model.delta;
  const C0Traces tr = C0_traces(pair, beta, t, model);
  const double scale = std::exp(2.0 * t * t * Dl * Dl - beta * beta * Dl * Dl / 2.0);
  C0Terms out;
  out.means = scale * (tr.T1.means + tr.T2.means);
  out.pair13 = scale * (tr.T1.pair13 + tr.T2.pair13);
  out.pair24 = scale * (tr.T1.pair24 + tr.T2.pair24);
  return out;
}

double C_asymptote(const ObservablePair& pair, double beta, const SpectrumModel& model,
                   AsymptotePrefactor prefactor) {
  const int D = model.dimension;
  const Vector z = hf_boltzmann(beta, model);
  const SparseR V = pair.V.sparseView(), W = pair.W.sparseView();
  const double pref = kernel_prefactor(model, prefactor);
  const double Dl = model.delta;
  auto half = [&](const SparseR& A, const SparseR& B) {
    // (A Z A)_mm and (B^2)_ll
    Vector aza = Vector::Zero(D), b2 = Vector::Zero(D);
    for (int c = 0; c < A.outerSize(); ++c)
      for (SparseR::InnerIterator it(A, c); it; ++it) aza(c) += it.value() * it.value() * z(it.row());
    for (int c = 0; c < B.outerSize(); ++c)
      for (SparseR::InnerIterator it(B, c); it; ++it) b2(c) += it.value() * it.value();
    double acc = 0.0;
    for (int m = 0; m < D; ++m) {
      if (aza(m) == 0.0) continue;
      double inner = 0.0;
      for (int l = 0; l < D; ++l) {
        if (b2(l) == 0.0) continue;
        const double d = model.energy(m) - model.energy(l);
        inner += std::exp(-d * d / (4.0 * Dl * Dl)) * b2(l);
      }
      acc += aza(m) * pref * inner;
    }
    return acc;
  };
  return (half(W, V) + half(V, W)) / trace_Z_HF(beta, model);
}

double C_transient(const ObservablePair& pair, double beta, double t, const SpectrumModel& model) {
  const int D = model.dimension;
  const double Dl = model.delta;
  ComplexVector ph(D);
  Vector z = hf_boltzmann(beta, model);
  for (int m = 0; m < D; ++m) ph(m) = std::exp(cplx(0.0, t * model.energy(m)));
  const SparseC V = to_sparse(pair.V), W = to_sparse(pair.W);
  const ComplexVector zc = z.cast<cplx>();
  // Tr(W Z W e^{itH} V^2 e^{-itH}) + Tr(V Z V e^{-itH} W^2 e^{itH})
  const SparseC WZW = W * zc.asDiagonal() * W;
  const SparseC VZV = V * zc.asDiagonal() * V;
  const SparseC M3 = ph.asDiagonal() * (V * V) * ph.conjugate().asDiagonal();
  const SparseC M4 = ph.conjugate().asDiagonal() * (W * W) * ph.asDiagonal();
  const cplx s = trace_product(WZW, M3) + trace_product(VZV, M4);
  return std::exp(-t * t * Dl * Dl) * s.real() / trace_Z_HF(beta, model);
}

CPrediction C_prediction(const ObservablePair& pair, double beta, double t, const SpectrumModel& model) {
  const double Dl = model.delta;
  CPrediction out;
  out.c0_term = -std::exp(-2.0 * t * t * Dl * Dl) * C0(pair, beta, t, model).total() / trace_Z_HF(beta, model);
  out.transient = C_transient(pair, beta, t, model);
  out.asymptote = C_asymptote(pair, beta, model);
  return out;
}

}  // namespace otoc
