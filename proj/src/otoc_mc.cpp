#include "otoc/otoc_mc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <sstream>
#include <thread>

#include <Eigen/Sparse>

#include "otoc/analytic.hpp"
#include "otoc/propagator.hpp"

namespace otoc {

namespace {

double denominator(const EnsembleMember& member, double beta, Normalization norm, const SpectrumModel* model) {
  if (norm == Normalization::per_member) return trace_Z(member, beta);
  if (!model) throw std::invalid_argument("mean_Z normalization needs the spectrum model");
  return mean_trZ(beta, *model);
}

}  // namespace

void RunConfig::validate() const {
  ensemble.validate();
  if (members < 2) throw std::invalid_argument("run: members must be >= 2");
  if (t_grid.empty()) throw std::invalid_argument("run: t_grid is empty");
  for (size_t i = 0; i < t_grid.size(); ++i) {
    if (t_grid[i] < 0) throw std::invalid_argument("run: t_grid must be nonnegative");
    if (i > 0 && t_grid[i] < t_grid[i - 1]) throw std::invalid_argument("run: t_grid must be sorted");
  }
  if (beta < 0) throw std::invalid_argument("run: beta must be >= 0");
  if (!compute_C && !compute_F) throw std::invalid_argument("run: nothing to compute");
  if (acceptance) {
    ensemble.spectrum.check_acceptance_scale();
    if (beta * ensemble.spectrum.delta > 0.25 + 1e-12)
      throw std::invalid_argument("run: acceptance runs need beta <= 1/(4 Delta)");
  }
}

ObservablePair RunConfig::make_pair() const {
  const IndexRange s = pair.support ? *pair.support : padded_support(ensemble.spectrum, ensemble.band_cutoff);
  return generate_pair(ensemble.spectrum.dimension, pair.kind, s, pair.bandwidth, pair.seed);
}

double eval_C(const EnsembleMember& member, const ObservablePair& pair, double beta, double t, Normalization norm,
              const SpectrumModel* model) {
  const ComplexMatrix U = build_Y(member, ComplexArgument::real_time(t)).Y;
  const ComplexMatrix Ud = build_Y(member, ComplexArgument::real_time(-t)).Y;
  const ComplexMatrix Z = build_Y(member, ComplexArgument::thermal(beta)).Y;
  const ComplexMatrix V = pair.V.cast<cplx>(), W = pair.W.cast<cplx>();
  const ComplexMatrix Wt = U * W * Ud;
  const ComplexMatrix VWt = V * Wt;
  const ComplexMatrix WtV = Wt * V;
  const cplx t1 = (Z * VWt * VWt).trace();
  const cplx t2 = (Z * WtV * WtV).trace();
  const cplx t3 = (Z * W * Ud * V * V * U * W).trace();
  const cplx t4 = (Z * V * U * W * W * Ud * V).trace();
  const cplx s = t1 + t2 - t3 - t4;
  const double scale = std::abs(t1) + std::abs(t2) + std::abs(t3) + std::abs(t4);
  if (std::abs(s.imag()) > 1e-9 * std::max(scale, 1.0)) {
    std::ostringstream os;
    os << "eval_C: imaginary residue " << s.imag() << " exceeds tolerance";
    throw std::runtime_error(os.str());
  }
  return -s.real() / denominator(member, beta, norm, model);
}

cplx eval_F(const EnsembleMember& member, const ObservablePair& pair, double beta, double t, Normalization norm,
            const SpectrumModel* model) {
  const auto chi = ComplexArgument::regularized(beta, t);
  const ComplexMatrix Y = build_Y(member, chi).Y;
  const ComplexMatrix Yd = build_Y(member, chi.conj()).Y;
  const ComplexMatrix X = pair.V.cast<cplx>() * Y * pair.W.cast<cplx>() * Yd;
  return (X * X).trace() / denominator(member, beta, norm, model);
}

double eval_C_commutator(const EnsembleMember& member, const ObservablePair& pair, double beta, double t) {
  const RealMatrix H = build_hamiltonian(member);
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(H);
  const RealMatrix& Q = es.eigenvectors();
  const Vector& lam = es.eigenvalues();
  ComplexVector u(lam.size());
  for (Eigen::Index i = 0; i < lam.size(); ++i) u(i) = std::exp(cplx(0.0, -t * lam(i)));
  const ComplexMatrix Qc = Q.cast<cplx>();
  const ComplexMatrix U = Qc * u.asDiagonal() * Qc.adjoint();
  const RealMatrix Z = Q * (-beta * lam.array()).exp().matrix().asDiagonal() * Q.transpose();
  const ComplexMatrix Wt = U * pair.W.cast<cplx>() * U.adjoint();
  const ComplexMatrix comm = Wt * pair.V.cast<cplx>() - pair.V.cast<cplx>() * Wt;
  return -(Z.cast<cplx>() * comm * comm).trace().real() / Z.trace();
}

MemberKernel::MemberKernel(const EnsembleMember& member, const ObservablePair& pair, double beta, bool need_C)
    : orthogonal_(member.mode == OverlapMode::orthogonalized), beta_(beta), E_(member.E) {
  const RealMatrix& O = member.O;
  const int D = member.dimension();
  boltz_ = spectral_phases(E_, cplx(-beta, 0.0)).real();
  const Eigen::SparseMatrix<double> Vs = pair.V.sparseView(), Ws = pair.W.sparseView();
  const RealMatrix VO = Vs * O, WO = Ws * O;
  Vt_.noalias() = O.transpose() * VO;
  Wt_.noalias() = O.transpose() * WO;
  if (orthogonal_) {
    G_ = RealMatrix::Identity(D, D);
    trZ_ = boltz_.sum();
  } else {
    G_.noalias() = O.transpose() * O;
    trZ_ = boltz_.dot(G_.diagonal());
  }
  if (need_C) {
    const RealMatrix V2 = VO.transpose() * VO;
    const RealMatrix W2 = WO.transpose() * WO;
    const RealMatrix R = Wt_ * boltz_.asDiagonal() * Wt_;
    const RealMatrix S = Vt_ * boltz_.asDiagonal() * Vt_;
    M3_ = V2.cwiseProduct(R.transpose());
    M4_ = W2.cwiseProduct(S.transpose());
  }
}

ComplexMatrix MemberKernel::times_V(const Eigen::ArrayXXcd& B) const {
  const RealMatrix Bre = B.real().matrix(), Bim = B.imag().matrix();
  ComplexMatrix P(Vt_.rows(), Vt_.cols());
  P.real().noalias() = Vt_ * Bre;
  P.imag().noalias() = Vt_ * Bim;
  return P;
}

double MemberKernel::C_numerator(double t) const {
  if (M3_.size() == 0) throw std::logic_error("MemberKernel built without C support");
  const int D = static_cast<int>(E_.size());
  const ComplexVector ph = spectral_phases(E_, cplx(0.0, -t));
  // B = diag(e^{-itE}) W~ diag(e^{itE})
  const Eigen::ArrayXXcd B = Wt_.cast<cplx>().array() * (ph * ph.adjoint()).array();
  const ComplexMatrix P = times_V(B);
  ComplexMatrix PG;
  if (orthogonal_) {
    PG = P;
  } else {
    PG.resize(D, D);
    PG.real().noalias() = P.real() * G_;
    PG.imag().noalias() = P.imag() * G_;
  }
  // T1 = Tr(D_beta P P G), T2 = conj(T1)
  const cplx T1 = (boltz_.cast<cplx>().asDiagonal() * P).cwiseProduct(PG.transpose()).sum();
  const Vector c = ph.real(), s = ph.imag();
  const double T3 = c.dot(M3_ * c) + s.dot(M3_ * s);
  const double T4 = c.dot(M4_ * c) + s.dot(M4_ * s);
  return -(2.0 * T1.real() - T3 - T4);
}

cplx MemberKernel::F_numerator(double t) const {
  const cplx chi(-beta_ / 4.0, -t);
  const ComplexVector a = spectral_phases(E_, chi);
  // B_F = diag(e^{chi E}) W~ diag(e^{chi* E})
  const Eigen::ArrayXXcd B = Wt_.cast<cplx>().array() * (a * a.adjoint()).array();
  const ComplexMatrix P = times_V(B);
  return P.cwiseProduct(P.transpose()).sum();
}

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("OTOC_RMT_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

OtocSeries run_series(const RunConfig& config) {
  config.validate();
  const SpectrumModel& model = config.ensemble.spectrum;
  const ObservablePair pair = config.make_pair();
  const int M = config.members;
  const size_t T = config.t_grid.size();

  std::vector<std::vector<double>> C(M);
  std::vector<std::vector<cplx>> F(M);
  std::vector<std::string> errors(M);
  const double mean_Z = mean_trZ(config.beta, model);

  auto work = [&](int i) {
    try {
      const auto member = sample_member(config.ensemble, config.force_same_member ? 0 : i);
      const MemberKernel kernel(member, pair, config.beta, config.compute_C);
      const double den = config.normalization == Normalization::per_member ? kernel.trace_Z() : mean_Z;
      std::vector<double> c;
      std::vector<cplx> f;
      for (double t : config.t_grid) {
        if (config.compute_C) c.push_back(kernel.C_numerator(t) / den);
        if (config.compute_F) f.push_back(kernel.F_numerator(t) / den);
      }
      C[i] = std::move(c);
      F[i] = std::move(f);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  };

  const int workers = std::min(resolve_workers(config.workers), M);
  std::atomic<int> next{0};
  auto loop = [&] {
    for (int i = next++; i < M; i = next++) work(i);
  };
  if (workers <= 1) {
    loop();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(loop);
    for (auto& th : pool) th.join();
  }

  OtocSeries out;
  out.t = config.t_grid;
  std::vector<int> ok;
  for (int i = 0; i < M; ++i) {
    if (errors[i].empty()) {
      ok.push_back(i);
    } else {
      ++out.failures;
      out.failure_messages.push_back("member " + std::to_string(i) + ": " + errors[i]);
    }
  }
  if (out.failures * 100 > M) {
    std::ostringstream os;
    os << "run_series: " << out.failures << " of " << M << " members failed";
    if (!out.failure_messages.empty()) os << " (first: " << out.failure_messages.front() << ")";
    throw std::runtime_error(os.str());
  }
  out.M = static_cast<int>(ok.size());
  const double Md = out.M;

  for (size_t k = 0; k < T; ++k) {
    if (config.compute_C) {
      double mean = 0.0;
      for (int i : ok) mean += C[i][k];
      mean /= Md;
      double var = 0.0;
      for (int i : ok) var += (C[i][k] - mean) * (C[i][k] - mean);
      var /= (Md - 1.0);
      out.C_mean.push_back(mean);
      out.C_var.push_back(var);
      out.C_stderr.push_back(std::sqrt(var / Md));
    }
    if (config.compute_F) {
      cplx mean(0.0);
      for (int i : ok) mean += F[i][k];
      mean /= Md;
      double var = 0.0;
      for (int i : ok) var += std::norm(F[i][k] - mean);
      var /= (Md - 1.0);
      const double sd = std::sqrt(var);
      int outliers = 0;
      for (int i : ok)
        if (std::abs(F[i][k] - mean) > 5.0 * sd) ++outliers;
      out.F_mean.push_back(mean);
      out.F_var.push_back(var);
      out.F_stderr.push_back(std::sqrt(var / Md));
      out.F_outlier_fraction.push_back(outliers / Md);
    }
    if (config.compute_analytic) {
      const double t = config.t_grid[k];
      if (config.compute_C) out.C_analytic.push_back(C_prediction(pair, config.beta, t, model).total());
      if (config.compute_F) out.F_analytic.push_back(F_prediction(pair, config.beta, t, model));
    }
  }
  return out;
}

}  // namespace otoc
