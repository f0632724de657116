#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "otoc/ensemble.hpp"
#include "otoc/observables.hpp"
#include "otoc/types.hpp"

namespace otoc {

enum class Normalization { per_member, mean_Z };

struct PairSpec {
  OperatorKind kind = OperatorKind::hopping;
  // Unset: padded by band_cutoff*Delta from both spectrum edges.
  std::optional<IndexRange> support;
  int bandwidth = 1;
  std::uint64_t seed = 0;
};

struct RunConfig {
  EnsembleConfig ensemble;
  PairSpec pair;
  double beta = 0.0;
  std::vector<double> t_grid;
  int members = 200;
  Normalization normalization = Normalization::per_member;
  bool compute_C = true;
  bool compute_F = true;
  bool compute_analytic = true;
  // Every member uses index 0 (degenerate ensemble).
  bool force_same_member = false;
  // 0: OTOC_RMT_WORKERS or hardware concurrency.
  int workers = 0;
  // Enforces N >= 8 and beta <= 1/(4 Delta).
  bool acceptance = false;

  void validate() const;
  ObservablePair make_pair() const;
};

struct OtocSeries {
  std::vector<double> t;
  std::vector<double> C_mean, C_var, C_stderr, C_analytic;
  std::vector<cplx> F_mean, F_analytic;
  std::vector<double> F_var, F_stderr;
  // Fraction of members with |F - <F>| > 5 sd.
  std::vector<double> F_outlier_fraction;
  int M = 0;
  int failures = 0;
  std::vector<std::string> failure_messages;
};

// Reference evaluation from dense propagators in the HF basis.
double eval_C(const EnsembleMember& member, const ObservablePair& pair, double beta, double t,
              Normalization norm = Normalization::per_member, const SpectrumModel* model = nullptr);
cplx eval_F(const EnsembleMember& member, const ObservablePair& pair, double beta, double t,
            Normalization norm = Normalization::per_member, const SpectrumModel* model = nullptr);

// Commutator form -Tr(Z [W(t), V]^2) / Tr Z with W(t) = U W U^dagger.
double eval_C_commutator(const EnsembleMember& member, const ObservablePair& pair, double beta, double t);

// Per-member evaluator working in the eigenbasis of the member: operators are
// transformed once, each time point then costs a few dense products.
class MemberKernel {
 public:
  MemberKernel(const EnsembleMember& member, const ObservablePair& pair, double beta, bool need_C = true);

  double trace_Z() const { return trZ_; }
  // Un-normalized numerators.
  double C_numerator(double t) const;
  cplx F_numerator(double t) const;

 private:
  ComplexMatrix times_V(const Eigen::ArrayXXcd& B) const;

  bool orthogonal_;
  double beta_;
  Vector E_, boltz_;
  RealMatrix Vt_, Wt_, G_, M3_, M4_;
  double trZ_ = 0;
};

// Number of worker threads: explicit request, else OTOC_RMT_WORKERS, else hardware.
int resolve_workers(int requested);

OtocSeries run_series(const RunConfig& config);

}  // namespace otoc
