#include "otoc/observables.hpp"

#include <cmath>

namespace otoc {

ObservablePair generate_pair(int D, OperatorKind kind, IndexRange support, int bandwidth,
                             std::uint64_t seed) {
  if (D < 1) throw std::invalid_argument("generate_pair: D must be >= 1");
  if (support.empty()) throw std::invalid_argument("generate_pair: empty support");
  if (support.lo < 0 || support.hi >= D)
    throw std::invalid_argument("generate_pair: support outside [0, D)");
  if (bandwidth < 1) throw std::invalid_argument("generate_pair: bandwidth must be >= 1");

  ObservablePair p;
  p.kind = kind;
  p.support = support;
  p.bandwidth = bandwidth;
  p.V = RealMatrix::Zero(D, D);
  p.W = RealMatrix::Zero(D, D);

  if (kind == OperatorKind::hopping) {
    p.bandwidth = 1;
    for (int m = support.lo; m < support.hi; ++m) p.V(m, m + 1) = p.V(m + 1, m) = 1.0;
    for (int m = support.lo + 1; m < support.hi; ++m) p.W(m, m + 1) = p.W(m + 1, m) = 1.0;
    return p;
  }

  auto rng = member_rng(seed, -1, 0x6f7073ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto fill = [&](RealMatrix& A) {
    for (int m = support.lo; m <= support.hi; ++m)
      for (int n = m + 1; n <= std::min(support.hi, m + bandwidth); ++n) A(m, n) = A(n, m) = normal(rng);
    const double f = A.norm();
    if (f == 0.0) throw std::invalid_argument("generate_pair: support admits no off-diagonal entry");
    A *= std::sqrt(static_cast<double>(D)) / f;
  };
  fill(p.V);
  fill(p.W);
  return p;
}

IndexRange padded_support(const SpectrumModel& model, double band_cutoff) {
  const int pad = static_cast<int>(std::ceil(band_cutoff * model.levels_per_window()));
  return {pad, model.dimension - 1 - pad};
}

IndexRange centred_support(int D, int width) {
  const int lo = D / 2 - width / 2;
  return {lo, lo + width - 1};
}

double check_one_point(const RealMatrix& A, const SpectrumModel& model, double beta, int k, int n) {
  if (k < 1) throw std::invalid_argument("check_one_point: k must be >= 1");
  const double Dl = model.delta;
  const double en = model.energy(n);
  double acc = 0.0;
  for (int m = 0; m < A.rows(); ++m) {
    const double em = model.energy(m);
    acc += A(m, m) * std::exp(-beta * em) * std::exp(-(em - en) * (em - en) / (2.0 * k * Dl * Dl));
  }
  return acc;
}

}  // namespace otoc
