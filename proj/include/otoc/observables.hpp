#pragma once

#include <cstdint>

#include "otoc/ensemble.hpp"
#include "otoc/types.hpp"

namespace otoc {

enum class OperatorKind { random_offdiag, hopping };

struct ObservablePair {
  RealMatrix V;
  RealMatrix W;
  OperatorKind kind = OperatorKind::hopping;
  IndexRange support;
  int bandwidth = 1;
};

// random_offdiag: N(0,1) entries on 1 <= |m-n| <= bandwidth inside support,
// symmetric, zero diagonal, Frobenius norm sqrt(D).
// hopping: V has unit bonds (m, m+1) across the support, W the same bonds
// shifted up by one site (its support is [lo+1, hi]).
ObservablePair generate_pair(int D, OperatorKind kind, IndexRange support, int bandwidth,
                             std::uint64_t seed);

// Support padded by band_cutoff*Delta from both spectrum edges.
IndexRange padded_support(const SpectrumModel& model, double band_cutoff);

// Centred support of `width` sites.
IndexRange centred_support(int D, int width);

// sum_m A_mm exp(-beta e_m) exp(-(e_m - e_n)^2 / (2 k Delta^2))
double check_one_point(const RealMatrix& A, const SpectrumModel& model, double beta, int k, int n);

}  // namespace otoc
