#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "otoc/analytic.hpp"
#include "otoc/ensemble.hpp"
#include "otoc/types.hpp"

namespace otoc {

// Slots 2j and 2j+1 are the left (m_j) and right (n_j) O factors of the j-th Y.
struct ContractionPattern {
  std::vector<std::pair<int, int>> pairs;
  bool crossing = false;
  bool connected = false;
};

enum class Restriction { all, noncrossing, connected_noncrossing };

// All (2k-1)!! perfect matchings of 2k slots. Throws std::invalid_argument
// unless 1 <= k <= 5.
std::vector<ContractionPattern> enumerate_pairings(int k);

bool in_class(const ContractionPattern& p, Restriction r);

// Value of a single pattern for a fixed-index moment.
cplx pattern_moment(const MomentSpec& spec, const ContractionPattern& p, const SpectrumModel& model);

cplx exact_moment(const MomentSpec& spec, const SpectrumModel& model, Restriction restrict);

// Y(chi) followed by the matrix `after`; an empty `after` is the identity.
struct TraceFactor {
  cplx chi;
  RealMatrix after;
};
using TraceCycle = std::vector<TraceFactor>;

// Product of traces; slots are numbered across cycles in order.
struct TraceProduct {
  std::vector<TraceCycle> cycles;
  int factor_count() const;
};

cplx pattern_trace(const TraceProduct& tp, const ContractionPattern& p, const SpectrumModel& model);

struct TraceExpectation {
  cplx all{0.0, 0.0};
  cplx noncrossing{0.0, 0.0};
  cplx crossing{0.0, 0.0};
  cplx connected_noncrossing{0.0, 0.0};
};

TraceExpectation expect_trace(const TraceProduct& tp, const SpectrumModel& model);

// Sum over the patterns of `tp` accepted by `select`.
cplx sum_patterns(const TraceProduct& tp, const SpectrumModel& model,
                  const std::function<bool(const ContractionPattern&)>& select);

struct VarianceReport {
  cplx mean_product{0.0, 0.0};
  cplx corr_all{0.0, 0.0};
  cplx corr_noncrossing{0.0, 0.0};
  double ratio_all = 0;
  double ratio_noncrossing = 0;
};

// <T1 T2>_corr (patterns linking the two traces) against <T1><T2>.
VarianceReport variance_decomposition(const TraceCycle& t1, const TraceCycle& t2, const SpectrumModel& model);

struct ScalingPoint {
  double N = 0;
  VarianceReport report;
};

std::vector<ScalingPoint> variance_scaling(
    const std::function<std::pair<TraceCycle, TraceCycle>(const SpectrumModel&)>& build,
    const std::function<SpectrumModel(double)>& model_for, const std::vector<double>& N_grid);

}  // namespace otoc
