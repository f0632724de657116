#include "otoc/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>

namespace otoc {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t kOverlapStream = 0;
constexpr std::uint64_t kEigenvalueStream = 1;
constexpr int kMaxResample = 8;

}  // namespace

Vector SpectrumModel::energies() const {
  Vector e(dimension);
  for (int m = 0; m < dimension; ++m) e(m) = energy(m);
  return e;
}

void SpectrumModel::validate() const {
  if (dimension < 1) throw std::invalid_argument("spectrum: dimension must be >= 1");
  if (!(mean_spacing > 0)) throw std::invalid_argument("spectrum: mean_spacing must be > 0");
  if (!(delta > 0)) throw std::invalid_argument("spectrum: delta must be > 0");
  if (levels_per_window() < 1.0)
    throw std::invalid_argument("spectrum: N = delta/mean_spacing must be >= 1");
}

std::string SpectrumModel::check_acceptance_scale() const {
  const double N = levels_per_window();
  if (N < 8.0) {
    std::ostringstream os;
    os << "acceptance runs need N >= 8, got N = " << N;
    throw std::invalid_argument(os.str());
  }
  if (N < 16.0) return "N < 16: subleading 1/N corrections may exceed acceptance bands";
  return "";
}

void EnsembleConfig::validate() const {
  spectrum.validate();
  if (band_cutoff < 4.0) throw std::invalid_argument("ensemble: band_cutoff must be >= 4");
  if (window != WindowShape::gaussian)
    throw std::invalid_argument("ensemble: lorentzian window is reserved and not implemented");
}

int EnsembleConfig::band_halfwidth() const {
  return static_cast<int>(std::floor(band_cutoff * spectrum.levels_per_window() + 1e-9));
}

double window_weight(double e_m, double ebar_alpha, const SpectrumModel& model) {
  const double x = e_m - ebar_alpha;
  const double Dl = model.delta;
  return std::exp(-x * x / (2.0 * Dl * Dl)) /
         (std::sqrt(2.0 * std::numbers::pi) * model.density() * Dl);
}

std::mt19937_64 member_rng(std::uint64_t seed, std::int64_t index, std::uint64_t substream) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(index));
  h = splitmix64(h ^ (substream * 0xd1b54a32d192ed03ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  return std::mt19937_64(seq);
}

RealMatrix polar_factor(const RealMatrix& A, double tol, int max_iter) {
  if (A.rows() != A.cols()) throw std::invalid_argument("polar_factor: matrix must be square");
  RealMatrix X = A;
  bool scaling = true;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::PartialPivLU<RealMatrix> lu(X);
    const double det_abs = std::abs(lu.determinant());
    if (!std::isfinite(det_abs) || det_abs == 0.0)
      throw ConvergenceError("polar_factor: singular iterate");
    RealMatrix Xinv = lu.inverse();
    if (!Xinv.allFinite()) throw ConvergenceError("polar_factor: non-finite inverse");
    double gamma = 1.0;
    if (scaling) gamma = std::sqrt(Xinv.norm() / X.norm());
    RealMatrix next = 0.5 * (gamma * X + Xinv.transpose() / gamma);
    const double change = (next - X).norm() / next.norm();
    X.swap(next);
    if (change < 1e-2) scaling = false;
    if (change < tol) break;
  }
  const RealMatrix err = X.transpose() * X - RealMatrix::Identity(X.rows(), X.cols());
  if (err.cwiseAbs().maxCoeff() > 1e-12)
    throw ConvergenceError("polar_factor: did not converge to an orthogonal matrix");
  return X;
}

Vector sample_unfolded_goe(int D, double d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  RealMatrix A(D, D);
  for (int j = 0; j < D; ++j)
    for (int i = 0; i < D; ++i) A(i, j) = normal(rng);
  const RealMatrix H = 0.5 * (A + A.transpose());
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(H, Eigen::EigenvaluesOnly);
  const double R = std::sqrt(2.0 * D);
  Vector E(D);
  for (int i = 0; i < D; ++i) {
    const double x = std::clamp(es.eigenvalues()(i) / R, -1.0, 1.0);
    const double cdf = 0.5 + (x * std::sqrt(1.0 - x * x) + std::asin(x)) / std::numbers::pi;
    E(i) = d * (D * cdf - 0.5);
  }
  return E;
}

SpacingTest wigner_surmise_test(const std::vector<double>& spacings, int bins) {
  std::vector<double> edges(bins + 1);
  edges[0] = 0.0;
  for (int k = 1; k < bins; ++k)
    edges[k] = std::sqrt(-4.0 * std::log(1.0 - static_cast<double>(k) / bins) / std::numbers::pi);
  edges[bins] = std::numeric_limits<double>::infinity();
  std::vector<double> counts(bins, 0.0);
  for (double s : spacings) {
    const auto it = std::upper_bound(edges.begin(), edges.end(), s);
    const int b = std::clamp(static_cast<int>(it - edges.begin()) - 1, 0, bins - 1);
    counts[b] += 1.0;
  }
  SpacingTest out;
  out.samples = static_cast<int>(spacings.size());
  const double expected = static_cast<double>(spacings.size()) / bins;
  for (double c : counts) out.chi2 += (c - expected) * (c - expected) / expected;
  boost::math::chi_squared dist(bins - 1);
  out.p_value = boost::math::cdf(boost::math::complement(dist, out.chi2));
  return out;
}

EnsembleMember sample_member(const EnsembleConfig& config, std::int64_t member_index) {
  config.validate();
  const SpectrumModel& model = config.spectrum;
  const int D = model.dimension;
  const int hw = config.band_halfwidth();

  EnsembleMember member;
  member.index = member_index;
  member.mode = config.overlap_mode;
  member.Ebar = model.energies();

  std::normal_distribution<double> normal(0.0, 1.0);
  for (int attempt = 0;; ++attempt) {
    auto rng = member_rng(config.seed, member_index, kOverlapStream + 16 * attempt);
    RealMatrix O = RealMatrix::Zero(D, D);
    for (int m = 0; m < D; ++m) {
      const int a0 = std::max(0, m - hw), a1 = std::min(D - 1, m + hw);
      for (int a = a0; a <= a1; ++a)
        O(m, a) = normal(rng) * std::sqrt(window_weight(model.energy(m), model.energy(a), model));
    }
    if (config.overlap_mode == OverlapMode::gaussian) {
      member.O = std::move(O);
      break;
    }
    try {
      member.O = polar_factor(O);
      break;
    } catch (const ConvergenceError&) {
      if (attempt + 1 >= kMaxResample) throw;
    }
  }

  if (config.eigenvalue_mode == EigenvalueMode::picket) {
    member.E = member.Ebar;
  } else {
    auto rng = member_rng(config.seed, member_index, kEigenvalueStream);
    member.E = sample_unfolded_goe(D, model.mean_spacing, rng);
  }
  return member;
}

RealMatrix build_hamiltonian(const EnsembleMember& member) {
  const RealMatrix OE = member.O * member.E.asDiagonal();
  RealMatrix H = OE * member.O.transpose();
  return 0.5 * (H + H.transpose());
}

}  // namespace otoc
