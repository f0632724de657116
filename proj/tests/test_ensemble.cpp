#include <doctest.h>

#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "otoc/ensemble.hpp"

using namespace otoc;

namespace {

EnsembleConfig config(int D, double N, OverlapMode mode, std::uint64_t seed = 1) {
  EnsembleConfig c;
  c.spectrum = SpectrumModel::from_levels(D, N);
  c.overlap_mode = mode;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("window weight at the peak and one width away") {
  const auto m = SpectrumModel::from_levels(64, 8);
  const double peak = 1.0 / (std::sqrt(2.0 * std::numbers::pi) * m.density() * m.delta);
  CHECK(window_weight(10.0, 10.0, m) == doctest::Approx(peak).epsilon(1e-15));
  CHECK(window_weight(10.0 + m.delta, 10.0, m) == doctest::Approx(std::exp(-0.5) * peak).epsilon(1e-15));
}

TEST_CASE("window weight sums to one over an interior picket row") {
  const auto m = SpectrumModel::from_levels(400, 8);
  auto f = [&](double e) { return m.density() * window_weight(200.0, e, m); };
  const double integral = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, 399.0, 15, 1e-14);
  double sum = 0.0;
  for (int a = 0; a < m.dimension; ++a) sum += window_weight(m.energy(200), m.energy(a), m);
  CHECK(integral == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(std::abs(sum - integral) < 1e-6);
}

TEST_CASE("spectrum validation") {
  CHECK_THROWS(SpectrumModel{0, 1.0, 4.0}.validate());
  CHECK_THROWS(SpectrumModel{8, 0.0, 4.0}.validate());
  CHECK_THROWS(SpectrumModel{8, 1.0, 0.5}.validate());
  CHECK_THROWS(SpectrumModel::from_levels(64, 4).check_acceptance_scale());
  CHECK_FALSE(SpectrumModel::from_levels(64, 8).check_acceptance_scale().empty());
  CHECK(SpectrumModel::from_levels(64, 16).check_acceptance_scale().empty());
  auto c = config(32, 2, OverlapMode::gaussian);
  c.band_cutoff = 3.5;
  CHECK_THROWS(c.validate());
  c.band_cutoff = 6;
  c.window = WindowShape::lorentzian;
  CHECK_THROWS(sample_member(c, 0));
}

TEST_CASE("sampling is deterministic per (seed, index)") {
  for (auto mode : {OverlapMode::gaussian, OverlapMode::orthogonalized}) {
    auto c = config(48, 3, mode, 99);
    c.eigenvalue_mode = EigenvalueMode::goe_unfolded;
    const auto a = sample_member(c, 7), b = sample_member(c, 7), other = sample_member(c, 8);
    CHECK((a.O.array() == b.O.array()).all());
    CHECK((a.E.array() == b.E.array()).all());
    CHECK_FALSE((a.O.array() == other.O.array()).all());
  }
}

TEST_CASE("gaussian overlaps vanish outside the band") {
  auto c = config(96, 4, OverlapMode::gaussian);
  const auto mem = sample_member(c, 3);
  const int hw = c.band_halfwidth();
  CHECK(hw == 24);
  for (int m = 0; m < 96; ++m) {
    int nonzero = 0;
    for (int a = 0; a < 96; ++a) {
      const bool outside = std::abs(m - a) * c.spectrum.mean_spacing > c.band_cutoff * c.spectrum.delta;
      if (outside) CHECK(mem.O(m, a) == 0.0);
      if (mem.O(m, a) != 0.0) ++nonzero;
    }
    CHECK(nonzero <= 2 * c.band_cutoff * c.spectrum.levels_per_window() + 1);
  }
}

TEST_CASE("gaussian second moments match the window") {
  auto c = config(64, 8, OverlapMode::gaussian, 2024);
  const int M = 10000;
  double s = 0, s2 = 0, cross = 0, cross2 = 0;
  for (int i = 0; i < M; ++i) {
    const auto mem = sample_member(c, i);
    const double x = mem.O(32, 32) * mem.O(32, 32);
    s += x;
    s2 += x * x;
    const double y = mem.O(32, 32) * mem.O(33, 30);
    cross += y;
    cross2 += y * y;
  }
  const double mean = s / M, se = std::sqrt((s2 / M - mean * mean) / (M - 1));
  const double target = window_weight(32, 32, c.spectrum);
  CHECK(std::abs(mean - target) <= 3 * se);
  const double cm = cross / M, cse = std::sqrt((cross2 / M - cm * cm) / (M - 1));
  CHECK(std::abs(cm) <= 3 * cse);
}

TEST_CASE("orthogonalized overlaps are orthogonal") {
  const auto mem = sample_member(config(80, 4, OverlapMode::orthogonalized), 5);
  const RealMatrix err = mem.O.transpose() * mem.O - RealMatrix::Identity(80, 80);
  CHECK(err.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("polar factor gives the orthogonal part of a polar decomposition") {
  auto rng = member_rng(3, 0, 0);
  std::normal_distribution<double> n(0, 1);
  RealMatrix A(12, 12);
  for (int i = 0; i < 144; ++i) A.data()[i] = n(rng);
  const RealMatrix Q = polar_factor(A);
  const RealMatrix P = Q.transpose() * A;
  CHECK((Q.transpose() * Q - RealMatrix::Identity(12, 12)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((P - P.transpose()).cwiseAbs().maxCoeff() < 1e-10);
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(0.5 * (P + P.transpose()));
  CHECK(es.eigenvalues().minCoeff() > 0);
  CHECK_THROWS_AS(polar_factor(RealMatrix::Zero(4, 4)), ConvergenceError);
}

TEST_CASE("hamiltonian construction") {
  SUBCASE("scalar spectrum in orthogonalized mode") {
    auto mem = sample_member(config(40, 2, OverlapMode::orthogonalized), 1);
    mem.E.setConstant(3.25);
    const RealMatrix H = build_hamiltonian(mem);
    CHECK((H - 3.25 * RealMatrix::Identity(40, 40)).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("hand-built toy against the explicit double sum") {
    EnsembleMember mem;
    mem.O.resize(4, 4);
    mem.O << 0.3, -1.1, 0.0, 0.2, 0.7, 0.5, -0.4, 0.0, 0.0, 0.9, 1.3, -0.6, 0.1, 0.0, 0.8, 0.45;
    mem.E = Vector::LinSpaced(4, -1.0, 2.5);
    mem.Ebar = mem.E;
    const RealMatrix H = build_hamiltonian(mem);
    for (int m = 0; m < 4; ++m)
      for (int n = 0; n < 4; ++n) {
        double h = 0;
        for (int a = 0; a < 4; ++a) h += mem.O(m, a) * mem.E(a) * mem.O(n, a);
        CHECK(H(m, n) == doctest::Approx(h).epsilon(1e-14));
      }
  }
  SUBCASE("symmetry") {
    const auto mem = sample_member(config(64, 4, OverlapMode::gaussian), 2);
    const RealMatrix H = build_hamiltonian(mem);
    CHECK((H - H.transpose()).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("unfolded GOE spacings follow the Wigner surmise") {
  auto c = config(256, 8, OverlapMode::gaussian, 17);
  c.eigenvalue_mode = EigenvalueMode::goe_unfolded;
  std::vector<double> s;
  for (int i = 0; s.size() < 10000; ++i) {
    auto rng = member_rng(17, i, 1);
    const Vector E = sample_unfolded_goe(256, 1.0, rng);
    for (int j = 64; j < 192 && s.size() < 10000; ++j) s.push_back(E(j + 1) - E(j));
  }
  const auto res = wigner_surmise_test(s);
  CHECK(res.samples == 10000);
  CHECK(res.p_value > 0.001);
  // Poisson spacings must be rejected by the same test
  std::vector<double> poisson;
  auto rng = member_rng(1, 1, 1);
  std::exponential_distribution<double> ex(1.0);
  for (int i = 0; i < 10000; ++i) poisson.push_back(ex(rng));
  CHECK(wigner_surmise_test(poisson).p_value < 1e-6);
}

TEST_CASE("unfolded eigenvalues cover the picket range") {
  auto rng = member_rng(5, 0, 1);
  const Vector E = sample_unfolded_goe(300, 2.0, rng);
  CHECK(E.minCoeff() > -2.0);
  CHECK(E.maxCoeff() < 2.0 * 300);
  for (int i = 1; i < 300; ++i) CHECK(E(i) >= E(i - 1));
}
