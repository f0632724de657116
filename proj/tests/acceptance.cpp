// Acceptance run at desk scale. One PASS/FAIL line per criterion; exit status is
// nonzero when any criterion fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include "otoc/analytic.hpp"
#include "otoc/experiment.hpp"
#include "otoc/otoc_mc.hpp"
#include "otoc/propagator.hpp"
#include "otoc/stats.hpp"
#include "otoc/wick.hpp"

using namespace otoc;
namespace fs = std::filesystem;

namespace {

constexpr int kD = 512;
constexpr double kN = 16;
constexpr int kM = 200;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

double rel(cplx a, cplx b) {
  const double s = std::max(std::abs(a), std::abs(b));
  return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}

fs::path work_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("otoc_rmt_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

EnsembleConfig desk_ensemble(OverlapMode mode, std::uint64_t seed) {
  EnsembleConfig c;
  c.spectrum = SpectrumModel::from_levels(kD, kN);
  c.overlap_mode = mode;
  c.seed = seed;
  return c;
}

// Partition-function average on the bulk window, gaussian overlaps.
Outcome a1() {
  Outcome o;
  const auto ens = desk_ensemble(OverlapMode::gaussian, 101);
  const auto& model = ens.spectrum;
  const IndexRange bulk = padded_support(model, ens.band_cutoff);
  const double Dl = model.delta;
  o.detail << "window=[" << bulk.lo << "," << bulk.hi << "] M=" << kM;
  for (double bd : {0.0, 0.125, 0.25}) {
    const double beta = bd / Dl;
    std::vector<double> z(kM);
    for (int i = 0; i < kM; ++i) z[i] = trace_Z(sample_member(ens, i), beta, bulk);
    const auto st = sample_stats(z);
    const double zhf = trace_Z_HF(beta, model, bulk);
    const double ratio = st.mean / zhf, se = st.stderr_ / zhf;
    const double pred = std::exp(bd * bd / 2.0);
    o.detail << " | betaDelta=" << bd << " ratio=" << ratio << " pred=" << pred << " se=" << se;
    o.require(std::abs(ratio - pred) <= 3.0 * se, "3 stderr at betaDelta=" + std::to_string(bd));
    o.require(std::abs(ratio - pred) <= 0.02, "2% at betaDelta=" + std::to_string(bd));
  }
  return o;
}

// Moments via the validate-moments command.
Outcome a2() {
  Outcome o;
  const fs::path dir = work_dir("a2");
  {
    std::ofstream cfg(dir / "moments.ini");
    cfg << "[spectrum]\ndimension = " << kD << "\nlevels_per_window = " << kN
        << "\n[ensemble]\nseed = 202\n[run]\nmoment_instances = 20\nmoment_mc_members = " << 2000
        << "\nmoment_mc_points = 10\n";
  }
  std::ostringstream log;
  Overrides ov;
  ov.out_dir = (dir / "out").string();
  const int rc = cmd_validate_moments((dir / "moments.ini").string(), ov, log);
  o.require(rc != 1, "command error: " + log.str());
  if (rc == 1) return o;
  const auto j = read_json(dir / "out" / "moments.json");
  for (const auto& c : j.at("checks")) {
    const std::string name = c.at("check");
    if (name.rfind("moment_k", 0) == 0) {
      o.detail << name << " max_rel_err=" << c.at("max_rel_err").get<double>() << " ";
      o.require(c.at("pass").get<bool>(), name);
    } else if (name == "first_moment_mc") {
      double worst = 0;
      for (const auto& p : c.at("points")) worst = std::max(worst, p.at("deviation_in_stderr").get<double>());
      o.detail << "first_moment_mc points=" << c.at("points").size() << " worst_dev=" << worst << "se";
      o.require(c.at("pass").get<bool>() && c.at("points").size() == 10, name);
    }
  }
  return o;
}

// Crossing suppression on Tr(Y(chi) V Y(chi*) W).
Outcome a3() {
  Outcome o;
  std::vector<double> ratios;
  for (double N : {8.0, 16.0, 32.0}) {
    const auto model = SpectrumModel::from_levels(static_cast<int>(24 * N), N);
    const auto p = generate_pair(model.dimension, OperatorKind::hopping, padded_support(model, 6), 1, 0);
    const cplx chi(-0.1 / model.delta, -0.5 / model.delta);
    const TraceProduct tp{{{{chi, p.V}, {std::conj(chi), p.W}}}};
    const auto ex = expect_trace(tp, model);
    const double r = std::abs(ex.crossing) / std::abs(ex.noncrossing);
    ratios.push_back(r);
    o.detail << "N=" << N << " ratio=" << r << " (3/N=" << 3.0 / N << ") ";
    o.require(r <= 3.0 / N, "ratio <= 3/N at N=" + std::to_string(N));
  }
  for (size_t i = 1; i < ratios.size(); ++i) {
    const double f = ratios[i - 1] / ratios[i];
    o.detail << "halving=" << f << " ";
    o.require(std::abs(f / 2.0 - 1.0) <= 0.2, "halving within 20%");
  }
  return o;
}

// Gaussian decay of <F(t)>, beta = 0, 25 points on [0, 2.5]/Delta.
Outcome a4() {
  Outcome o;
  ExperimentConfig cfg;
  RunConfig& r = cfg.run;
  r.ensemble = desk_ensemble(OverlapMode::gaussian, 404);
  r.pair.kind = OperatorKind::hopping;
  r.beta = 0.0;
  const double Dl = r.ensemble.spectrum.delta;
  for (int i = 0; i < 25; ++i) r.t_grid.push_back(2.5 * i / 24.0 / Dl);
  cfg.has_t_grid = true;
  r.members = kM;
  r.compute_C = false;
  r.acceptance = true;
  const auto res = run_experiment(cfg);
  bool have_env = false, have_pw = false;
  for (const auto& b : res.bands) {
    if (b.name == "envelope_coefficient") {
      have_env = true;
      o.detail << "coefficient/(2Delta^2)=" << b.value << " fit_points=" << res.envelope->fit.points << " ";
      o.require(b.pass, "envelope coefficient within 10%");
    } else if (b.name == "F_pointwise") {
      have_pw = true;
      o.detail << "pointwise_fraction=" << b.value << " ";
      o.require(b.pass, "pointwise agreement on >= 90% of grid points");
    }
  }
  o.require(have_env, "envelope fit available");
  o.require(have_pw, "pointwise band evaluated");
  return o;
}

// Large-time asymptote of <C(t)>.
Outcome a5() {
  Outcome o;
  RunConfig r;
  r.ensemble = desk_ensemble(OverlapMode::orthogonalized, 505);
  r.pair.kind = OperatorKind::random_offdiag;
  r.pair.bandwidth = 4;
  r.pair.seed = 505;
  r.beta = 0.0;
  const auto& model = r.ensemble.spectrum;
  const double Dl = model.delta;
  r.t_grid = {3.0 / Dl, 4.0 / Dl};
  r.members = kM;
  r.compute_F = false;
  r.acceptance = true;
  const auto s = run_series(r);
  const auto pair = r.make_pair();
  const double asym = C_asymptote(pair, r.beta, model);
  for (size_t i = 0; i < s.t.size(); ++i) {
    const double tD = s.t[i] * Dl;
    const double tol = 3.0 * s.C_stderr[i] + std::abs(asym) * 2.0 / kN;
    const auto pred = C_prediction(pair, r.beta, s.t[i], model);
    const double envelope = std::abs(pred.c0_term) / std::abs(asym);
    o.detail << "tDelta=" << tD << " C_mc=" << s.C_mean[i] << " se=" << s.C_stderr[i] << " asym=" << asym
             << " |C0 term|/asym=" << envelope << " ";
    o.require(std::abs(s.C_mean[i] - asym) <= tol, "asymptote at tDelta=" + std::to_string(tD));
    o.require(envelope <= std::exp(-18.0), "C0 envelope at tDelta=" + std::to_string(tD));
  }
  return o;
}

// Self-averaging of F and the oracle 1/N slope, via variance-report.
Outcome a6() {
  Outcome o;
  const fs::path dir = work_dir("a6");
  const int D = static_cast<int>(24 * kN);
  const IndexRange sup = centred_support(D, 192);
  {
    std::ofstream cfg(dir / "variance.ini");
    cfg << "[spectrum]\ndimension = " << D << "\nlevels_per_window = " << kN
        << "\n[ensemble]\noverlap_mode = gaussian\nseed = 606\n[operators]\nkind = hopping\nsupport_lo = " << sup.lo
        << "\nsupport_hi = " << sup.hi << "\n[run]\nvariance_levels = \"16, 32\"\nvariance_t_delta = 0.5\n"
        << "variance_members = 400\n";
  }
  std::ostringstream log;
  Overrides ov;
  ov.out_dir = (dir / "out").string();
  const int rc = cmd_variance_report((dir / "variance.ini").string(), ov, log);
  o.require(rc != 1, "command error: " + log.str());
  if (rc == 1) return o;
  const auto j = read_json(dir / "out" / "variance.json");
  for (const auto& step : j.at("mc").at("steps"))
    o.detail << "mc_decrease=" << step.at("decrease_factor").get<double>() << " ";
  o.require(j.at("mc").at("evaluated").get<bool>() && j.at("mc").at("pass").get<bool>(), "MC variance halves within 30%");
  for (const char* key : {"oracle_trZ_squared", "oracle_two_point_trace"}) {
    for (const auto& row : j.at(key).at("rows"))
      if (row.contains("decrease_factor")) o.detail << key << "_decrease=" << row.at("decrease_factor").get<double>() << " ";
    o.require(j.at(key).at("pass").get<bool>(), std::string(key) + " within 5%");
  }
  return o;
}

// Factor blocks of a pattern: slots 2j, 2j+1 belong to factor j.
std::vector<int> factor_blocks(const ContractionPattern& p, int k) {
  std::vector<int> parent(k);
  for (int i = 0; i < k; ++i) parent[i] = i;
  std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
  for (auto [a, b] : p.pairs) parent[find(a / 2)] = find(b / 2);
  std::vector<int> root(k);
  for (int i = 0; i < k; ++i) root[i] = find(i);
  return root;
}

// Derived C0 pieces, transient and asymptote against the contraction oracle;
// dense eval_C against the commutator form.
Outcome a7() {
  Outcome o;
  const auto model = SpectrumModel::from_levels(8, 1.5);
  auto rng = member_rng(707, 0, 1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto singles = [](const ContractionPattern& c) {
    const auto b = factor_blocks(c, 4);
    return !c.crossing && b[0] != b[1] && b[0] != b[2] && b[0] != b[3] && b[1] != b[2] && b[1] != b[3] && b[2] != b[3];
  };
  auto joined = [](int x, int y) {
    return [x, y](const ContractionPattern& c) {
      const auto b = factor_blocks(c, 4);
      if (c.crossing || b[x] != b[y]) return false;
      for (int j = 0; j < 4; ++j)
        if (j != x && j != y)
          for (int l = 0; l < 4; ++l)
            if (l != j && b[l] == b[j]) return false;
      return true;
    };
  };
  auto singletons3 = [](const ContractionPattern& c) {
    for (auto [a, b] : c.pairs)
      if (a / 2 != b / 2) return false;
    return true;
  };
  auto ties12 = [](const ContractionPattern& c) {
    return !c.crossing && c.pairs.size() == 3 && c.pairs[0] == std::make_pair(0, 1) &&
           c.pairs[1] == std::make_pair(2, 5) && c.pairs[2] == std::make_pair(3, 4);
  };
  double worst = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = generate_pair(8, OperatorKind::random_offdiag, {0, 7}, 1 + trial % 4, 7000 + trial);
    const double Dl = model.delta;
    const double beta = 0.5 * u(rng) / Dl, t = 1.5 * u(rng) / Dl;
    const cplx it(0, t);
    const TraceProduct t1{{{{-it, p.W}, {it, p.V}, {-it, p.W}, {it - beta, p.V}}}};
    const TraceProduct t2{{{{it, p.V}, {-it, p.W}, {it, p.V}, {-beta - it, p.W}}}};
    const double scale = std::exp(2.0 * t * t * Dl * Dl - beta * beta * Dl * Dl / 2.0);
    const C0Terms c0 = C0(p, beta, t, model);
    auto oracle = [&](const std::function<bool(const ContractionPattern&)>& sel) {
      return scale * (sum_patterns(t1, model, sel) + sum_patterns(t2, model, sel));
    };
    worst = std::max(worst, rel(c0.means, oracle(singles)));
    worst = std::max(worst, rel(c0.pair13, oracle(joined(0, 2))));
    worst = std::max(worst, rel(c0.pair24, oracle(joined(1, 3))));

    const RealMatrix V2 = p.V * p.V, W2 = p.W * p.W;
    const TraceProduct t3{{{{cplx(-beta, 0), p.W}, {it, V2}, {-it, p.W}}}};
    const TraceProduct t4{{{{cplx(-beta, 0), p.V}, {-it, W2}, {it, p.V}}}};
    const double mz = mean_trZ(beta, model);
    worst = std::max(worst, rel(C_transient(p, beta, t, model),
                                (sum_patterns(t3, model, singletons3) + sum_patterns(t4, model, singletons3)) / mz));
    worst = std::max(worst, rel(C_asymptote(p, beta, model),
                                (sum_patterns(t3, model, ties12) + sum_patterns(t4, model, ties12)) / mz));
  }
  o.detail << "C0 pieces, transient, asymptote: 10 pairs, max_rel_err=" << worst << " ";
  o.require(worst <= 1e-8, "derived terms within 1e-8");

  EnsembleConfig ens;
  ens.spectrum = SpectrumModel::from_levels(6, 1);
  ens.overlap_mode = OverlapMode::orthogonalized;
  ens.seed = 77;
  double worst_c = 0;
  for (int i = 0; i < 5; ++i) {
    const auto mem = sample_member(ens, i);
    const auto p = generate_pair(6, OperatorKind::random_offdiag, {0, 5}, 2, 7100 + i);
    for (double beta : {0.0, 0.3})
      for (double t : {0.0, 0.5, 2.0}) {
        const double c = eval_C(mem, p, beta, t), ref = eval_C_commutator(mem, p, beta, t);
        worst_c = std::max(worst_c, std::abs(c - ref) / std::max(1.0, std::abs(ref)));
      }
  }
  o.detail << "eval_C vs commutator D=6: max_err=" << worst_c;
  o.require(worst_c <= 1e-10, "eval_C within 1e-10");
  return o;
}

double max_abs(const ComplexMatrix& A) { return A.cwiseAbs().maxCoeff(); }

// Exact identities with orthogonal overlaps.
Outcome a8() {
  Outcome o;
  const auto ens = desk_ensemble(OverlapMode::orthogonalized, 808);
  const double Dl = ens.spectrum.delta;
  double e_d9 = 0, e_adj = 0, e_unit = 0, e_c = 0;
  for (int i = 0; i < 3; ++i) {
    const auto mem = sample_member(ens, i);
    const double beta = 0.25 / Dl, t = (1.0 + i) / Dl;
    const auto chi = ComplexArgument::regularized(beta, t);
    const ComplexMatrix Y = build_Y(mem, chi).Y;
    const RealMatrix expH = (-beta / 2.0 * build_hamiltonian(mem)).exp();
    e_d9 = std::max(e_d9, max_abs(Y * Y.adjoint() - expH.cast<cplx>()));
    e_adj = std::max(e_adj, max_abs(Y.adjoint() - build_Y(mem, chi.conj()).Y));
    const ComplexMatrix U = build_unitary(mem, t);
    e_unit = std::max(e_unit, max_abs(U * U.adjoint() - ComplexMatrix::Identity(kD, kD)));
    auto p = generate_pair(kD, OperatorKind::random_offdiag, padded_support(ens.spectrum, 6), 4, 8000 + i);
    p.W = p.V;
    e_c = std::max(e_c, std::abs(eval_C(mem, p, beta, 0.0)));
    const MemberKernel k(mem, p, beta);
    e_c = std::max(e_c, std::abs(k.C_numerator(0.0) / k.trace_Z()));
  }
  o.detail << "YY^dag-exp(-beta H/2)=" << e_d9 << " Y^dag-Y(chi*)=" << e_adj << " UU^dag-1=" << e_unit
           << " C(t=0,V=W)=" << e_c;
  o.require(e_d9 <= 1e-10, "d9");
  o.require(e_adj <= 1e-12, "adjoint");
  o.require(e_unit <= 1e-10, "unitarity");
  o.require(e_c <= 1e-10, "C at t = 0");
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* id;
    const char* title;
    Outcome (*run)();
  };
  const std::vector<Criterion> all{
      {"A1", "partition-function average", a1},   {"A2", "moments", a2},
      {"A3", "non-crossing suppression", a3},     {"A4", "Gaussian decay of <F(t)>", a4},
      {"A5", "<C(t)> large-time asymptote", a5},  {"A6", "variance self-averaging", a6},
      {"A7", "C0 derivation gate", a7},           {"A8", "exact identities", a8},
  };
  int failed = 0;
  const auto start = std::chrono::steady_clock::now();
  for (const auto& c : all) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::printf("%s %s: %s (%.1fs) %s\n", c.id, o.pass ? "PASS" : "FAIL", c.title, secs, o.detail.str().c_str());
    std::fflush(stdout);
  }
  const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("acceptance: %d of %zu criteria passed in %.1fs\n", static_cast<int>(all.size()) - failed, all.size(), total);
  return failed == 0 ? 0 : 1;
}
