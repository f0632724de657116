#include "otoc/wick.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

namespace otoc {

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

void matchings(std::vector<int>& partner, std::vector<std::vector<std::pair<int, int>>>& out) {
  const int n = static_cast<int>(partner.size());
  int first = -1;
  for (int s = 0; s < n; ++s)
    if (partner[s] < 0) {
      first = s;
      break;
    }
  if (first < 0) {
    std::vector<std::pair<int, int>> pairs;
    for (int s = 0; s < n; ++s)
      if (s < partner[s]) pairs.emplace_back(s, partner[s]);
    out.push_back(std::move(pairs));
    return;
  }
  for (int s = first + 1; s < n; ++s) {
    if (partner[s] >= 0) continue;
    partner[first] = s;
    partner[s] = first;
    matchings(partner, out);
    partner[first] = partner[s] = -1;
  }
}

bool chords_cross(std::pair<int, int> a, std::pair<int, int> b) {
  return (a.first < b.first && b.first < a.second && a.second < b.second) ||
         (b.first < a.first && a.first < b.second && b.second < a.second);
}

// Blocks of factors tied together by contractions (each factor carries one alpha).
std::vector<int> factor_blocks(const ContractionPattern& p, int k) {
  UnionFind uf(k);
  for (auto [a, b] : p.pairs) uf.unite(a / 2, b / 2);
  std::vector<int> block(k);
  for (int j = 0; j < k; ++j) block[j] = uf.find(j);
  return block;
}

// rho * prod_i F(e_i - E) * exp(chi E) integrated over E, for the energies of
// the p contractions inside one alpha block.
cplx block_integral(const std::vector<double>& energies, cplx chi, const SpectrumModel& model) {
  const double p = static_cast<double>(energies.size());
  const double Dl = model.delta;
  const double rho = model.density();
  double mu = 0.0;
  for (double e : energies) mu += e;
  mu /= p;
  double spread = 0.0;
  for (double e : energies) spread += (e - mu) * (e - mu);
  const double norm = std::sqrt(2.0 * std::numbers::pi) * rho * Dl;
  return rho * std::pow(norm, -p) * std::sqrt(2.0 * std::numbers::pi * Dl * Dl / p) *
         std::exp(chi * mu + chi * chi * Dl * Dl / (2.0 * p) - spread / (2.0 * Dl * Dl));
}

ContractionPattern classify(std::vector<std::pair<int, int>> pairs, int k) {
  ContractionPattern p;
  p.pairs = std::move(pairs);
  for (size_t i = 0; i < p.pairs.size() && !p.crossing; ++i)
    for (size_t j = i + 1; j < p.pairs.size(); ++j)
      if (chords_cross(p.pairs[i], p.pairs[j])) {
        p.crossing = true;
        break;
      }
  const auto block = factor_blocks(p, k);
  p.connected = std::all_of(block.begin(), block.end(), [&](int b) { return b == block[0]; });
  return p;
}

std::vector<ContractionPattern> all_patterns(int k) {
  std::vector<int> partner(2 * k, -1);
  std::vector<std::vector<std::pair<int, int>>> raw;
  matchings(partner, raw);
  std::vector<ContractionPattern> out;
  out.reserve(raw.size());
  for (auto& r : raw) out.push_back(classify(std::move(r), k));
  return out;
}

struct SparseRows {
  bool identity = true;
  std::vector<std::vector<std::pair<int, double>>> rows, cols;
  double value(int u, int v) const {
    if (identity) return u == v ? 1.0 : 0.0;
    for (auto [c, x] : rows[u])
      if (c == v) return x;
    return 0.0;
  }
};

SparseRows make_rows(const RealMatrix& A, int D) {
  SparseRows s;
  if (A.size() == 0) return s;
  if (A.rows() != D || A.cols() != D) throw std::invalid_argument("trace factor matrix has wrong size");
  s.identity = false;
  s.rows.resize(D);
  s.cols.resize(D);
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j)
      if (A(i, j) != 0.0) {
        s.rows[i].emplace_back(j, A(i, j));
        s.cols[j].emplace_back(i, A(i, j));
      }
  return s;
}

struct Edge {
  int u, v;  // matrix entry (u, v)
  int mat;
};

class TraceEvaluator {
 public:
  TraceEvaluator(const TraceProduct& tp, const SpectrumModel& model) : model_(model), D_(model.dimension) {
    for (const auto& cyc : tp.cycles) {
      const int base = static_cast<int>(chis_.size());
      const int len = static_cast<int>(cyc.size());
      for (int i = 0; i < len; ++i) {
        chis_.push_back(cyc[i].chi);
        next_.push_back(base + (i + 1) % len);
        mats_.push_back(make_rows(cyc[i].after, D_));
      }
    }
  }

  cplx evaluate(const ContractionPattern& p) {
    const int k = static_cast<int>(chis_.size());
    const int P = static_cast<int>(p.pairs.size());
    std::vector<int> var(2 * k);
    for (int i = 0; i < P; ++i) var[p.pairs[i].first] = var[p.pairs[i].second] = i;

    edges_.clear();
    for (int j = 0; j < k; ++j) edges_.push_back({var[2 * j + 1], var[2 * next_[j]], j});

    // alpha blocks and the contractions they own
    const auto block = factor_blocks(p, k);
    blocks_.clear();
    std::vector<int> block_id(k, -1);
    for (int j = 0; j < k; ++j) {
      const int r = block[j];
      if (block_id[r] < 0) {
        block_id[r] = static_cast<int>(blocks_.size());
        blocks_.push_back({});
      }
      blocks_[block_id[r]].chi += chis_[j];
    }
    for (int i = 0; i < P; ++i) blocks_[block_id[block[p.pairs[i].first / 2]]].vars.push_back(i);

    // variable order by breadth-first search over edges
    order_.clear();
    anchor_.assign(P, -1);
    checks_.assign(P, {});
    std::vector<int> pos(P, -1);
    for (int root = 0; root < P; ++root) {
      if (pos[root] >= 0) continue;
      pos[root] = static_cast<int>(order_.size());
      order_.push_back(root);
      for (size_t q = pos[root]; q < order_.size(); ++q) {
        const int x = order_[q];
        for (int e = 0; e < k; ++e) {
          const Edge& ed = edges_[e];
          int y = -1;
          if (ed.u == x) y = ed.v;
          else if (ed.v == x) y = ed.u;
          if (y < 0 || pos[y] >= 0) continue;
          pos[y] = static_cast<int>(order_.size());
          order_.push_back(y);
          anchor_[y] = e;
        }
      }
    }
    for (int e = 0; e < k; ++e) {
      const int last = pos[edges_[e].u] > pos[edges_[e].v] ? edges_[e].u : edges_[e].v;
      checks_[last].push_back(e);
    }
    assign_.assign(P, -1);
    total_ = 0.0;
    descend(0, 1.0);
    return total_;
  }

 private:
  struct Block {
    cplx chi{0.0, 0.0};
    std::vector<int> vars;
  };

  void descend(size_t level, double weight) {
    if (level == order_.size()) {
      cplx v = weight;
      std::vector<double> energies;
      for (const Block& b : blocks_) {
        energies.clear();
        for (int x : b.vars) energies.push_back(model_.energy(assign_[x]));
        v *= block_integral(energies, b.chi, model_);
      }
      total_ += v;
      return;
    }
    const int x = order_[level];
    auto visit = [&](int value) {
      assign_[x] = value;
      double w = weight;
      for (int e : checks_[x]) {
        const Edge& ed = edges_[e];
        w *= mats_[ed.mat].value(assign_[ed.u], assign_[ed.v]);
        if (w == 0.0) break;
      }
      if (w != 0.0) descend(level + 1, w);
      assign_[x] = -1;
    };
    if (anchor_[x] < 0) {
      for (int value = 0; value < D_; ++value) visit(value);
      return;
    }
    const Edge& ed = edges_[anchor_[x]];
    const SparseRows& M = mats_[ed.mat];
    if (ed.v == x) {
      const int u = assign_[ed.u];
      if (M.identity) visit(u);
      else
        for (auto [c, val] : M.rows[u]) visit(c);
    } else {
      const int v = assign_[ed.v];
      if (M.identity) visit(v);
      else
        for (auto [r, val] : M.cols[v]) visit(r);
    }
  }

  const SpectrumModel& model_;
  int D_;
  std::vector<cplx> chis_;
  std::vector<int> next_;
  std::vector<SparseRows> mats_;
  std::vector<Edge> edges_;
  std::vector<Block> blocks_;
  std::vector<int> order_, anchor_, assign_;
  std::vector<std::vector<int>> checks_;
  cplx total_{0.0, 0.0};
};

void check_order(int k) {
  if (k < 1 || k > 5) {
    std::ostringstream os;
    os << "contraction order " << k << " outside [1, 5]";
    throw std::invalid_argument(os.str());
  }
}

}  // namespace

std::vector<ContractionPattern> enumerate_pairings(int k) {
  check_order(k);
  return all_patterns(k);
}

bool in_class(const ContractionPattern& p, Restriction r) {
  switch (r) {
    case Restriction::all: return true;
    case Restriction::noncrossing: return !p.crossing;
    case Restriction::connected_noncrossing: return !p.crossing && p.connected;
  }
  return false;
}

cplx pattern_moment(const MomentSpec& spec, const ContractionPattern& p, const SpectrumModel& model) {
  const int k = spec.order();
  std::vector<int> idx(2 * k);
  for (int j = 0; j < k; ++j) {
    idx[2 * j] = spec.m_indices[j];
    idx[2 * j + 1] = spec.n(j);
  }
  for (auto [a, b] : p.pairs)
    if (idx[a] != idx[b]) return {0.0, 0.0};
  const auto block = factor_blocks(p, k);
  cplx v(1.0, 0.0);
  for (int r = 0; r < k; ++r) {
    if (block[r] != r) continue;
    cplx chi(0.0);
    std::vector<double> energies;
    for (int j = 0; j < k; ++j)
      if (block[j] == r) chi += spec.chis[j];
    for (auto [a, b] : p.pairs)
      if (block[a / 2] == r) energies.push_back(model.energy(idx[a]));
    v *= block_integral(energies, chi, model);
  }
  return v;
}

cplx exact_moment(const MomentSpec& spec, const SpectrumModel& model, Restriction restrict) {
  spec.validate(5);
  cplx acc(0.0);
  for (const auto& p : enumerate_pairings(spec.order()))
    if (in_class(p, restrict)) acc += pattern_moment(spec, p, model);
  return acc;
}

int TraceProduct::factor_count() const {
  int k = 0;
  for (const auto& c : cycles) k += static_cast<int>(c.size());
  return k;
}

cplx pattern_trace(const TraceProduct& tp, const ContractionPattern& p, const SpectrumModel& model) {
  TraceEvaluator ev(tp, model);
  return ev.evaluate(p);
}

cplx sum_patterns(const TraceProduct& tp, const SpectrumModel& model,
                  const std::function<bool(const ContractionPattern&)>& select) {
  const int k = tp.factor_count();
  check_order(k);
  TraceEvaluator ev(tp, model);
  cplx acc(0.0);
  for (const auto& p : all_patterns(k))
    if (select(p)) acc += ev.evaluate(p);
  return acc;
}

TraceExpectation expect_trace(const TraceProduct& tp, const SpectrumModel& model) {
  const int k = tp.factor_count();
  check_order(k);
  TraceEvaluator ev(tp, model);
  TraceExpectation out;
  for (const auto& p : all_patterns(k)) {
    const cplx v = ev.evaluate(p);
    out.all += v;
    if (p.crossing) out.crossing += v;
    else out.noncrossing += v;
    if (!p.crossing && p.connected) out.connected_noncrossing += v;
  }
  return out;
}

VarianceReport variance_decomposition(const TraceCycle& t1, const TraceCycle& t2, const SpectrumModel& model) {
  const int k1 = static_cast<int>(t1.size());
  const TraceProduct joint{{t1, t2}};
  const int k = joint.factor_count();
  check_order(k);
  auto links = [&](const ContractionPattern& p) {
    for (auto [a, b] : p.pairs)
      if ((a / 2 < k1) != (b / 2 < k1)) return true;
    return false;
  };
  VarianceReport r;
  TraceEvaluator ev(joint, model);
  for (const auto& p : all_patterns(k)) {
    if (!links(p)) continue;
    const cplx v = ev.evaluate(p);
    r.corr_all += v;
    if (!p.crossing) r.corr_noncrossing += v;
  }
  r.mean_product = expect_trace({{t1}}, model).all * expect_trace({{t2}}, model).all;
  r.ratio_all = std::abs(r.corr_all) / std::abs(r.mean_product);
  r.ratio_noncrossing = std::abs(r.corr_noncrossing) / std::abs(r.mean_product);
  return r;
}

std::vector<ScalingPoint> variance_scaling(
    const std::function<std::pair<TraceCycle, TraceCycle>(const SpectrumModel&)>& build,
    const std::function<SpectrumModel(double)>& model_for, const std::vector<double>& N_grid) {
  std::vector<ScalingPoint> out;
  for (double N : N_grid) {
    const SpectrumModel m = model_for(N);
    const auto [a, b] = build(m);
    out.push_back({N, variance_decomposition(a, b, m)});
  }
  return out;
}

}  // namespace otoc
