#include "otoc/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace otoc {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front())
    return s.substr(1, s.size() - 2);
  return s;
}

struct Entry {
  std::string value;
  int line;
};

class Reader {
 public:
  Reader(std::string source, std::map<std::string, Entry> entries)
      : source_(std::move(source)), entries_(std::move(entries)) {}

  bool has(const std::string& key) const { return entries_.count(key) > 0; }

  const Entry& get(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError(source_, 0, "missing required key '" + key + "'");
    return it->second;
  }

  double number(const std::string& key) const {
    const Entry& e = get(key);
    return parse_double(e.value, e.line, key);
  }

  long long integer(const std::string& key) const {
    const Entry& e = get(key);
    long long v = 0;
    const char* b = e.value.data();
    const char* end = b + e.value.size();
    auto [p, ec] = std::from_chars(b, end, v);
    if (ec != std::errc() || p != end) fail(e.line, "key '" + key + "' expects an integer, got '" + e.value + "'");
    return v;
  }

  std::uint64_t unsigned_integer(const std::string& key) const {
    const Entry& e = get(key);
    std::uint64_t v = 0;
    const char* b = e.value.data();
    const char* end = b + e.value.size();
    auto [p, ec] = std::from_chars(b, end, v);
    if (ec != std::errc() || p != end)
      fail(e.line, "key '" + key + "' expects a nonnegative integer, got '" + e.value + "'");
    return v;
  }

  bool boolean(const std::string& key) const {
    const Entry& e = get(key);
    if (e.value == "true" || e.value == "1" || e.value == "yes") return true;
    if (e.value == "false" || e.value == "0" || e.value == "no") return false;
    fail(e.line, "key '" + key + "' expects true/false, got '" + e.value + "'");
    return false;
  }

  std::string choice(const std::string& key, const std::vector<std::string>& options) const {
    const Entry& e = get(key);
    if (std::find(options.begin(), options.end(), e.value) == options.end()) {
      std::string list;
      for (const auto& o : options) list += (list.empty() ? "" : "|") + o;
      fail(e.line, "key '" + key + "' expects one of " + list + ", got '" + e.value + "'");
    }
    return e.value;
  }

  std::vector<double> list(const std::string& key) const {
    const Entry& e = get(key);
    std::vector<double> out;
    std::stringstream ss(e.value);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) continue;
      out.push_back(parse_double(item, e.line, key));
    }
    if (out.empty()) fail(e.line, "key '" + key + "' expects a comma-separated list");
    return out;
  }

  int line(const std::string& key) const { return get(key).line; }

  [[noreturn]] void fail(int line, const std::string& msg) const { throw ConfigError(source_, line, msg); }

 private:
  double parse_double(const std::string& s, int line, const std::string& key) const {
    double v = 0;
    const char* b = s.data();
    const char* end = b + s.size();
    auto [p, ec] = std::from_chars(b, end, v);
    if (ec != std::errc() || p != end || !std::isfinite(v))
      fail(line, "key '" + key + "' expects a number, got '" + s + "'");
    return v;
  }

  std::string source_;
  std::map<std::string, Entry> entries_;
};

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s{
      {"spectrum", {"dimension", "levels_per_window", "mean_spacing"}},
      {"ensemble", {"eigenvalue_mode", "overlap_mode", "window", "band_cutoff", "seed"}},
      {"operators", {"kind", "support_lo", "support_hi", "bandwidth", "seed"}},
      {"run",
       {"beta_delta", "t_delta_list", "t_delta_min", "t_delta_max", "t_points", "members", "normalization",
        "compute", "workers", "acceptance", "moment_instances", "moment_mc_members", "moment_mc_points",
        "variance_levels", "variance_t_delta", "variance_members"}},
      {"output", {"dir"}},
  };
  return s;
}

}  // namespace

ConfigError::ConfigError(const std::string& source, int line_, const std::string& msg)
    : std::runtime_error(line_ > 0 ? source + ":" + std::to_string(line_) + ": " + msg : source + ": " + msg),
      line(line_) {}

ExperimentConfig parse_config(std::istream& in, const std::string& source) {
  std::map<std::string, Entry> entries;
  std::string section;
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(source, lineno, "malformed section header '" + line + "'");
      section = trim(line.substr(1, line.size() - 2));
      if (!schema().count(section)) throw ConfigError(source, lineno, "unknown section '" + section + "'");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(source, lineno, "expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    const auto hash = value.find(" #");
    if (hash != std::string::npos) value = trim(value.substr(0, hash));
    value = unquote(value);
    if (section.empty()) throw ConfigError(source, lineno, "key '" + key + "' appears before any section");
    if (!schema().at(section).count(key))
      throw ConfigError(source, lineno, "unknown key '" + key + "' in section [" + section + "]");
    const std::string full = section + "." + key;
    if (entries.count(full)) throw ConfigError(source, lineno, "duplicate key '" + key + "'");
    entries[full] = {value, lineno};
  }

  Reader r(source, entries);
  ExperimentConfig cfg;
  for (const auto& [k, e] : entries) cfg.echo[k] = e.value;

  RunConfig& run = cfg.run;
  SpectrumModel& sp = run.ensemble.spectrum;
  const long long D = r.integer("spectrum.dimension");
  if (D < 1) r.fail(r.line("spectrum.dimension"), "dimension must be >= 1");
  const double N = r.number("spectrum.levels_per_window");
  if (N < 1) r.fail(r.line("spectrum.levels_per_window"), "levels_per_window must be >= 1");
  const double d = r.has("spectrum.mean_spacing") ? r.number("spectrum.mean_spacing") : 1.0;
  if (!(d > 0)) r.fail(r.line("spectrum.mean_spacing"), "mean_spacing must be > 0");
  sp = SpectrumModel::from_levels(static_cast<int>(D), N, d);
  const double Dl = sp.delta;

  EnsembleConfig& ens = run.ensemble;
  if (r.has("ensemble.eigenvalue_mode"))
    ens.eigenvalue_mode = r.choice("ensemble.eigenvalue_mode", {"picket", "goe_unfolded"}) == "picket"
                              ? EigenvalueMode::picket
                              : EigenvalueMode::goe_unfolded;
  if (r.has("ensemble.overlap_mode"))
    ens.overlap_mode = r.choice("ensemble.overlap_mode", {"gaussian", "orthogonalized"}) == "gaussian"
                           ? OverlapMode::gaussian
                           : OverlapMode::orthogonalized;
  if (r.has("ensemble.window"))
    ens.window = r.choice("ensemble.window", {"gaussian", "lorentzian"}) == "gaussian" ? WindowShape::gaussian
                                                                                       : WindowShape::lorentzian;
  if (r.has("ensemble.band_cutoff")) {
    ens.band_cutoff = r.number("ensemble.band_cutoff");
    if (ens.band_cutoff < 4) r.fail(r.line("ensemble.band_cutoff"), "band_cutoff must be >= 4");
  }
  if (r.has("ensemble.seed")) ens.seed = r.unsigned_integer("ensemble.seed");

  PairSpec& ps = run.pair;
  if (r.has("operators.kind"))
    ps.kind = r.choice("operators.kind", {"hopping", "random_offdiag"}) == "hopping" ? OperatorKind::hopping
                                                                                     : OperatorKind::random_offdiag;
  ps.bandwidth = ps.kind == OperatorKind::hopping ? 1 : 4;
  if (r.has("operators.bandwidth")) {
    ps.bandwidth = static_cast<int>(r.integer("operators.bandwidth"));
    if (ps.bandwidth < 1) r.fail(r.line("operators.bandwidth"), "bandwidth must be >= 1");
  }
  if (r.has("operators.seed")) ps.seed = r.unsigned_integer("operators.seed");
  const bool lo = r.has("operators.support_lo"), hi = r.has("operators.support_hi");
  if (lo != hi) r.fail(r.line(lo ? "operators.support_lo" : "operators.support_hi"), "support_lo and support_hi go together");
  if (lo) {
    IndexRange s{static_cast<int>(r.integer("operators.support_lo")), static_cast<int>(r.integer("operators.support_hi"))};
    if (s.empty() || s.lo < 0 || s.hi >= D) r.fail(r.line("operators.support_lo"), "support must be a nonempty range inside [0, dimension)");
    ps.support = s;
  }

  if (r.has("run.beta_delta")) {
    const double b = r.number("run.beta_delta");
    if (b < 0) r.fail(r.line("run.beta_delta"), "beta_delta must be >= 0");
    run.beta = b / Dl;
  }
  if (r.has("run.t_delta_list")) {
    if (r.has("run.t_delta_max")) r.fail(r.line("run.t_delta_max"), "give either t_delta_list or t_delta_max, not both");
    for (double x : r.list("run.t_delta_list")) run.t_grid.push_back(x / Dl);
    cfg.has_t_grid = true;
  } else if (r.has("run.t_delta_max")) {
    const double t0 = r.has("run.t_delta_min") ? r.number("run.t_delta_min") : 0.0;
    const double t1 = r.number("run.t_delta_max");
    const long long n = r.has("run.t_points") ? r.integer("run.t_points") : 25;
    if (n < 1) r.fail(r.line("run.t_points"), "t_points must be >= 1");
    if (t1 < t0) r.fail(r.line("run.t_delta_max"), "t_delta_max must be >= t_delta_min");
    for (long long i = 0; i < n; ++i) {
      const double x = n == 1 ? t0 : t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(n - 1);
      run.t_grid.push_back(x / Dl);
    }
    cfg.has_t_grid = true;
  }
  if (r.has("run.members")) run.members = static_cast<int>(r.integer("run.members"));
  if (r.has("run.normalization"))
    run.normalization = r.choice("run.normalization", {"per_member", "mean_Z"}) == "per_member"
                            ? Normalization::per_member
                            : Normalization::mean_Z;
  if (r.has("run.compute")) {
    const std::string c = r.choice("run.compute", {"both", "C", "F"});
    run.compute_C = c != "F";
    run.compute_F = c != "C";
  }
  if (r.has("run.workers")) run.workers = static_cast<int>(r.integer("run.workers"));
  if (r.has("run.acceptance")) run.acceptance = r.boolean("run.acceptance");
  if (r.has("run.moment_instances")) cfg.moment_instances = static_cast<int>(r.integer("run.moment_instances"));
  if (r.has("run.moment_mc_members")) cfg.moment_mc_members = static_cast<int>(r.integer("run.moment_mc_members"));
  if (r.has("run.moment_mc_points")) cfg.moment_mc_points = static_cast<int>(r.integer("run.moment_mc_points"));
  if (r.has("run.variance_levels")) cfg.variance_levels = r.list("run.variance_levels");
  if (r.has("run.variance_t_delta")) cfg.variance_t_delta = r.number("run.variance_t_delta");
  if (r.has("run.variance_members")) cfg.variance_members = static_cast<int>(r.integer("run.variance_members"));
  if (r.has("output.dir")) cfg.out_dir = r.get("output.dir").value;
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, 0, "cannot open config file");
  return parse_config(in, path);
}

}  // namespace otoc
