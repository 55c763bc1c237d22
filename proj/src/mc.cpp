#include "cregmm/mc.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>

#include "cregmm/errors.hpp"
#include "cregmm/format.hpp"
#include "cregmm/gmm.hpp"

namespace cregmm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

const std::vector<std::pair<std::string, std::string>>& greek() {
  static const std::vector<std::pair<std::string, std::string>> g = {
      {"rho", "ρ"},       {"beta1", "β1"},   {"beta2", "β2"}, {"gamma1", "γ1"}, {"gamma2", "γ2"},
      {"gamma3", "γ3"}, {"N", "N"},        {"T", "T"},      {"S", "S"}};
  return g;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

// Coefficient labels and the model term each one reads.
std::vector<std::pair<std::string, std::string>> targets(const Scenario& s) {
  std::vector<std::pair<std::string, std::string>> t = {{"rho", "L.y"}, {"beta1", "x"}};
  if (s.beta2 != 0.0) t.emplace_back("beta2", "L.x");
  return t;
}

double truth(const Scenario& s, const std::string& coef) {
  if (coef == "rho") return s.rho;
  if (coef == "beta1") return s.beta1;
  if (coef == "beta2") return s.beta2;
  throw Error(ErrorKind::InvalidArgument, "unknown coefficient label " + coef);
}

std::map<std::string, double> biases(const EstimationResult& r, const Scenario& s) {
  std::map<std::string, double> out;
  for (const auto& [label, term] : targets(s)) out[label] = r.coefficient(term) - truth(s, label);
  return out;
}

double sample_sd(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return kNaN;
  double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

std::string Scenario::id() const {
  std::string s;
  for (const auto& name : scenario_parameters()) {
    if (!s.empty()) s += ';';
    s += name + "=" + format_shortest(param(name));
  }
  return s;
}

double Scenario::param(const std::string& name) const {
  if (name == "rho") return rho;
  if (name == "beta1") return beta1;
  if (name == "beta2") return beta2;
  if (name == "gamma1") return gamma1;
  if (name == "gamma2") return gamma2;
  if (name == "gamma3") return gamma3;
  if (name == "N") return N;
  if (name == "T") return T;
  if (name == "S") return S;
  throw Error(ErrorKind::InvalidArgument, "unknown scenario parameter " + name);
}

const std::vector<std::string>& scenario_parameters() {
  static const std::vector<std::string> p = {"rho", "beta1", "beta2", "gamma1", "gamma2", "gamma3", "N", "T", "S"};
  return p;
}

int McConfig::presample_for(int T) const {
  auto it = S_by_T.find(T);
  return it == S_by_T.end() ? S : it->second;
}

void McConfig::validate() const {
  if (reps < 2) throw Error(ErrorKind::InvalidArgument, "reps must be >= 2");
  if (estimators.empty() && custom.empty()) throw Error(ErrorKind::InvalidArgument, "no estimators selected");
  const auto& g = grid;
  if (g.rho.empty() || g.beta2.empty() || g.gamma3.empty() ||
      (g.gamma12.empty() && (g.gamma1.empty() || g.gamma2.empty())) ||
      (g.NT.empty() && (g.N.empty() || g.T.empty())))
    throw Error(ErrorKind::InvalidArgument, "grid is empty");
  for (const auto& e : estimators) builtin_estimator(e, *this);
}

bool McConfig::operator==(const McConfig& o) const {
  return grid == o.grid && reps == o.reps && estimators == o.estimators && base_seed == o.base_seed && S == o.S &&
         S_by_T == o.S_by_T && base == o.base && x_role == o.x_role && baseline == o.baseline && gmm == o.gmm &&
         skip_infeasible == o.skip_infeasible && keep_raw == o.keep_raw &&
         fail_on_all_failed == o.fail_on_all_failed && policy == o.policy;
}

std::vector<Scenario> enumerate_grid(const McConfig& cfg, std::vector<SkippedScenario>* skipped) {
  const GridSpec& g = cfg.grid;
  std::vector<std::pair<double, double>> g12 = g.gamma12;
  if (g12.empty())
    for (double a : g.gamma1)
      for (double b : g.gamma2) g12.emplace_back(a, b);
  std::vector<std::pair<int, int>> nt = g.NT;
  if (nt.empty())
    for (int n : g.N)
      for (int t : g.T) nt.emplace_back(n, t);

  std::vector<Scenario> out;
  for (double rho : g.rho)
    for (double b2 : g.beta2)
      for (const auto& [g1, g2] : g12)
        for (double g3 : g.gamma3)
          for (const auto& [n, t] : nt) {
            Scenario s;
            s.rho = rho;
            s.beta1 = cfg.base.beta1;
            s.beta2 = b2;
            s.gamma1 = g1;
            s.gamma2 = g2;
            s.gamma3 = g3;
            s.N = n;
            s.T = t;
            s.S = cfg.presample_for(t);
            std::string reason;
            try {
              DgpConfig d = mc_dgp(cfg, s, 0);
              calibrate_variances(d);
              if (cfg.skip_infeasible) {
                // feasibility is judged on the fixed-V(x) scale whatever the run mode
                d.mode.regressor = RegressorVarianceMode::FixVx;
                calibrate_variances(d);
              }
            } catch (const Error& e) {
              if (e.kind() != ErrorKind::CalibrationInfeasible) throw;
              reason = e.detail();
            }
            if (reason.empty())
              out.push_back(s);
            else if (skipped)
              skipped->push_back({s, reason});
          }
  return out;
}

ModelSpec mc_model(const Scenario& s, Exogeneity role) {
  ModelSpec m;
  m.ar_order = 1;
  m.x_terms.push_back({"x", 0, {role, true}});
  if (s.beta2 != 0.0) m.x_terms.push_back({"x", 1, {role, true}});
  m.presample_end = s.S;
  return m;
}

DgpConfig mc_dgp(const McConfig& cfg, const Scenario& s, int rep) {
  DgpConfig d = cfg.base;
  d.rho = s.rho;
  d.beta1 = s.beta1;
  d.beta2 = s.beta2;
  d.gamma1 = s.gamma1;
  d.gamma2 = s.gamma2;
  d.gamma3 = s.gamma3;
  d.N = s.N;
  d.T = s.T;
  d.S = s.S;
  d.seed = mix_seed(mix_seed(cfg.base_seed, fnv1a(s.id())), static_cast<std::uint64_t>(rep));
  return d;
}

EstimatorFn builtin_estimator(const std::string& name, const McConfig& cfg) {
  const Exogeneity role = cfg.x_role;
  BaselineOptions bo = cfg.baseline;
  bo.point_only = true;
  if (name == "POLS")
    return [=](const PanelDataset& p, const Scenario& s) { return biases(pols(p, mc_model(s, role), bo), s); };
  if (name == "RE")
    return [=](const PanelDataset& p, const Scenario& s) { return biases(re_fgls(p, mc_model(s, role), bo), s); };
  if (name == "FE")
    return [=](const PanelDataset& p, const Scenario& s) { return biases(fe_within(p, mc_model(s, role), bo), s); };
  if (name == "CRE1" || name == "CRE2") {
    const CreVariant v = name == "CRE1" ? CreVariant::CRE1 : CreVariant::CRE2;
    return [=](const PanelDataset& p, const Scenario& s) {
      return biases(cre(p, mc_model(s, role), v, MeansSource::Presample, bo), s);
    };
  }
  const Variant v = parse_variant(name);
  GmmOptions go = cfg.gmm;
  go.point_only = true;
  go.windmeijer = false;
  return [=](const PanelDataset& p, const Scenario& s) {
    return biases(estimate_variant(p, mc_model(s, role), v, go), s);
  };
}

McSummary run_grid(const McConfig& cfg) {
  cfg.validate();
  McSummary sum;
  sum.reps = cfg.reps;
  sum.raw_retained = cfg.keep_raw;
  sum.scenarios = enumerate_grid(cfg, &sum.skipped);
  if (sum.scenarios.empty()) throw Error(ErrorKind::InvalidArgument, "every grid cell is infeasible");

  std::vector<std::pair<std::string, EstimatorFn>> est;
  for (const auto& e : cfg.estimators) est.emplace_back(e, builtin_estimator(e, cfg));
  for (const auto& c : cfg.custom) est.push_back(c);
  const std::size_t E = est.size();
  const int R = cfg.reps;

  for (std::size_t si = 0; si < sum.scenarios.size(); ++si) {
    const Scenario& sc = sum.scenarios[si];
    const auto tg = targets(sc);
    const std::size_t C = tg.size();
    // [rep][estimator][coef], NaN marks a failed fit
    std::vector<double> store(static_cast<std::size_t>(R) * E * C, kNaN);
    std::vector<std::exception_ptr> fatal(static_cast<std::size_t>(R));

    auto one_rep = [&](int rep) {
      try {
        const PanelDataset p = simulate_panel(mc_dgp(cfg, sc, rep), false, ExecPolicy::Serial);
        for (std::size_t e = 0; e < E; ++e) {
          std::map<std::string, double> b;
          try {
            b = est[e].second(p, sc);
          } catch (const Error&) {
            continue;  // counted as a failure
          }
          for (std::size_t c = 0; c < C; ++c) {
            auto it = b.find(tg[c].first);
            if (it != b.end() && std::isfinite(it->second))
              store[(static_cast<std::size_t>(rep) * E + e) * C + c] = it->second;
          }
        }
      } catch (...) {
        fatal[static_cast<std::size_t>(rep)] = std::current_exception();
      }
    };

    if (cfg.policy == ExecPolicy::Parallel) {
#pragma omp parallel for schedule(dynamic) num_threads(max_threads())
      for (int rep = 0; rep < R; ++rep) one_rep(rep);
    } else {
      for (int rep = 0; rep < R; ++rep) one_rep(rep);
    }
    for (const auto& f : fatal)
      if (f) std::rethrow_exception(f);

    for (std::size_t e = 0; e < E; ++e)
      for (std::size_t c = 0; c < C; ++c) {
        std::vector<double> ok;
        for (int rep = 0; rep < R; ++rep) {
          const double v = store[(static_cast<std::size_t>(rep) * E + e) * C + c];
          if (!std::isnan(v)) ok.push_back(v);
          if (cfg.keep_raw) sum.raw.push_back({si, est[e].first, tg[c].first, rep, v});
        }
        McRow row;
        row.scenario = si;
        row.estimator = est[e].first;
        row.coef = tg[c].first;
        row.reps = static_cast<int>(ok.size());
        row.failures = R - row.reps;
        if (ok.empty()) {
          if (cfg.fail_on_all_failed)
            throw Error(ErrorKind::AllRepsFailed, est[e].first + " at " + sc.id());
          row.bias = row.ese = kNaN;
        } else {
          row.bias = std::accumulate(ok.begin(), ok.end(), 0.0) / static_cast<double>(ok.size());
          row.ese = sample_sd(ok, row.bias);
        }
        sum.rows.push_back(row);
      }
  }
  return sum;
}

void write_summary_csv(std::ostream& out, const McSummary& s) {
  out << "scenario_id,rho,beta1,beta2,gamma1,gamma2,gamma3,N,T,S,estimator,coef,bias,ese,reps,failures\n";
  for (const auto& r : s.rows) {
    const Scenario& sc = s.scenarios[r.scenario];
    out << sc.id();
    for (const auto& p : scenario_parameters()) out << ',' << format_shortest(sc.param(p));
    out << ',' << r.estimator << ',' << r.coef << ',' << format_shortest(r.bias) << ',' << format_shortest(r.ese)
        << ',' << r.reps << ',' << r.failures << '\n';
  }
}

void export_nestedloop(std::ostream& out, const McSummary& s, const std::vector<std::string>& order,
                       const std::string& coef) {
  if (order.empty()) throw Error(ErrorKind::InvalidArgument, "parameter_order is empty");
  using Key = std::vector<double>;
  auto key_of = [&](const Scenario& sc) {
    Key k;
    for (const auto& p : order) k.push_back(sc.param(p));
    return k;
  };

  std::vector<std::set<double>> levels(order.size());
  std::map<Key, std::size_t> executed;
  std::set<Key> seen;
  auto add = [&](const Scenario& sc, std::optional<std::size_t> idx) {
    const Key k = key_of(sc);
    if (!seen.insert(k).second)
      throw Error(ErrorKind::NonFactorialGrid, "scenario " + sc.id() + " repeats a cell of the parameter order");
    for (std::size_t j = 0; j < k.size(); ++j) levels[j].insert(k[j]);
    if (idx) executed[k] = *idx;
  };
  for (std::size_t i = 0; i < s.scenarios.size(); ++i) add(s.scenarios[i], i);
  for (const auto& sk : s.skipped) add(sk.scenario, std::nullopt);
  std::size_t cells = 1;
  for (const auto& l : levels) cells *= l.size();
  if (cells != seen.size())
    throw Error(ErrorKind::NonFactorialGrid, std::to_string(seen.size()) + " scenarios for a " +
                                                 std::to_string(cells) + "-cell factorial");

  std::vector<std::string> est;
  std::map<std::pair<std::size_t, std::string>, double> bias;
  for (const auto& r : s.rows) {
    if (r.coef != coef) continue;
    if (std::find(est.begin(), est.end(), r.estimator) == est.end()) est.push_back(r.estimator);
    bias[{r.scenario, r.estimator}] = r.bias;
  }

  out << "scenario_id";
  for (const auto& p : order) out << ',' << p;
  for (const auto& e : est) out << ',' << e;
  out << '\n';
  for (const auto& [k, idx] : executed) {  // std::map orders keys lexicographically
    out << s.scenarios[idx].id();
    for (double v : k) out << ',' << format_shortest(v);
    for (const auto& e : est) {
      auto it = bias.find({idx, e});
      out << ',' << (it == bias.end() ? std::string() : format_shortest(it->second));
    }
    out << '\n';
  }
}

std::string group_label(const Scenario& s, const std::vector<std::string>& grouping) {
  std::string out;
  for (const auto& p : grouping) {
    std::string g = p;
    for (const auto& [name, sym] : greek())
      if (name == p) g = sym;
    if (!out.empty()) out += ',';
    out += g + "=" + format_shortest(s.param(p));
  }
  return out;
}

void export_boxplot(std::ostream& out, const McSummary& s, const std::vector<std::string>& grouping,
                    const std::string& coef) {
  if (!s.raw_retained) throw Error(ErrorKind::RawNotRetained, "rerun with keep_raw set");
  out << "group,scenario_id,estimator,coef,rep,bias\n";
  for (const auto& r : s.raw) {
    if (r.coef != coef) continue;
    const Scenario& sc = s.scenarios[r.scenario];
    const std::string g = group_label(sc, grouping);
    out << '"' << g << "\"," << sc.id() << ',' << r.estimator << ',' << r.coef << ',' << r.rep << ','
        << format_shortest(r.bias) << '\n';
  }
}

double quantile(std::vector<double> v, double p) {
  v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return std::isnan(x); }), v.end());
  if (v.empty() || !(p >= 0 && p <= 1)) throw Error(ErrorKind::InvalidArgument, "quantile needs data and p in [0,1]");
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::vector<ReferenceRow> read_reference_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::MissingColumn, "reference file is empty");
  const auto header = split_csv_line(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* need : {"rho", "beta1", "beta2", "gamma1", "gamma2", "gamma3", "N", "T", "estimator", "coef",
                           "bias", "ese"})
    if (!col.count(need)) throw Error(ErrorKind::MissingColumn, std::string("reference column ") + need);

  std::vector<ReferenceRow> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    auto field = [&](const std::string& name) -> std::string {
      auto it = col.find(name);
      if (it == col.end() || it->second >= f.size()) return {};
      return f[it->second];
    };
    auto num = [&](const std::string& name) {
      const std::string v = field(name);
      if (v.empty()) return kNaN;
      try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
      } catch (const std::exception&) {
        throw Error(ErrorKind::NonNumericCell, "row " + std::to_string(lineno) + ", column " + name + ": '" + v + "'");
      }
    };
    ReferenceRow r;
    r.table = field("table");
    r.scenario.rho = num("rho");
    r.scenario.beta1 = num("beta1");
    r.scenario.beta2 = num("beta2");
    r.scenario.gamma1 = num("gamma1");
    r.scenario.gamma2 = num("gamma2");
    r.scenario.gamma3 = num("gamma3");
    r.scenario.N = static_cast<int>(num("N"));
    r.scenario.T = static_cast<int>(num("T"));
    r.estimator = field("estimator");
    r.coef = field("coef");
    r.bias = num("bias");
    r.ese = num("ese");
    r.reps = col.count("reps") && !field("reps").empty() ? static_cast<int>(num("reps")) : 0;
    r.source = field("source");
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<ReferenceRow> read_reference_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot open " + path);
  return read_reference_csv(in);
}

double ComparisonReport::pass_rate() const {
  return rows.empty() ? kNaN : static_cast<double>(passed()) / static_cast<double>(rows.size());
}

std::size_t ComparisonReport::passed() const {
  return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const ComparisonRow& r) { return r.pass; }));
}

namespace {

std::string reference_key(const Scenario& s, const std::string& estimator, const std::string& coef) {
  std::string k;
  for (const char* p : {"rho", "beta1", "beta2", "gamma1", "gamma2", "gamma3", "N", "T"})
    k += format_shortest(s.param(p)) + '|';
  return k + estimator + '|' + coef;
}

}  // namespace

ComparisonReport compare_to_reference(const McSummary& s, const std::vector<ReferenceRow>& reference,
                                      const TolerancePolicy& policy) {
  std::map<std::string, const ReferenceRow*> ref;
  for (const auto& r : reference) {
    const std::string k = reference_key(r.scenario, r.estimator, r.coef);
    if (!ref.emplace(k, &r).second) throw Error(ErrorKind::KeyMismatch, "duplicate reference key " + k);
  }
  ComparisonReport rep;
  for (std::size_t i = 0; i < s.rows.size(); ++i) {
    const McRow& row = s.rows[i];
    const std::string k = reference_key(s.scenarios[row.scenario], row.estimator, row.coef);
    auto it = ref.find(k);
    if (it == ref.end()) {
      if (policy.strict) throw Error(ErrorKind::KeyMismatch, "no reference row for " + k);
      ++rep.unmatched;
      continue;
    }
    const ReferenceRow& r = *it->second;
    ComparisonRow c;
    c.summary_row = i;
    c.table = r.table;
    c.bias = row.bias;
    c.reference = r.bias;
    const double se = row.reps > 0 && std::isfinite(r.ese) ? policy.z * r.ese / std::sqrt(row.reps) : 0.0;
    c.tolerance = std::max(policy.abs_tol, se);
    c.pass = std::isfinite(row.bias) && std::abs(row.bias - r.bias) <= c.tolerance;
    rep.rows.push_back(c);
  }
  if (rep.rows.empty()) throw Error(ErrorKind::KeyMismatch, "no summary row matches the reference table");
  return rep;
}

void write_comparison_csv(std::ostream& out, const McSummary& s, const ComparisonReport& r) {
  out << "scenario_id,table,estimator,coef,bias,reference,abs_diff,tolerance,pass\n";
  for (const auto& c : r.rows) {
    const McRow& row = s.rows[c.summary_row];
    out << s.scenarios[row.scenario].id() << ',' << c.table << ',' << row.estimator << ',' << row.coef << ','
        << format_shortest(c.bias) << ',' << format_shortest(c.reference) << ','
        << format_shortest(std::abs(c.bias - c.reference)) << ',' << format_shortest(c.tolerance) << ','
        << (c.pass ? "pass" : "fail") << '\n';
  }
}

}  // namespace cregmm
