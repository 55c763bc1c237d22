#include "cregmm/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "cregmm/errors.hpp"

namespace cregmm {

using nlohmann::json;

namespace {

// Reads typed fields from one JSON object and rejects keys nobody asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw Error(ErrorKind::TypeMismatch, path_ + " must be an object");
  }

  bool has(const std::string& k) const { return j_.contains(k); }

  const json* get(const std::string& k) {
    seen_.insert(k);
    auto it = j_.find(k);
    return it == j_.end() ? nullptr : &*it;
  }

  void num(const std::string& k, double& out) {
    if (const json* v = get(k)) {
      if (!v->is_number()) mismatch(k, "a number");
      out = v->get<double>();
    }
  }

  template <class Int>
  void integer(const std::string& k, Int& out) {
    if (const json* v = get(k)) out = as_int<Int>(*v, k);
  }

  void boolean(const std::string& k, bool& out) {
    if (const json* v = get(k)) {
      if (!v->is_boolean()) mismatch(k, "a boolean");
      out = v->get<bool>();
    }
  }

  void str(const std::string& k, std::string& out) {
    if (const json* v = get(k)) {
      if (!v->is_string()) mismatch(k, "a string");
      out = v->get<std::string>();
    }
  }

  void strings(const std::string& k, std::vector<std::string>& out) {
    if (const json* v = get(k)) {
      if (!v->is_array()) mismatch(k, "a list of strings");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_string()) mismatch(k, "a list of strings");
        out.push_back(e.get<std::string>());
      }
    }
  }

  void nums(const std::string& k, std::vector<double>& out) {
    if (const json* v = get(k)) {
      if (!v->is_array()) mismatch(k, "a list of numbers");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_number()) mismatch(k, "a list of numbers");
        out.push_back(e.get<double>());
      }
    }
  }

  void ints(const std::string& k, std::vector<int>& out) {
    if (const json* v = get(k)) {
      if (!v->is_array()) mismatch(k, "a list of integers");
      out.clear();
      for (const auto& e : *v) out.push_back(as_int<int>(e, k));
    }
  }

  template <class T, class F>
  void pairs(const std::string& k, std::vector<std::pair<T, T>>& out, F conv) {
    if (const json* v = get(k)) {
      if (!v->is_array()) mismatch(k, "a list of pairs");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_array() || e.size() != 2) mismatch(k, "a list of pairs");
        out.emplace_back(conv(e[0]), conv(e[1]));
      }
    }
  }

  template <class Int>
  Int as_int(const json& v, const std::string& k) const {
    if (v.is_number_integer()) return static_cast<Int>(v.get<std::int64_t>());
    if (v.is_number_unsigned()) return static_cast<Int>(v.get<std::uint64_t>());
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (std::floor(d) == d) return static_cast<Int>(d);
    }
    mismatch(k, "an integer");
  }

  [[noreturn]] void mismatch(const std::string& k, const char* what) const {
    throw Error(ErrorKind::TypeMismatch, path_ + "." + k + " must be " + what);
  }

  std::string path(const std::string& k) const { return path_ + "." + k; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw Error(ErrorKind::UnknownKey, it.key() + " (in " + path_ + ")");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class E, class P>
void enum_field(Section& s, const std::string& k, E& out, P parse) {
  std::string v;
  s.str(k, v);
  if (v.empty()) return;
  try {
    out = parse(v);
  } catch (const Error& e) {
    throw Error(ErrorKind::TypeMismatch, s.path(k) + ": " + e.detail());
  }
}

CreBackend parse_backend(const std::string& s) {
  if (s == "RE" || s == "re") return CreBackend::RE;
  if (s == "POLS" || s == "pols") return CreBackend::POLS;
  throw Error(ErrorKind::InvalidArgument, "unknown CRE backend '" + s + "'");
}

MeansSource parse_means(const std::string& s) {
  if (s == "presample") return MeansSource::Presample;
  if (s == "full") return MeansSource::FullSample;
  throw Error(ErrorKind::InvalidArgument, "unknown means source '" + s + "'");
}

void read_dgp(Section& s, DgpConfig& d) {
  s.num("rho", d.rho);
  s.num("beta0", d.beta0);
  s.num("beta1", d.beta1);
  s.num("beta2", d.beta2);
  s.num("theta_x", d.theta_x);
  s.num("gamma1", d.gamma1);
  s.num("gamma2", d.gamma2);
  s.num("gamma3", d.gamma3);
  s.num("sigma_mu", d.sigma_mu);
  s.num("sigma_e", d.sigma_e);
  s.num("sigma_eps", d.sigma_eps);
  s.num("sigma_x", d.sigma_x);
  s.num("sigma_xi", d.sigma_xi);
  enum_field(s, "error_mode", d.mode.error, parse_error_mode);
  enum_field(s, "regressor_mode", d.mode.regressor, parse_regressor_mode);
  s.integer("N", d.N);
  s.integer("T", d.T);
  s.integer("S", d.S);
  s.integer("burn_in", d.burn_in);
  s.integer("seed", d.seed);
  s.finish();
}

json write_dgp(const DgpConfig& d) {
  return {{"rho", d.rho},
          {"beta0", d.beta0},
          {"beta1", d.beta1},
          {"beta2", d.beta2},
          {"theta_x", d.theta_x},
          {"gamma1", d.gamma1},
          {"gamma2", d.gamma2},
          {"gamma3", d.gamma3},
          {"sigma_mu", d.sigma_mu},
          {"sigma_e", d.sigma_e},
          {"sigma_eps", d.sigma_eps},
          {"sigma_x", d.sigma_x},
          {"sigma_xi", d.sigma_xi},
          {"error_mode", error_mode_name(d.mode.error)},
          {"regressor_mode", regressor_mode_name(d.mode.regressor)},
          {"N", d.N},
          {"T", d.T},
          {"S", d.S},
          {"burn_in", d.burn_in},
          {"seed", d.seed}};
}

void read_gmm_options(Section& s, GmmOptions& g) {
  s.integer("steps", g.steps);
  s.boolean("collapse", g.collapse);
  g.windmeijer = g.steps == 2;
  s.boolean("windmeijer", g.windmeijer);
  s.num("weight_ridge", g.weight_ridge);
  s.integer("max_lag", g.max_lag);
}

void write_gmm_options(json& j, const GmmOptions& g) {
  j["steps"] = g.steps;
  j["collapse"] = g.collapse;
  j["windmeijer"] = g.windmeijer;
  j["weight_ridge"] = g.weight_ridge;
  j["max_lag"] = g.max_lag;
}

ModelSpec read_model(Section& s) {
  ModelSpec m;
  s.str("dependent", m.dependent);
  s.integer("ar_order", m.ar_order);
  if (const json* xs = s.get("x")) {
    if (!xs->is_array()) s.mismatch("x", "a list");
    for (std::size_t i = 0; i < xs->size(); ++i) {
      const json& e = (*xs)[i];
      XTerm t;
      if (e.is_string()) {
        t.name = e.get<std::string>();
      } else {
        Section xe(e, s.path("x") + "[" + std::to_string(i) + "]");
        xe.str("name", t.name);
        xe.integer("lag", t.lag);
        enum_field(xe, "exogeneity", t.role.exogeneity, parse_exogeneity);
        xe.boolean("het_correlated", t.role.het_correlated);
        xe.finish();
        if (t.name.empty()) throw Error(ErrorKind::MissingSection, s.path("x") + "[" + std::to_string(i) + "].name");
      }
      m.x_terms.push_back(t);
    }
  }
  s.strings("w", m.w_terms);
  s.boolean("time_dummies", m.time_dummies);
  if (const json* p = s.get("presample_end"); p && !p->is_null()) m.presample_end = s.as_int<std::int64_t>(*p, "presample_end");
  enum_field(s, "include_averages", m.include_averages, parse_average_set);
  s.finish();
  return m;
}

json write_model(const ModelSpec& m) {
  json xs = json::array();
  for (const auto& t : m.x_terms)
    xs.push_back({{"name", t.name},
                  {"lag", t.lag},
                  {"exogeneity", exogeneity_name(t.role.exogeneity)},
                  {"het_correlated", t.role.het_correlated}});
  json j = {{"dependent", m.dependent},
            {"ar_order", m.ar_order},
            {"x", xs},
            {"w", m.w_terms},
            {"time_dummies", m.time_dummies},
            {"include_averages", average_set_name(m.include_averages)}};
  j["presample_end"] = m.presample_end ? json(*m.presample_end) : json(nullptr);
  return j;
}

EstimateConfig read_estimate(Section& s) {
  EstimateConfig e;
  s.strings("estimators", e.estimators);
  enum_field(s, "cre_backend", e.baseline.cre_backend, parse_backend);
  s.boolean("drop_collinear", e.baseline.drop_collinear);
  enum_field(s, "cre_means", e.cre_means, parse_means);
  read_gmm_options(s, e.gmm);
  s.strings("decompose", e.decompose);
  s.finish();
  return e;
}

json write_estimate(const EstimateConfig& e) {
  json j = {{"estimators", e.estimators},
            {"cre_backend", cre_backend_name(e.baseline.cre_backend)},
            {"drop_collinear", e.baseline.drop_collinear},
            {"cre_means", e.cre_means == MeansSource::Presample ? "presample" : "full"},
            {"decompose", e.decompose}};
  write_gmm_options(j, e.gmm);
  return j;
}

void read_mc(Section& s, McConfig& m, McOutputConfig& o) {
  if (const json* g = s.get("grid")) {
    Section gs(*g, s.path("grid"));
    gs.nums("rho", m.grid.rho);
    gs.nums("beta2", m.grid.beta2);
    gs.nums("gamma1", m.grid.gamma1);
    gs.nums("gamma2", m.grid.gamma2);
    gs.nums("gamma3", m.grid.gamma3);
    gs.ints("N", m.grid.N);
    gs.ints("T", m.grid.T);
    gs.pairs("gamma12", m.grid.gamma12, [&](const json& v) {
      if (!v.is_number()) gs.mismatch("gamma12", "a list of number pairs");
      return v.get<double>();
    });
    gs.pairs("NT", m.grid.NT, [&](const json& v) { return gs.as_int<int>(v, "NT"); });
    gs.finish();
  }
  if (const json* d = s.get("dgp")) {
    Section ds(*d, s.path("dgp"));
    read_dgp(ds, m.base);
  }
  s.integer("reps", m.reps);
  s.strings("estimators", m.estimators);
  s.integer("base_seed", m.base_seed);
  s.integer("S", m.S);
  if (const json* st = s.get("S_by_T")) {
    if (!st->is_object()) s.mismatch("S_by_T", "an object mapping T to S");
    m.S_by_T.clear();
    for (auto it = st->begin(); it != st->end(); ++it) {
      int T = 0;
      try {
        std::size_t pos = 0;
        T = std::stoi(it.key(), &pos);
        if (pos != it.key().size()) throw std::invalid_argument(it.key());
      } catch (const std::exception&) {
        s.mismatch("S_by_T", "keyed by integer T");
      }
      m.S_by_T[T] = s.as_int<int>(it.value(), "S_by_T");
    }
  }
  enum_field(s, "x_role", m.x_role, parse_exogeneity);
  enum_field(s, "cre_backend", m.baseline.cre_backend, parse_backend);
  s.boolean("drop_collinear", m.baseline.drop_collinear);
  read_gmm_options(s, m.gmm);
  s.boolean("skip_infeasible", m.skip_infeasible);
  s.boolean("keep_raw", m.keep_raw);
  s.boolean("fail_on_all_failed", m.fail_on_all_failed);
  bool parallel = m.policy == ExecPolicy::Parallel;
  s.boolean("parallel", parallel);
  m.policy = parallel ? ExecPolicy::Parallel : ExecPolicy::Serial;

  s.strings("nestedloop_order", o.nestedloop_order);
  s.strings("boxplot_grouping", o.boxplot_grouping);
  s.strings("coefs", o.coefs);
  s.num("abs_tol", o.tolerance.abs_tol);
  s.num("z", o.tolerance.z);
  s.boolean("strict", o.tolerance.strict);
  s.strings("reference_tables", o.reference_tables);
  s.num("min_pass_rate", o.min_pass_rate);
  s.finish();
}

json write_mc(const McConfig& m, const McOutputConfig& o) {
  json grid = {{"rho", m.grid.rho},       {"beta2", m.grid.beta2}, {"gamma1", m.grid.gamma1},
               {"gamma2", m.grid.gamma2}, {"gamma3", m.grid.gamma3}, {"N", m.grid.N},
               {"T", m.grid.T}};
  json g12 = json::array(), nt = json::array();
  for (const auto& [a, b] : m.grid.gamma12) g12.push_back({a, b});
  for (const auto& [a, b] : m.grid.NT) nt.push_back({a, b});
  grid["gamma12"] = g12;
  grid["NT"] = nt;
  json sbt = json::object();
  for (const auto& [T, S] : m.S_by_T) sbt[std::to_string(T)] = S;
  json j = {{"grid", grid},
            {"dgp", write_dgp(m.base)},
            {"reps", m.reps},
            {"estimators", m.estimators},
            {"base_seed", m.base_seed},
            {"S", m.S},
            {"S_by_T", sbt},
            {"x_role", exogeneity_name(m.x_role)},
            {"cre_backend", cre_backend_name(m.baseline.cre_backend)},
            {"drop_collinear", m.baseline.drop_collinear},
            {"skip_infeasible", m.skip_infeasible},
            {"keep_raw", m.keep_raw},
            {"fail_on_all_failed", m.fail_on_all_failed},
            {"parallel", m.policy == ExecPolicy::Parallel},
            {"nestedloop_order", o.nestedloop_order},
            {"boxplot_grouping", o.boxplot_grouping},
            {"coefs", o.coefs},
            {"abs_tol", o.tolerance.abs_tol},
            {"z", o.tolerance.z},
            {"strict", o.tolerance.strict},
            {"reference_tables", o.reference_tables},
            {"min_pass_rate", o.min_pass_rate}};
  write_gmm_options(j, m.gmm);
  return j;
}

void read_io(Section& s, IoConfig& io) {
  s.str("input", io.input);
  s.str("output_dir", io.output_dir);
  s.str("unit_col", io.unit_col);
  s.str("time_col", io.time_col);
  s.strings("formats", io.formats);
  s.str("reference", io.reference);
  s.boolean("keep_latents", io.keep_latents);
  s.finish();
}

json write_io(const IoConfig& io) {
  return {{"input", io.input},     {"output_dir", io.output_dir}, {"unit_col", io.unit_col},
          {"time_col", io.time_col}, {"formats", io.formats},     {"reference", io.reference},
          {"keep_latents", io.keep_latents}};
}

}  // namespace

void RunConfig::require_for(const std::string& cmd) const {
  if (cmd == "simulate") {
    if (!dgp) throw Error(ErrorKind::MissingSection, "simulate needs a dgp section");
  } else if (cmd == "estimate") {
    if (!model) throw Error(ErrorKind::MissingSection, "estimate needs a model section");
  } else if (cmd == "mc") {
    if (!mc) throw Error(ErrorKind::MissingSection, "mc needs an mc section");
  } else if (cmd != "decompose") {
    throw Error(ErrorKind::InvalidArgument, "unknown command '" + cmd + "'");
  }
}

RunConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::TypeMismatch, std::string("config is not valid JSON: ") + e.what());
  }
  Section top(doc, "config");
  RunConfig c;
  top.str("command", c.command);
  if (const json* j = top.get("dgp")) {
    Section s(*j, "dgp");
    c.dgp.emplace();
    read_dgp(s, *c.dgp);
    c.dgp->validate();
  }
  if (const json* j = top.get("model")) {
    Section s(*j, "model");
    c.model = read_model(s);
  }
  if (const json* j = top.get("estimate")) {
    Section s(*j, "estimate");
    c.estimate = read_estimate(s);
    c.estimate->gmm.validate();
  }
  if (const json* j = top.get("mc")) {
    Section s(*j, "mc");
    c.mc.emplace();
    read_mc(s, *c.mc, c.mc_output);
    c.mc->validate();
  }
  if (const json* j = top.get("io")) {
    Section s(*j, "io");
    read_io(s, c.io);
  }
  top.finish();
  if (!c.command.empty()) c.require_for(c.command);
  if (c.model && !c.estimate) c.estimate.emplace();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& c) {
  json j = json::object();
  if (!c.command.empty()) j["command"] = c.command;
  if (c.dgp) j["dgp"] = write_dgp(*c.dgp);
  if (c.model) j["model"] = write_model(*c.model);
  if (c.estimate) j["estimate"] = write_estimate(*c.estimate);
  if (c.mc) j["mc"] = write_mc(*c.mc, c.mc_output);
  j["io"] = write_io(c.io);
  return j.dump(2) + "\n";
}

}  // namespace cregmm
