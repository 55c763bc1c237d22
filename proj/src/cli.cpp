#include "cregmm/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "cregmm/baseline.hpp"
#include "cregmm/csv_io.hpp"
#include "cregmm/errors.hpp"
#include "cregmm/format.hpp"
#include "cregmm/gmm.hpp"
#include "cregmm/mc.hpp"
#include "cregmm/report.hpp"

namespace cregmm {

namespace fs = std::filesystem;

namespace {

std::string out_dir(const RunConfig& c, const CliOverrides& o) {
  const std::string d = o.output_dir.empty() ? c.io.output_dir : o.output_dir;
  std::error_code ec;
  fs::create_directories(d, ec);
  if (ec) throw Error(ErrorKind::IoFailure, "cannot create " + d + ": " + ec.message());
  return d;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw Error(ErrorKind::IoFailure, "cannot open " + p.string() + " for writing");
  return f;
}

PanelDataset load_panel(const RunConfig& c, const CliOverrides& o) {
  const std::string path = o.data.empty() ? c.io.input : o.data;
  if (path.empty()) throw Error(ErrorKind::MissingSection, "no input panel (use --data or io.input)");
  return read_panel_csv(path, PanelCsvSchema{c.io.unit_col, c.io.time_col});
}

int do_simulate(const RunConfig& c, const CliOverrides& o, std::ostream& out) {
  const DgpConfig& d = *c.dgp;
  const bool latents = o.keep_latents || c.io.keep_latents;
  const PanelDataset p = simulate_panel(d, latents);
  const fs::path path = fs::path(out_dir(c, o)) / "panel.csv";
  auto f = open_out(path);
  write_panel_csv(f, p, latents, PanelCsvSchema{c.io.unit_col, c.io.time_col});
  const CalibratedSigmas cs = calibrate_variances(d);
  out << "wrote " << path.string() << " (" << p.n_units() << " units x " << p.n_periods() << " periods)\n"
      << "sigma_eps " << format_fixed(cs.sigma_eps) << ", sigma_xi " << format_fixed(cs.sigma_xi) << ", V(x) "
      << format_fixed(cs.implied_Vx) << ", V(e) " << format_fixed(cs.implied_Ve) << '\n';
  return 0;
}

int do_estimate(const RunConfig& c, const CliOverrides& o, std::ostream& out) {
  const PanelDataset p = load_panel(c, o);
  const EstimateConfig e = c.estimate.value_or(EstimateConfig{});
  std::vector<EstimationResult> results;
  for (const auto& name : e.estimators) results.push_back(run_estimator(p, *c.model, name, e));
  const std::string dir = out_dir(c, o);
  for (const auto& fmt : c.io.formats) {
    const ResultFormat f = parse_result_format(fmt);
    const fs::path path = fs::path(dir) / (f == ResultFormat::TableCsv ? "results.csv" : "results.txt");
    write_results(path.string(), results, f);
  }
  write_results(out, results, ResultFormat::SummaryText);
  if (!e.decompose.empty()) {
    auto f = open_out(fs::path(dir) / "decomposition.txt");
    for (const auto& v : e.decompose) {
      const DecompositionReport d =
          c.model->presample_end ? variance_decomposition(p, v, *c.model->presample_end + 1, p.last_period())
                                 : variance_decomposition(p, v);
      write_decomposition(f, v, d);
      write_decomposition(out, v, d);
    }
  }
  return 0;
}

int do_mc(const RunConfig& c, const CliOverrides& o, std::ostream& out, std::ostream& err) {
  McConfig m = *c.mc;
  if (o.full) m.reps = 1000;
  const McOutputConfig& mo = c.mc_output;
  const McSummary s = run_grid(m);
  for (const auto& sk : s.skipped) err << "skipped " << sk.scenario.id() << ": " << sk.reason << '\n';
  const fs::path dir = out_dir(c, o);
  {
    auto f = open_out(dir / "summary.csv");
    write_summary_csv(f, s);
  }
  if (!mo.nestedloop_order.empty())
    for (const auto& coef : mo.coefs) {
      auto f = open_out(dir / ("nestedloop_" + coef + ".csv"));
      export_nestedloop(f, s, mo.nestedloop_order, coef);
    }
  if (s.raw_retained)
    for (const auto& coef : mo.coefs) {
      auto f = open_out(dir / ("boxplot_" + coef + ".csv"));
      export_boxplot(f, s, mo.boxplot_grouping, coef);
    }
  out << "ran " << s.scenarios.size() << " scenarios x " << m.reps << " reps (" << s.skipped.size()
      << " skipped); wrote " << (dir / "summary.csv").string() << '\n';

  const std::string ref = o.reference.empty() ? c.io.reference : o.reference;
  if (ref.empty()) return 0;
  std::vector<ReferenceRow> rows = read_reference_csv(ref);
  if (!mo.reference_tables.empty())
    std::erase_if(rows, [&](const ReferenceRow& r) {
      return std::find(mo.reference_tables.begin(), mo.reference_tables.end(), r.table) == mo.reference_tables.end();
    });
  const ComparisonReport rep = compare_to_reference(s, rows, mo.tolerance);
  {
    auto f = open_out(dir / "comparison.csv");
    write_comparison_csv(f, s, rep);
  }
  const double rate = rep.pass_rate();
  const bool pass = rate >= mo.min_pass_rate;
  out << "reference comparison: " << rep.passed() << "/" << rep.rows.size() << " rows pass ("
      << format_fixed(100 * rate, 1) << "%, " << rep.unmatched << " unmatched), required "
      << format_fixed(100 * mo.min_pass_rate, 1) << "%: " << (pass ? "PASS" : "FAIL") << '\n';
  return pass ? 0 : 1;
}

int do_decompose(const RunConfig& c, const CliOverrides& o, std::ostream& out) {
  const PanelDataset p = load_panel(c, o);
  const DecompositionReport d = o.presample_end ? variance_decomposition(p, o.var, *o.presample_end + 1, p.last_period())
                                                : variance_decomposition(p, o.var);
  write_decomposition(out, o.var, d);
  return 0;
}

}  // namespace

EstimationResult run_estimator(const PanelDataset& panel, const ModelSpec& spec, const std::string& name,
                               const EstimateConfig& cfg) {
  if (name == "POLS") return pols(panel, spec, cfg.baseline);
  if (name == "RE") return re_fgls(panel, spec, cfg.baseline);
  if (name == "FE") return fe_within(panel, spec, cfg.baseline);
  if (name == "CRE1") return cre(panel, spec, CreVariant::CRE1, cfg.cre_means, cfg.baseline);
  if (name == "CRE2") return cre(panel, spec, CreVariant::CRE2, cfg.cre_means, cfg.baseline);
  return estimate_variant(panel, spec, parse_variant(name), cfg.gmm);
}

int cmd_dispatch(const RunConfig& config, const CliOverrides& over, std::ostream& out, std::ostream& err) {
  try {
    config.require_for(config.command);
    if (config.command == "simulate") return do_simulate(config, over, out);
    if (config.command == "estimate") return do_estimate(config, over, out);
    if (config.command == "mc") return do_mc(config, over, out, err);
    return do_decompose(config, over, out);
  } catch (const Error& e) {
    err << "error [" << kind_module(e.kind()) << "] " << e.what() << '\n';
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
  }
  return 1;
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Correlated random effects GMM for dynamic panels"};
  app.require_subcommand(1);
  std::string config_path;
  CliOverrides o;

  auto* sim = app.add_subcommand("simulate", "simulate a panel from the dgp section");
  sim->add_option("--config", config_path, "JSON config")->required();
  sim->add_flag("--keep-latents", o.keep_latents, "also write mu, eps and e");
  sim->add_option("--out", o.output_dir, "output directory");

  auto* est = app.add_subcommand("estimate", "estimate the model section on a panel CSV");
  est->add_option("--config", config_path, "JSON config")->required();
  est->add_option("--data", o.data, "panel CSV");
  est->add_option("--out", o.output_dir, "output directory");

  auto* mc = app.add_subcommand("mc", "run a Monte Carlo grid");
  mc->add_option("--config", config_path, "JSON config")->required();
  mc->add_flag("--full", o.full, "1000 replications");
  mc->add_option("--reference", o.reference, "reference table CSV");
  mc->add_option("--out", o.output_dir, "output directory");

  auto* dec = app.add_subcommand("decompose", "between/within variance decomposition");
  dec->add_option("--config", config_path, "JSON config (io section only)");
  dec->add_option("--data", o.data, "panel CSV")->required();
  dec->add_option("--var", o.var, "variable")->required();
  std::int64_t S = 0;
  auto* ps = dec->add_option("--presample-end", S, "decompose periods after S");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }
  if (ps->count()) o.presample_end = S;

  RunConfig cfg;
  try {
    if (!config_path.empty()) cfg = load_config(config_path);
  } catch (const Error& e) {
    err << "error [" << kind_module(e.kind()) << "] " << e.what() << '\n';
    return 1;
  }
  cfg.command = app.get_subcommands().front()->get_name();
  return cmd_dispatch(cfg, o, out, err);
}

}  // namespace cregmm
