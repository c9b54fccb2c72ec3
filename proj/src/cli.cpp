#include "didint/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <ostream>
#include <sstream>

#include "didint/dataset_io.hpp"
#include "didint/dgp_config.hpp"
#include "didint/estimator_spec.hpp"
#include "didint/inference.hpp"
#include "didint/report_io.hpp"
#include "didint/selection.hpp"
#include "didint/simulation.hpp"

namespace didint::cli {
namespace {

namespace fs = std::filesystem;

struct DataArgs {
  std::string path;
  std::string schedule;
  std::string group = "group";
  std::string time = "time";
  std::string outcome = "outcome";
  std::string covariates;
  std::string treatment;
  std::string unit;

  void attach(CLI::App* cmd) {
    cmd->add_option("data", path, "Input CSV")->required();
    cmd->add_option("--schedule", schedule, "Sidecar CSV with columns group,first_treated");
    cmd->add_option("--group-col", group, "Group column")->capture_default_str();
    cmd->add_option("--time-col", time, "Period column")->capture_default_str();
    cmd->add_option("--outcome-col", outcome, "Outcome column")->capture_default_str();
    cmd->add_option("--covariates", covariates, "Comma-separated covariate columns");
    cmd->add_option("--treatment-col", treatment, "Per-row first treatment period column");
    cmd->add_option("--unit-col", unit, "Unit id column (panel data)");
  }

  PanelDataset load() const {
    CsvSchema schema;
    schema.group = group;
    schema.time = time;
    schema.outcome = outcome;
    std::stringstream ss(covariates);
    std::string c;
    while (std::getline(ss, c, ',')) {
      if (!c.empty()) schema.covariates.push_back(c);
    }
    if (!treatment.empty()) schema.treatment = treatment;
    if (!unit.empty()) schema.unit = unit;
    if (!schedule.empty()) schema.schedule_file = schedule;
    return load_csv(path, schema);
  }
};

struct DgpArgs {
  std::string spec_path;
  std::string design = "staggered";

  void attach(CLI::App* cmd) {
    cmd->add_option("--spec", spec_path, "DGP config file");
    cmd->add_option("--design", design, "Built-in design when --spec is absent: staggered or pseudo-survey")
        ->check(CLI::IsMember({"staggered", "pseudo-survey"}))
        ->capture_default_str();
  }

  DgpSpec load() const {
    if (!spec_path.empty()) return load_dgp_config(spec_path);
    return design == "staggered" ? staggered_design() : pseudo_survey_design();
  }
};

fs::path prepare_out(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ValidationError("cannot create output directory " + dir + ": " + ec.message());
  return fs::path(dir);
}

std::string file_token(const std::string& name) {
  std::string out;
  for (char c : name) out += std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ? c : '_';
  return out;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Difference-in-differences with intersection covariate interactions"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "didint 0.1.0");

  std::string out_dir = ".";

  // estimate
  auto* est = app.add_subcommand("estimate", "Estimate the ATT and write report.json and cells.csv");
  DataArgs est_data;
  est_data.attach(est);
  std::string estimator = "didint";
  std::string form;
  std::string adjustment;
  std::string weights;
  std::string combine;
  bool leads = false;
  bool jackknife = false;
  bool ri = false;
  std::size_t nperm = 999;
  std::uint64_t seed = 1;
  est->add_option("--estimator", estimator,
                  "didint, twfe, twfe-mod, csdid, imputation, flex, or a full token such as didint-two-way")
      ->capture_default_str();
  est->add_option("--form", form, "Covariate form: none, homogeneous, state-varying, time-varying, two-way, two-one-way");
  est->add_option("--adjustment", adjustment, "CS-DID adjustment: none, or, ipw, dr");
  est->add_option("--weights", weights, "Aggregation weights: cell-size or equal");
  est->add_option("--combine", combine, "DID-INT control combination: mean or cell-size");
  est->add_flag("--leads", leads, "FLEX with pre-treatment lead terms");
  est->add_flag("--jackknife", jackknife, "Delete-one-group jackknife standard error");
  est->add_flag("--ri", ri, "Randomization inference over treatment timing");
  est->add_option("--nperm", nperm, "Randomization draws")->capture_default_str();
  est->add_option("--seed", seed, "Seed for randomization inference")->capture_default_str();
  est->add_option("--out", out_dir, "Output directory")->capture_default_str();

  // select
  auto* sel = app.add_subcommand("select", "Run the covariate-form selection ladder");
  DataArgs sel_data;
  sel_data.attach(sel);
  double alpha = 0.10;
  bool no_two_one_way = false;
  std::string pretrend_cov = "hc1";
  sel->add_option("--alpha", alpha, "Pre-trend test level")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  sel->add_flag("--no-two-one-way", no_two_one_way, "Skip the two-one-way rung");
  sel->add_option("--pretrend-cov", pretrend_cov, "Covariance for the pre-trend Wald test: hc1 or jackknife")
      ->check(CLI::IsMember({"hc1", "jackknife"}))
      ->capture_default_str();
  sel->add_option("--out", out_dir, "Output directory")->capture_default_str();

  // simulate
  auto* sim = app.add_subcommand("simulate", "Monte Carlo study over a DGP");
  DgpArgs sim_dgp;
  sim_dgp.attach(sim);
  std::size_t reps = 200;
  std::string estimators = "twfe,twfe-mod,didint-two-way";
  std::uint64_t sim_seed = 1;
  std::size_t threads = 0;
  std::size_t kde_points = 256;
  std::string sweep;
  sim->add_option("--reps", reps, "Replicates")->check(CLI::PositiveNumber)->capture_default_str();
  sim->add_option("--estimators", estimators, "Comma-separated estimator tokens")->capture_default_str();
  sim->add_option("--seed", sim_seed, "Master seed")->capture_default_str();
  sim->add_option("--threads", threads, "Worker threads (0: DIDINT_THREADS or hardware)");
  sim->add_option("--kde-points", kde_points, "KDE grid size")->capture_default_str();
  sim->add_option("--degree-sweep", sweep, "Violation type for a degree sweep: state, time, two-way or none")
      ->check(CLI::IsMember({"state", "time", "two-way", "none"}));
  sim->add_option("--out", out_dir, "Output directory")->capture_default_str();

  // generate
  auto* gen = app.add_subcommand("generate", "Draw one dataset from a DGP");
  DgpArgs gen_dgp;
  gen_dgp.attach(gen);
  std::uint64_t gen_seed = 1;
  bool dump_spec = false;
  gen->add_option("--seed", gen_seed, "Seed")->capture_default_str();
  gen->add_flag("--dump-spec", dump_spec, "Also write the DGP as spec.cfg");
  gen->add_option("--out", out_dir, "Output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*est) {
      const auto data = est_data.load();
      auto spec = EstimatorSpec::parse(estimator);
      if (!form.empty()) spec.form = parse_form(form);
      if (!adjustment.empty()) {
        if (spec.kind != EstimatorKind::Csdid) throw ValidationError("--adjustment applies to csdid only");
        spec.adjustment = parse_adjustment(adjustment);
      }
      if (!weights.empty()) spec.weighting = parse_weighting(weights);
      if (!combine.empty()) {
        if (combine == "mean") {
          spec.combination = ControlCombination::Mean;
        } else if (combine == "cell-size") {
          spec.combination = ControlCombination::CellSizeWeighted;
        } else {
          throw ValidationError("unknown --combine '" + combine + "' (expected mean or cell-size)");
        }
      }
      if (leads) spec.leads = true;
      auto report = spec.run(data);
      Json inference = Json::array();
      if (jackknife) {
        auto jk = cluster_jackknife(data, spec);
        report.se = jk.se_jackknife;
        inference.push_back(to_json(jk));
      }
      if (ri) {
        auto r = randomization_inference(data, spec, nperm, seed);
        report.p_randomization = r.p_randomization;
        inference.push_back(to_json(r));
      }
      const auto dir = prepare_out(out_dir);
      Json j = to_json(report);
      j["data"] = {{"rows", data.size()},
                   {"groups", data.num_groups()},
                   {"periods", data.num_periods()},
                   {"covariates", data.covariate_names()},
                   {"panel", data.is_panel()}};
      j["inference"] = inference;
      write_text((dir / "report.json").string(), dump(j));
      write_text((dir / "cells.csv").string(), cells_csv(report));
      out << report.estimator_name << " overall_att = " << format_double(report.overall_att);
      if (report.se) out << " (jackknife se " << format_double(*report.se) << ")";
      if (report.p_randomization) out << " (randomization p " << format_double(*report.p_randomization) << ")";
      out << "\n";
    } else if (*sel) {
      const auto data = sel_data.load();
      SelectionOptions options;
      options.alpha = alpha;
      options.include_two_one_way = !no_two_one_way;
      options.pretrend.covariance = pretrend_cov == "hc1" ? PretrendCovariance::Hc1 : PretrendCovariance::Jackknife;
      const auto trace = select_form(data, options);
      const auto dir = prepare_out(out_dir);
      write_text((dir / "selection.json").string(), dump(to_json(trace)));
      for (const auto& step : trace.steps) {
        export_trends(data, step.form, (dir / ("trends_" + to_string(step.form))).string());
      }
      for (const auto& w : trace.warnings) err << "warning: " << w << "\n";
      out << (trace.chosen ? to_string(*trace.chosen) : "no plausible pre-trends") << "\n";
    } else if (*sim) {
      const auto dgp = sim_dgp.load();
      const auto ests = parse_estimator_list(estimators);
      McOptions options;
      options.threads = threads;
      options.kde_points = kde_points;
      const auto dir = prepare_out(out_dir);
      const auto mc = run_mc(dgp, ests, reps, sim_seed, options);
      write_text((dir / "mc.json").string(), dump(to_json(mc)));
      for (const auto& e : mc.estimators) {
        write_text((dir / ("kde_" + file_token(e.name) + ".csv")).string(), kde_csv(e));
      }
      write_text((dir / "density.svg").string(), density_svg(mc));
      for (const auto& e : mc.estimators) {
        out << e.name << ": mean " << format_double(e.mean) << ", mc_se " << format_double(e.mc_se) << ", |bias| "
            << format_double(e.abs_bias) << "\n";
      }
      if (!sweep.empty()) {
        const auto rows = degree_sweep(dgp, parse_violation(sweep), ests, reps, sim_seed, options);
        write_text((dir / "bias_table.csv").string(), bias_table_csv(rows));
        out << "degree sweep (" << sweep << ") written to " << (dir / "bias_table.csv").string() << "\n";
      }
    } else if (*gen) {
      const auto dgp = gen_dgp.load();
      const auto data = generate(dgp, gen_seed);
      const auto dir = prepare_out(out_dir);
      write_csv(data, (dir / "data.csv").string());
      write_schedule_csv(data.schedule(), (dir / "schedule.csv").string());
      if (dump_spec) save_dgp_config(dgp, (dir / "spec.cfg").string());
      out << data.size() << " rows written to " << (dir / "data.csv").string() << "\n";
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const EstimationError& e) {
    err << "estimation failed: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "estimation failed: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

}  // namespace didint::cli
