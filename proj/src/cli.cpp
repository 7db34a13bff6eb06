#include "evkit/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <future>
#include <iostream>
#include <memory>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "evkit/detect.hpp"
#include "evkit/laplace.hpp"
#include "evkit/models.hpp"
#include "evkit/nested.hpp"
#include "evkit/thermal.hpp"
#include "evkit/varbayes.hpp"
#include "evkit/zoo.hpp"

namespace evkit {

namespace {

using nlohmann::json;

const std::vector<std::string> kEstimators = {"laplace", "importance", "ti",
                                              "ais",     "nested",     "vb"};

std::vector<double> resolved_snr(const RunConfig& cfg) {
  return cfg.snr_db.empty() ? default_snr_grid() : cfg.snr_db;
}

std::string resolved_format(const RunConfig& cfg) {
  if (!cfg.format.empty()) return cfg.format;
  return (cfg.command == "select-order" || cfg.command == "detect-sweep")
             ? "csv"
             : "json";
}

// Output sink: file when --out is given, stdout otherwise.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary | std::ios::trunc);
      if (!file_) throw std::runtime_error("cannot open output file " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

std::string csv_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Strided dispatch over a worker pool; index order of the results is
// canonical regardless of scheduling.
void parallel_for(int n, const std::function<void(int)>& body) {
  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  if (static_cast<int>(workers) > n) workers = static_cast<unsigned>(std::max(n, 1));
  std::vector<std::future<void>> futures;
  for (unsigned w = 0; w < workers; ++w)
    futures.push_back(std::async(std::launch::async, [&body, w, workers, n]() {
      for (int i = static_cast<int>(w); i < n; i += static_cast<int>(workers))
        body(i);
    }));
  for (auto& f : futures) f.get();
}

struct RepOutcome {
  bool ok = false;
  EvidenceEstimate estimate;
  std::string error;
};

EvidenceEstimate run_estimator(const RunConfig& cfg, const ZooEntry& entry,
                               std::uint64_t stream) {
  RngHandle rng(cfg.seed, stream);
  ScheduleShape shape = cfg.schedule_linear
                            ? ScheduleShape::linear()
                            : ScheduleShape::power(cfg.schedule_gamma);
  if (cfg.estimator == "laplace") {
    std::uint64_t evals = 0;
    ModelSpec counted = with_eval_counter(entry.spec, &evals);
    LaplaceResult r = laplace_log_evidence(counted, entry.laplace_start);
    EvidenceEstimate est;
    est.log_z = r.log_z;
    est.std_err = 0.0;
    est.n_likelihood_evals = evals;
    est.diagnostics["boundary_mode"] = r.boundary_mode ? 1.0 : 0.0;
    return est;
  }
  if (cfg.estimator == "importance")
    return importance_log_evidence(entry.spec, cfg.is_samples, rng);
  if (cfg.estimator == "ti") {
    TiConfig ti;
    ti.sweeps = cfg.ti_sweeps;
    return thermodynamic_integration(entry.spec,
                                     make_schedule(cfg.schedule_k, shape), ti,
                                     rng);
  }
  if (cfg.estimator == "ais") {
    AisConfig ais;
    ais.steps_per_rung = cfg.steps_per_rung;
    auto [est, run] = ais_log_evidence(
        entry.spec, make_schedule(cfg.schedule_k, shape), cfg.chains, ais, rng);
    AisTiContrast contrast = ais_ti_contrast(run);
    est.diagnostics["log_z_geom"] = contrast.log_z_geom;
    return est;
  }
  if (cfg.estimator == "nested") {
    NestedConfig ns;
    ns.n_live = cfg.n_live;
    ns.mcmc_steps = cfg.mcmc_steps;
    ns.termination_tol = cfg.ns_tol;
    NestedRun run = nested_sampling(entry.spec, ns, rng);
    if (!cfg.trace.empty() && stream == 0) {
      std::ofstream trace_out(cfg.trace, std::ios::binary | std::ios::trunc);
      if (!trace_out)
        throw std::runtime_error("cannot open trace file " + cfg.trace);
      write_run_csv(run, trace_out);
    }
    return to_estimate(run);
  }
  if (cfg.estimator == "vb") {
    if (!entry.supports_vb)
      throw std::invalid_argument("estimator vb requires model gauss-mean-prec");
    VbResult r = vb_lower_bound(entry.vb_data, entry.vb_hyper);
    EvidenceEstimate est;
    est.log_z = r.f_final;  // a lower bound, not an unbiased estimate
    est.std_err = 0.0;
    est.n_likelihood_evals = 0;  // closed-form coordinate updates
    est.diagnostics["lower_bound"] = 1.0;
    est.diagnostics["converged"] = r.converged ? 1.0 : 0.0;
    est.diagnostics["sweeps"] = r.sweeps;
    return est;
  }
  throw std::invalid_argument("unknown estimator '" + cfg.estimator + "'");
}

std::vector<RepOutcome> run_reps(const RunConfig& cfg, const ZooEntry& entry,
                                 std::uint64_t stream_base,
                                 std::uint64_t stream_stride) {
  std::vector<RepOutcome> outcomes(cfg.reps);
  parallel_for(cfg.reps, [&](int r) {
    try {
      outcomes[r].estimate = run_estimator(
          cfg, entry, stream_base + stream_stride * static_cast<std::uint64_t>(r));
      outcomes[r].ok = true;
    } catch (const std::exception& e) {
      outcomes[r].error = e.what();
    }
  });
  return outcomes;
}

json diagnostics_json(const EvidenceEstimate& est) {
  json d = json::object();
  for (const auto& [key, value] : est.diagnostics) d[key] = value;
  return d;
}

}  // namespace

std::vector<double> default_snr_grid() {
  std::vector<double> grid;
  for (int db = -6; db <= 7; ++db) grid.push_back(db);
  grid.push_back(10.0);
  grid.push_back(15.0);
  grid.push_back(20.0);
  return grid;
}

RunConfig parse_cli(const std::vector<std::string>& args,
                    std::string* config_dump) {
  RunConfig cfg;
  CLI::App app{"evkit: Bayesian evidence estimation and model comparison"};
  app.require_subcommand(1);
  app.set_config("--config", "", "config file mirroring the flags");

  auto add_common = [&cfg](CLI::App* sub) {
    sub->fallthrough();
    sub->add_option("--seed", cfg.seed, "base RNG seed (EVKIT_SEED overrides)")
        ->capture_default_str();
    sub->add_option("--reps", cfg.reps, "independent repetitions")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sub->add_option("--out", cfg.out, "output path (default stdout)");
    sub->add_option("--format", cfg.format, "json or csv")
        ->check(CLI::IsMember({"json", "csv"}));
  };
  auto add_estimator = [&cfg](CLI::App* sub) {
    sub->add_option("--estimator", cfg.estimator, "evidence estimator")
        ->check(CLI::IsMember(kEstimators))
        ->capture_default_str();
    sub->add_option("--n-live", cfg.n_live, "nested sampling live points")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sub->add_option("--mcmc-steps", cfg.mcmc_steps,
                    "constrained-walk steps per replacement")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sub->add_option("--ns-tol", cfg.ns_tol, "nested sampling termination tol")
        ->capture_default_str();
    sub->add_option("--schedule-k", cfg.schedule_k, "TI/AIS schedule rungs")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sub->add_option("--schedule-gamma", cfg.schedule_gamma,
                    "power-schedule exponent")
        ->capture_default_str();
    sub->add_flag("--schedule-linear", cfg.schedule_linear,
                  "linear schedule instead of power");
    sub->add_option("--chains", cfg.chains, "AIS chain count")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sub->add_option("--steps-per-rung", cfg.steps_per_rung, "AIS steps per rung")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sub->add_option("--ti-sweeps", cfg.ti_sweeps, "TI measurement sweeps per rung")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sub->add_option("--is-samples", cfg.is_samples, "importance sampling draws")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
  };
  auto model_check = [](const std::string& name) -> std::string {
    try {
      make_model(name);
    } catch (const std::exception& e) {
      return e.what();
    }
    return {};
  };

  CLI::App* evidence = app.add_subcommand("evidence", "estimate log Z of a model");
  evidence->add_option("--model", cfg.model, "model name from the zoo")
      ->check(CLI::Validator(model_check, "MODEL"))
      ->capture_default_str();
  evidence->add_option("--trace", cfg.trace,
                       "write the first nested run's (iteration, log_l, "
                       "log_x, partial_log_z) trace to this CSV");
  add_estimator(evidence);
  add_common(evidence);

  CLI::App* compare = app.add_subcommand("compare", "log odds ratio of two models");
  compare->add_option("--model", cfg.model, "first model")
      ->check(CLI::Validator(model_check, "MODEL"))
      ->capture_default_str();
  compare->add_option("--model2", cfg.model2, "second model")
      ->required()
      ->check(CLI::Validator(model_check, "MODEL"));
  add_estimator(compare);
  add_common(compare);

  CLI::App* order = app.add_subcommand(
      "select-order", "mixture model-order sweep with repeated nested runs");
  order->add_option("--k-min", cfg.k_min, "smallest order")
      ->check(CLI::Range(1, 4))
      ->capture_default_str();
  order->add_option("--k-max", cfg.k_max, "largest order")
      ->check(CLI::Range(1, 4))
      ->capture_default_str();
  order->add_option("--order-n", cfg.order_n, "synthetic dataset size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  order->add_option("--data-seed", cfg.data_seed, "dataset seed")
      ->capture_default_str();
  order->add_option("--truth-k", cfg.truth_k, "true mixture order of the data")
      ->check(CLI::Range(1, 4))
      ->capture_default_str();
  add_estimator(order);
  add_common(order);

  CLI::App* sweep = app.add_subcommand(
      "detect-sweep", "ROC/AUC of the detection filters across an SNR grid");
  sweep->add_option("--snr-db", cfg.snr_db,
                    "SNR points in dB (default: the 17-point grid)");
  sweep->add_option("--scores", cfg.scores,
                    "also write per-epoch scores and labels to this CSV");
  sweep->add_option("--n-epochs", cfg.n_epochs, "epochs per dataset")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sweep->add_option("--n-targets", cfg.n_targets, "target epochs per dataset")
      ->capture_default_str();
  sweep->add_option("--epoch-len", cfg.epoch_len, "samples per epoch")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  add_common(sweep);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested{app.help()};
  } catch (const CLI::ParseError& e) {
    throw std::invalid_argument(std::string("argument error: ") + e.what());
  }

  for (CLI::App* sub : {evidence, compare, order, sweep}) {
    if (sub->parsed()) cfg.command = sub->get_name();
  }
  if (config_dump != nullptr) *config_dump = app.config_to_str(false, false);

  if (const char* env_seed = std::getenv("EVKIT_SEED")) {
    cfg.seed = std::strtoull(env_seed, nullptr, 10);
  }
  if (cfg.k_min > cfg.k_max)
    throw std::invalid_argument("select-order: k-min must be <= k-max");
  return cfg;
}

int cmd_evidence(const RunConfig& cfg) {
  ZooEntry entry = make_model(cfg.model);
  std::vector<RepOutcome> outcomes = run_reps(cfg, entry, 0, 1);
  Output out(cfg.out);
  std::string format = resolved_format(cfg);
  bool any_error = false;
  if (format == "csv")
    out.stream() << "rep,model,estimator,seed,log_z,std_err,n_evals\n";
  for (int r = 0; r < cfg.reps; ++r) {
    const RepOutcome& o = outcomes[r];
    if (!o.ok) any_error = true;
    if (format == "json") {
      json rec;
      rec["command"] = "evidence";
      rec["model"] = entry.name;
      rec["estimator"] = cfg.estimator;
      rec["rep"] = r;
      rec["seed"] = cfg.seed;
      if (o.ok) {
        rec["log_z"] = o.estimate.log_z;
        rec["std_err"] = o.estimate.std_err;
        rec["n_evals"] = o.estimate.n_likelihood_evals;
        rec["diagnostics"] = diagnostics_json(o.estimate);
      } else {
        rec["error"] = o.error;
      }
      out.stream() << rec.dump() << "\n";
    } else {
      if (o.ok)
        out.stream() << r << "," << entry.name << "," << cfg.estimator << ","
                     << cfg.seed << "," << csv_num(o.estimate.log_z) << ","
                     << csv_num(o.estimate.std_err) << ","
                     << o.estimate.n_likelihood_evals << "\n";
      else
        out.stream() << r << "," << entry.name << "," << cfg.estimator << ","
                     << cfg.seed << ",error,error,0\n";
    }
  }
  return any_error ? 1 : 0;
}

int cmd_compare(const RunConfig& cfg) {
  if (cfg.model2.empty())
    throw std::invalid_argument("compare: needs --model2");
  ZooEntry first = make_model(cfg.model);
  ZooEntry second = make_model(cfg.model2);
  // Interleaved streams keep the two models' runs independent.
  std::vector<RepOutcome> a = run_reps(cfg, first, 0, 2);
  std::vector<RepOutcome> b = run_reps(cfg, second, 1, 2);
  Output out(cfg.out);
  bool any_error = false;
  for (int r = 0; r < cfg.reps; ++r) {
    json rec;
    rec["command"] = "compare";
    rec["model_1"] = first.name;
    rec["model_2"] = second.name;
    rec["estimator"] = cfg.estimator;
    rec["rep"] = r;
    rec["seed"] = cfg.seed;
    if (a[r].ok && b[r].ok) {
      LogOddsResult odds = make_log_odds(a[r].estimate, b[r].estimate);
      rec["log_or"] = odds.log_or;
      rec["std_err"] = odds.std_err;
      rec["log_z_1"] = odds.first.log_z;
      rec["std_err_1"] = odds.first.std_err;
      rec["log_z_2"] = odds.second.log_z;
      rec["std_err_2"] = odds.second.std_err;
    } else {
      any_error = true;
      rec["error"] = !a[r].ok ? a[r].error : b[r].error;
    }
    out.stream() << rec.dump() << "\n";
  }
  return any_error ? 1 : 0;
}

int cmd_select_order(const RunConfig& cfg) {
  std::vector<double> data = mixture_dataset(cfg.truth_k, cfg.order_n, cfg.data_seed);
  MixtureBoxes boxes = default_mixture_boxes(data);

  struct Row {
    int k = 0;
    int n_params = 0;
    double mean_log_z = 0.0;
    double std_log_z = 0.0;
    bool has_std = false;
  };
  std::vector<Row> rows;
  NestedConfig ns;
  ns.n_live = cfg.n_live;
  ns.mcmc_steps = cfg.mcmc_steps;
  ns.termination_tol = cfg.ns_tol;

  for (int k = cfg.k_min; k <= cfg.k_max; ++k) {
    ModelSpec spec = make_mixture_problem(k, data, boxes);
    std::uint64_t base_stream = static_cast<std::uint64_t>(k) * 1000;
    Row row;
    row.k = k;
    row.n_params = spec.dim;
    if (cfg.reps >= 2) {
      RepeatedRunsResult rr =
          repeated_runs(spec, ns, cfg.reps, cfg.seed, base_stream);
      row.mean_log_z = rr.mean_log_z;
      row.std_log_z = rr.sample_std;
      row.has_std = true;
    } else {
      RngHandle rng(cfg.seed, base_stream);
      row.mean_log_z = nested_sampling(spec, ns, rng).log_z;
    }
    rows.push_back(row);
  }

  Output out(cfg.out);
  std::string format = resolved_format(cfg);
  if (format == "csv") {
    out.stream() << "k,n_params,mean_log_z,std_log_z,reps\n";
    for (const Row& row : rows) {
      out.stream() << row.k << "," << row.n_params << ","
                   << csv_num(row.mean_log_z) << ","
                   << (row.has_std ? csv_num(row.std_log_z) : std::string())
                   << "," << cfg.reps << "\n";
    }
  } else {
    for (const Row& row : rows) {
      json rec;
      rec["command"] = "select-order";
      rec["k"] = row.k;
      rec["n_params"] = row.n_params;
      rec["mean_log_z"] = row.mean_log_z;
      if (row.has_std)
        rec["std_log_z"] = row.std_log_z;
      else
        rec["std_log_z"] = nullptr;
      rec["reps"] = cfg.reps;
      rec["seed"] = cfg.seed;
      out.stream() << rec.dump() << "\n";
    }
  }
  return 0;
}

int cmd_detect_sweep(const RunConfig& cfg) {
  DetectionProblem base;
  base.channels = 3;
  base.window_len = 60;
  base.template_s = make_biphasic_template(base.window_len);
  base.couplings = {1.0, 0.7, 0.4};
  base.sigma_n = 1.0;
  NoiseSpec noise;

  std::vector<double> grid = resolved_snr(cfg);
  struct Row {
    double snr_db = 0.0;
    double auc_corr = 0.0, auc_plus = 0.0, auc_pm = 0.0;
    EpochScores corr, plus, pm;
  };
  std::vector<Row> rows(grid.size());

  parallel_for(static_cast<int>(grid.size()), [&](int i) {
    DetectionProblem p = base;
    double alpha = amplitude_for_snr(grid[i], p);
    p.alpha_hat = alpha;          // prior centered on the generated amplitude
    p.sigma_alpha = 0.5 * alpha;  // half of it as prior spread
    RngHandle rng(cfg.seed, 100 + static_cast<std::uint64_t>(i));
    Dataset data = synth_dataset(rng, grid[i], cfg.n_epochs, cfg.n_targets,
                                 cfg.epoch_len, p, noise);
    rows[i].snr_db = grid[i];
    rows[i].corr = score_epochs(data, p, DetectionMethod::Correlation);
    rows[i].plus = score_epochs(data, p, DetectionMethod::LogOrPlus);
    rows[i].pm = score_epochs(data, p, DetectionMethod::LogOrPm);
    rows[i].auc_corr = roc_curve(rows[i].corr).auc;
    rows[i].auc_plus = roc_curve(rows[i].plus).auc;
    rows[i].auc_pm = roc_curve(rows[i].pm).auc;
  });

  if (!cfg.scores.empty()) {
    std::ofstream scores_out(cfg.scores, std::ios::binary | std::ios::trunc);
    if (!scores_out)
      throw std::runtime_error("cannot open scores file " + cfg.scores);
    for (std::size_t i = 0; i < rows.size(); ++i)
      write_scores_csv(rows[i].snr_db, rows[i].corr, rows[i].plus, rows[i].pm,
                       scores_out, i == 0);
  }

  Output out(cfg.out);
  std::string format = resolved_format(cfg);
  if (format == "csv") {
    out.stream() << "snr_db,auc_corr,auc_or_plus,auc_or_pm\n";
    for (const Row& row : rows)
      out.stream() << csv_num(row.snr_db) << "," << csv_num(row.auc_corr) << ","
                   << csv_num(row.auc_plus) << "," << csv_num(row.auc_pm)
                   << "\n";
  } else {
    for (const Row& row : rows) {
      json rec;
      rec["command"] = "detect-sweep";
      rec["snr_db"] = row.snr_db;
      rec["auc_corr"] = row.auc_corr;
      rec["auc_or_plus"] = row.auc_plus;
      rec["auc_or_pm"] = row.auc_pm;
      rec["seed"] = cfg.seed;
      out.stream() << rec.dump() << "\n";
    }
  }
  return 0;
}

int run_command(const RunConfig& cfg) {
  if (cfg.command == "evidence") return cmd_evidence(cfg);
  if (cfg.command == "compare") return cmd_compare(cfg);
  if (cfg.command == "select-order") return cmd_select_order(cfg);
  if (cfg.command == "detect-sweep") return cmd_detect_sweep(cfg);
  throw std::invalid_argument("unknown command '" + cfg.command + "'");
}

int cli_main(const std::vector<std::string>& args) {
  try {
    RunConfig cfg = parse_cli(args);
    return run_command(cfg);
  } catch (const HelpRequested& help) {
    std::cout << help.text;
    return 0;
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int cli_main(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return cli_main(args);
}

}  // namespace evkit
