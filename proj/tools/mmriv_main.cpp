// Command-line front end: data generation, fitting, prediction,
// hyperparameter selection, benchmarks, the Mendelian sweep, diagnostics
// and plot-data export. Exit codes: 0 success, 1 configuration/input
// error, 2 numerical failure.

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <nlohmann/json.hpp>

#include "mmriv/diagnostics.hpp"
#include "mmriv/harness.hpp"
#include "mmriv/io.hpp"

using namespace mmriv;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitNumerical = 2;

struct GenerateArgs {
  std::string scenario = "sin";
  int n = 2000;
  std::uint64_t seed = 527;
  std::string out = "data.csv";
  int d_prime = 16;
  double beta = 1.0, c1 = 1.0, c2 = 1.0;
};

void cmd_generate(const GenerateArgs& a) {
  Dataset data;
  if (a.scenario == "mendelian") {
    MendelianSpec spec;
    spec.d_prime = a.d_prime;
    spec.beta = a.beta;
    spec.c1 = a.c1;
    spec.c2 = a.c2;
    spec.n = a.n;
    spec.seed = a.seed;
    data = gen_mendelian(spec);
  } else {
    data = gen_low_dim({true_function_from_name(a.scenario), a.n, a.seed});
  }
  write_dataset_csv(data, a.out);
  std::cout << "wrote " << data.n() << " rows to " << a.out << "\n";
}

struct FitArgs {
  std::string data_path;
  std::string method = "mmr_rkhs";  // mmr_rkhs | mmr_nystrom
  std::string kernel_k = R"({"family":"sum_gaussians","mode":"median"})";
  std::string kernel_l;  // empty -> select sigma_l by LMOCV
  double lambda = 0.0;   // <= 0 -> select by LMOCV
  int nystrom_m = 300;
  int nystrom_draws = 10;
  std::uint64_t seed = 527;
  int leave_out = 10;
  std::string plan = "clustered";  // clustered | random
  std::string out = "model.json";
};

CvPlan plan_for(const std::string& kind, const Matrix& z, int M, std::uint64_t seed) {
  if (kind == "clustered") return make_clustered_cv_plan(z, M);
  if (kind == "random") return make_cv_plan(static_cast<int>(z.rows()), M, seed);
  throw InputError("plan must be clustered or random");
}

void cmd_fit(const FitArgs& a) {
  const Dataset data = read_dataset_csv(a.data_path);
  const bool nystrom = a.method == "mmr_nystrom";
  if (!nystrom && a.method != "mmr_rkhs") {
    throw InputError("fit: method must be mmr_rkhs or mmr_nystrom");
  }
  const KernelSpec k = kernel_from_json(json::parse(a.kernel_k), data.z);
  const GramMatrix K_z = gram(k, data.z, "z");
  const int n = data.n();

  double lambda = a.lambda;
  KernelSpec l = a.kernel_l.empty() ? KernelSpec::gaussian(median_heuristic(data.x))
                                    : kernel_from_json(json::parse(a.kernel_l), data.x);
  if (a.lambda <= 0.0 || a.kernel_l.empty()) {
    const CvPlan plan = plan_for(a.plan, data.z, a.leave_out, substream(a.seed, 1));
    const auto l_family = [](double s) { return KernelSpec::gaussian(s); };
    const std::vector<double> sigma_grid = default_sigma_l_grid(data.x);
    SelectionResult sel = [&] {
      if (nystrom) {
        const NystromFactors f = nystrom_factors(K_z, std::min(a.nystrom_m, n), substream(a.seed, 2));
        return select_hyperparams(K_z, data.x, data.y, l_family, default_delta_grid(n),
                                  sigma_grid, plan, &f);
      }
      return select_hyperparams(K_z, data.x, data.y, l_family, default_delta_grid(n),
                                sigma_grid, plan, nullptr);
    }();
    lambda = 1.0 / (sel.best_delta * static_cast<double>(n) * n);
    l = sel.best_l;
    std::cout << "selected lambda=" << lambda << " sigma_l=" << sel.best_l_param << "\n";
  }

  const GramMatrix L = gram(l, data.x, "x");
  const RkhsModel model =
      nystrom ? fit_nystrom_with(nystrom_factors(K_z, std::min(a.nystrom_m, n), substream(a.seed, 3)),
                                 L.values, data.y, data.x, l, lambda)
              : fit_rkhs_with(L.values, weight_v(K_z), data.y, data.x, l, lambda);
  save_model(model, a.out);
  std::cout << "wrote model (n=" << n << ", lambda=" << lambda << ") to " << a.out << "\n";
}

void cmd_predict(const std::string& model_path, const std::string& data_path,
                 const std::string& out) {
  const RkhsModel model = load_model(model_path);
  const Dataset data = read_dataset_csv(data_path);
  const Vector pred = predict(model, data.x);
  std::ostringstream os;
  os << "prediction\n";
  for (Eigen::Index i = 0; i < pred.size(); ++i) os << format_double(pred[i]) << "\n";
  write_text_file(out, os.str());
  std::cout << "wrote " << pred.size() << " predictions to " << out << "\n";
}

struct SelectArgs {
  std::string data_path;
  bool nystrom = false;
  int nystrom_m = 300;
  int leave_out = 10;
  std::string plan = "clustered";
  std::uint64_t seed = 527;
  std::string out = "cv_table.csv";
};

void cmd_select(const SelectArgs& a) {
  const Dataset data = read_dataset_csv(a.data_path);
  const int n = data.n();
  const KernelSpec k = sum_gaussians_from_median(data.z);
  const CvPlan plan = plan_for(a.plan, data.z, a.leave_out, substream(a.seed, 1));
  const auto l_family = [](double s) { return KernelSpec::gaussian(s); };
  const SelectionResult sel =
      select_hyperparams(data, k, l_family, default_delta_grid(n), default_sigma_l_grid(data.x),
                         plan, a.nystrom ? std::min(a.nystrom_m, n) : 0, substream(a.seed, 2));
  std::ostringstream os;
  os << "delta,sigma_l,cv_error,status\n";
  for (const auto& e : sel.table) {
    std::string status = e.status;
    for (char& ch : status) {
      if (ch == ',') ch = ';';
    }
    os << format_double(e.delta) << "," << format_double(e.l_param) << ","
       << format_double(e.cv_error) << "," << status << "\n";
  }
  write_text_file(a.out, os.str());
  std::cout << "best delta=" << sel.best_delta << " sigma_l=" << sel.best_l_param
            << " (lambda=" << 1.0 / (sel.best_delta * static_cast<double>(n) * n) << ")\n"
            << "wrote " << sel.table.size() << " grid rows to " << a.out << "\n";
}

int write_benchmark_outputs(const BenchmarkResult& result, const ExperimentConfig& config,
                            const json& resolved) {
  namespace fs = std::filesystem;
  fs::create_directories(config.output_dir);
  const std::string base = config.output_dir + "/";
  write_text_file(base + "results.csv", records_to_csv(result.records));
  write_text_file(base + "summary.csv", summary_to_csv(result.summary));
  write_text_file(base + "config_resolved.json", resolved.dump(2) + "\n");
  std::cout << summary_to_csv(result.summary);
  std::cout << "wrote results to " << base << "results.csv\n";
  bool any_ok = false;
  for (const auto& r : result.records) {
    if (!r.failed()) any_ok = true;
  }
  return any_ok ? kExitOk : kExitNumerical;
}

int cmd_benchmark(const std::string& config_path, const std::string& out_dir) {
  json j;
  try {
    j = json::parse(read_text_file(config_path));
  } catch (const json::exception& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  ExperimentConfig config = config_from_json(j);
  if (!out_dir.empty()) config.output_dir = out_dir;
  const BenchmarkResult result = run_benchmark(config);
  return write_benchmark_outputs(result, config, config_to_json(config));
}

int cmd_mendelian(const std::string& config_path, const std::string& sweep,
                  const std::string& out_dir) {
  json j;
  try {
    j = json::parse(read_text_file(config_path));
  } catch (const json::exception& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  ExperimentConfig config = config_from_json(j);
  if (!std::holds_alternative<MendelianScenario>(config.scenario)) {
    config.scenario = MendelianScenario{};
  }
  if (!out_dir.empty()) config.output_dir = out_dir;
  const BenchmarkResult result = run_mendelian_sweep(config, sweep_from_name(sweep));
  return write_benchmark_outputs(result, config, config_to_json(config));
}

struct DiagnoseArgs {
  std::string check = "wu";  // consistency | normality | wu | identification
  int n = 2000;
  int replications = 500;
  std::uint64_t seed = 527;
  std::string scenario = "sin";
  std::string out_dir = ".";
};

int cmd_diagnose(const DiagnoseArgs& a) {
  namespace fs = std::filesystem;
  fs::create_directories(a.out_dir);
  json report;
  std::string table_csv;

  if (a.check == "consistency") {
    ExperimentConfig config;
    config.scenario = LowDimScenario{true_function_from_name(a.scenario)};
    const Fitter fitter = [&config](const Dataset& train, const Dataset& validation,
                                    const Dataset& test, std::uint64_t seed) {
      Dataset tr = train, val = validation, te = test;
      standardize_y(tr, {&val, &te});
      return fit_and_score(Method::MmrNystrom, config, tr, val, te, seed, nullptr, nullptr);
    };
    std::vector<std::uint64_t> seeds;
    for (int s = 0; s < 5; ++s) seeds.push_back(substream(a.seed, s));
    const auto rows = consistency_sweep(true_function_from_name(a.scenario), fitter,
                                        {200, 500, 1000, 2000}, seeds);
    std::ostringstream os;
    os << "n,median_mse,failures\n";
    json jrows = json::array();
    for (const auto& r : rows) {
      os << r.n << "," << format_double(r.median_mse) << "," << r.failures << "\n";
      jrows.push_back({{"n", r.n}, {"median_mse", r.median_mse}, {"failures", r.failures}});
    }
    table_csv = os.str();
    report["check"] = "consistency";
    report["rows"] = jrows;
    report["verdict"] = rows.back().median_mse <= rows.front().median_mse * 1.2 ? "PASS" : "WARN";
  } else if (a.check == "normality") {
    const NormalityReport rep = asymptotic_normality_check(a.n, a.replications, a.seed);
    const NormalityReport self = normality_self_test(a.replications, substream(a.seed, 999));
    report["check"] = "normality";
    report["n"] = a.n;
    report["replications"] = rep.replications;
    report["failed_replications"] = rep.failed_replications;
    report["mean"] = rep.mean;
    report["variance"] = rep.variance;
    report["skewness"] = rep.skewness;
    report["excess_kurtosis"] = rep.excess_kurtosis;
    report["thresholds"] = {{"skewness", rep.skew_threshold},
                            {"excess_kurtosis", rep.kurt_threshold}};
    report["verdict"] = rep.pass ? "PASS" : "FAIL";
    report["self_test_verdict"] = self.pass ? "PASS" : "FAIL";
    std::ostringstream os;
    os << "estimate\n";
    for (Eigen::Index i = 0; i < rep.estimates.size(); ++i) {
      os << format_double(rep.estimates[i]) << "\n";
    }
    table_csv = os.str();
  } else if (a.check == "wu") {
    const Dataset data = gen_low_dim({true_function_from_name(a.scenario),
                                      std::max(2, std::min(a.n, 200)), a.seed});
    const WuReport rep = wu_indefiniteness_check(gram(sum_gaussians_from_median(data.z), data.z, "z"));
    report["check"] = "wu_indefiniteness";
    report["trace"] = rep.trace;
    report["min_eigenvalue"] = rep.min_eigenvalue;
    report["max_eigenvalue"] = rep.max_eigenvalue;
    report["tolerance"] = rep.tolerance;
    report["trace_zero"] = rep.trace_zero;
    report["mixed_signs"] = rep.mixed_signs;
    report["verdict"] = rep.pass ? "PASS" : "FAIL";
  } else if (a.check == "identification") {
    const TrueFunction f = true_function_from_name(a.scenario);
    std::vector<std::pair<std::string, std::function<double(double)>>> candidates = {
        {"f_star", [f](double x) { return true_function(f, x); }},
        {"f_star_plus_1", [f](double x) { return true_function(f, x) + 1.0; }},
        {"2_f_star", [f](double x) { return 2.0 * true_function(f, x); }}};
    const auto rows = identification_probe(f, candidates, a.n, a.seed);
    std::ostringstream os;
    os << "candidate,v_risk\n";
    json jrows = json::array();
    double truth = 0.0, best_other = std::numeric_limits<double>::infinity();
    for (const auto& r : rows) {
      os << r.candidate << "," << format_double(r.v_risk) << "\n";
      jrows.push_back({{"candidate", r.candidate}, {"v_risk", r.v_risk}});
      if (r.candidate == "f_star") {
        truth = r.v_risk;
      } else {
        best_other = std::min(best_other, r.v_risk);
      }
    }
    table_csv = os.str();
    report["check"] = "identification";
    report["rows"] = jrows;
    report["margin"] = best_other - truth;
    report["verdict"] = truth < best_other ? "PASS" : "FAIL";
  } else {
    throw InputError("diagnose: check must be consistency|normality|wu|identification");
  }

  const std::string base = a.out_dir + "/diagnose_" + a.check;
  write_text_file(base + ".json", report.dump(2) + "\n");
  if (!table_csv.empty()) write_text_file(base + ".csv", table_csv);
  std::cout << report.dump(2) << "\n";
  return report["verdict"] == "FAIL" ? kExitNumerical : kExitOk;
}

std::vector<BenchmarkRecord> read_records_csv(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "records CSV is empty");
  require(line.rfind("scenario,method,seed,n,test_mse", 0) == 0,
          "records CSV: unexpected header");
  std::vector<BenchmarkRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::string cur;
    for (char ch : line) {
      if (ch == ',' && f.size() < 6) {
        f.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(ch);
      }
    }
    f.push_back(cur);
    require(f.size() >= 7, "records CSV: short row");
    BenchmarkRecord r;
    r.scenario = f[0];
    r.method = f[1];
    r.seed = std::stoull(f[2]);
    r.n = std::stoi(f[3]);
    r.test_mse = std::stod(f[4]);
    r.fit_time_ms = std::stoll(f[5]);
    r.hyperparams_json = f[6];
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MMR-IV toolkit: kernelized instrumental-variable regression"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* cgen = app.add_subcommand("generate", "Write a synthetic dataset CSV");
  cgen->add_option("--scenario", gen.scenario, "abs|linear|sin|step|mendelian");
  cgen->add_option("--n", gen.n, "sample size");
  cgen->add_option("--seed", gen.seed, "generator seed");
  cgen->add_option("--out", gen.out, "output CSV path");
  cgen->add_option("--dprime", gen.d_prime, "mendelian: instrument count");
  cgen->add_option("--beta", gen.beta, "mendelian: structural slope");
  cgen->add_option("--c1", gen.c1, "mendelian: confounder-to-outcome strength");
  cgen->add_option("--c2", gen.c2, "mendelian: confounder-to-treatment strength");

  FitArgs fit;
  auto* cfit = app.add_subcommand("fit", "Fit an MMR-IV kernel model");
  cfit->add_option("--data", fit.data_path, "training dataset CSV")->required();
  cfit->add_option("--method", fit.method, "mmr_rkhs|mmr_nystrom");
  cfit->add_option("--kernel-k", fit.kernel_k, "instrument kernel JSON");
  cfit->add_option("--kernel-l", fit.kernel_l, "hypothesis kernel JSON (default: select)");
  cfit->add_option("--lambda", fit.lambda, "regularization (default: select by LMOCV)");
  cfit->add_option("--nystrom-m", fit.nystrom_m, "Nystrom subset size");
  cfit->add_option("--nystrom-draws", fit.nystrom_draws, "Nystrom test-error draws");
  cfit->add_option("--seed", fit.seed, "seed");
  cfit->add_option("--leave-out", fit.leave_out, "LMOCV leave-out size M");
  cfit->add_option("--plan", fit.plan, "LMOCV fold construction: clustered|random");
  cfit->add_option("--out", fit.out, "model output path");

  std::string model_path, data_path, pred_out = "predictions.csv";
  auto* cpred = app.add_subcommand("predict", "Predict with a saved model");
  cpred->add_option("--model", model_path, "model JSON path")->required();
  cpred->add_option("--data", data_path, "dataset CSV with x columns")->required();
  cpred->add_option("--out", pred_out, "predictions output path");

  SelectArgs sel;
  auto* csel = app.add_subcommand("select", "Emit the LMOCV grid as CSV");
  csel->add_option("--data", sel.data_path, "dataset CSV")->required();
  csel->add_flag("--nystrom", sel.nystrom, "use the Nystrom posterior path");
  csel->add_option("--nystrom-m", sel.nystrom_m, "Nystrom subset size");
  csel->add_option("--leave-out", sel.leave_out, "leave-out size M");
  csel->add_option("--plan", sel.plan, "LMOCV fold construction: clustered|random");
  csel->add_option("--seed", sel.seed, "seed");
  csel->add_option("--out", sel.out, "cv table output path");

  std::string bench_config, bench_out;
  auto* cbench = app.add_subcommand("benchmark", "Run a benchmark config");
  cbench->add_option("--config", bench_config, "experiment config JSON")->required();
  cbench->add_option("--out-dir", bench_out, "output directory (overrides config)");

  std::string mend_config, mend_sweep = "dprime", mend_out;
  auto* cmend = app.add_subcommand("mendelian", "Run a Mendelian randomization sweep");
  cmend->add_option("--config", mend_config, "experiment config JSON")->required();
  cmend->add_option("--sweep", mend_sweep, "dprime|c1|c2");
  cmend->add_option("--out-dir", mend_out, "output directory (overrides config)");

  DiagnoseArgs diag;
  auto* cdiag = app.add_subcommand("diagnose", "Run a theoretical-claim diagnostic");
  cdiag->add_option("--check", diag.check, "consistency|normality|wu|identification");
  cdiag->add_option("--n", diag.n, "sample size");
  cdiag->add_option("--replications", diag.replications, "Monte Carlo replications");
  cdiag->add_option("--seed", diag.seed, "master seed");
  cdiag->add_option("--scenario", diag.scenario, "low-dim scenario");
  cdiag->add_option("--out-dir", diag.out_dir, "output directory");

  std::string plot_records, plot_x = "n", plot_out = "plot_data.csv";
  auto* cplot = app.add_subcommand("plot-data", "Summarize records into plot-ready CSV");
  cplot->add_option("--records", plot_records, "results.csv from a benchmark run")->required();
  cplot->add_option("--x", plot_x, "x axis: n|dprime|c1|c2");
  cplot->add_option("--out", plot_out, "output CSV path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cgen->parsed()) {
      cmd_generate(gen);
    } else if (cfit->parsed()) {
      cmd_fit(fit);
    } else if (cpred->parsed()) {
      cmd_predict(model_path, data_path, pred_out);
    } else if (csel->parsed()) {
      cmd_select(sel);
    } else if (cbench->parsed()) {
      return cmd_benchmark(bench_config, bench_out);
    } else if (cmend->parsed()) {
      return cmd_mendelian(mend_config, mend_sweep, mend_out);
    } else if (cdiag->parsed()) {
      return cmd_diagnose(diag);
    } else if (cplot->parsed()) {
      write_text_file(plot_out, emit_plot_data(read_records_csv(plot_records), plot_x));
      std::cout << "wrote plot data to " << plot_out << "\n";
    }
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitOk;
}
