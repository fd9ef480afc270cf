#pragma once

#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mmriv/baselines.hpp"
#include "mmriv/datagen.hpp"
#include "mmriv/model_selection.hpp"
#include "mmriv/nn_solver.hpp"

namespace mmriv {

enum class Method { MmrRkhs, MmrNystrom, MmrNn, TwoSls, Poly2Sls, DirectKrr };

Method method_from_name(const std::string& name);
std::string method_name(Method m);

struct LowDimScenario {
  TrueFunction f_star = TrueFunction::Sin;
};

struct MendelianScenario {
  int d_prime = 16;
  double beta = 1.0;
  double c1 = 1.0;
  double c2 = 1.0;
};

using Scenario = std::variant<LowDimScenario, MendelianScenario>;
std::string scenario_name(const Scenario& s);

struct NystromOptions {
  int m = 300;
  int draws = 10;
};

struct NnOptions {
  std::vector<int> arch = {100, 100};
  std::vector<double> lr_grid = {1e-3, 1e-2, 1e-1};
  std::vector<double> lambda_grid = {5e-5, 1e-4, 2e-4};
  int epochs = 1000;
  bool momentum = true;
};

/// Learning rates reported for the reference experiments
/// (10^-12 ... 10^-6); selectable via config "lr_grid": "paper".
std::vector<double> paper_nn_lr_grid();

struct SelectOptions {
  // Leave-out size of the instrument-clustered LMOCV plan. Size-2 folds
  // make the fold error diagonal-dominated (a plain prediction criterion
  // that over-regularizes the low-SNR scenarios); 10 keeps the runtime of
  // the analytic error while the within-fold kernel couplings carry the
  // moment-restriction signal.
  int leave_out = 10;
};

struct BaselineOptions {
  int max_degree = 5;
  std::vector<double> ridge_grid = {1e-5, 1e-3, 1e-1, 10.0, 1000.0};
  int cv_folds = 5;
};

struct ExperimentConfig {
  Scenario scenario = LowDimScenario{};
  std::vector<Method> methods = {Method::MmrNystrom};
  int n = 2000;
  int repetitions = 10;
  std::uint64_t master_seed = 527;
  std::string output_dir = ".";
  NystromOptions nystrom;
  NnOptions nn;
  SelectOptions select;
  BaselineOptions baseline;

  void validate() const;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& config);

struct BenchmarkRecord {
  std::string scenario;
  std::string method;
  std::uint64_t seed = 0;  // repetition seed, substream(master, r)
  int n = 0;
  double test_mse = 0.0;  // NaN when the method failed
  long long fit_time_ms = 0;
  std::string hyperparams_json;  // selected hyperparameters; carries status on failure

  bool failed() const;
};

struct SummaryRow {
  std::string scenario;
  std::string method;
  int runs = 0;
  int failures = 0;
  double mean_mse = 0.0;
  double sd_mse = 0.0;
};

struct BenchmarkResult {
  std::vector<BenchmarkRecord> records;
  std::vector<SummaryRow> summary;
};

/// Runs every (repetition x method) cell: three independent draws of size n
/// per repetition (train/validation/test), outcome standardization on the
/// training split, method-specific fitting, MSE against the f_star column
/// on the test treatments (standardized scale, matching the reference
/// tables). A method failure yields a FAILED record and the run continues.
/// Records are ordered by (scenario, method, seed).
BenchmarkResult run_benchmark(const ExperimentConfig& config);

enum class MendelianSweep { DPrime, C1, C2 };
MendelianSweep sweep_from_name(const std::string& name);

/// One benchmark per sweep value (d' in {8,16,32} or c1/c2 in {0.5,1,2});
/// unswept parameters stay at the config's scenario defaults.
BenchmarkResult run_mendelian_sweep(const ExperimentConfig& base, MendelianSweep sweep);

std::string records_to_csv(const std::vector<BenchmarkRecord>& records);
std::string summary_to_csv(const std::vector<SummaryRow>& summary);

/// Drops the fit_time_ms column; the determinism contract compares these.
std::string strip_timing_column(const std::string& records_csv);

/// Long-format plot data (x_value, method, median, p25, p75), rows ordered
/// by (method, x_value). x_axis is one of n|dprime|c1|c2.
std::string emit_plot_data(const std::vector<BenchmarkRecord>& records,
                           const std::string& x_axis);

/// Fits one method on prepared (standardized) splits and scores it on the
/// test split's f_star column. Exposed for diagnostics and tests.
double fit_and_score(Method method, const ExperimentConfig& config, const Dataset& train,
                     const Dataset& validation, const Dataset& test, std::uint64_t rep_seed,
                     nlohmann::json* hyperparams_out, long long* fit_time_ms_out);

}  // namespace mmriv
