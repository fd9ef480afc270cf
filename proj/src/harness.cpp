#include "mmriv/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>
#include <tuple>

#include <nlohmann/json.hpp>

#include "mmriv/io.hpp"

namespace mmriv {

using nlohmann::json;

namespace {

// Substream tags of the repetition seed.
enum : std::uint64_t {
  kTagTrain = 0,
  kTagValidation = 1,
  kTagTest = 2,
  kTagSelectSubset = 100,
  kTagCvPlan = 101,
  kTagNnCvSplit = 110,
  kTagNnTrain = 111,
  kTagBaselineCv = 120,
  kTagDrawBase = 200,
};

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::string format_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

class Stopwatch {
 public:
  void start() { t0_ = std::chrono::steady_clock::now(); }
  void stop() {
    elapsed_ += std::chrono::duration_cast<std::chrono::nanoseconds>(
                    std::chrono::steady_clock::now() - t0_)
                    .count();
  }
  long long ms() const { return elapsed_ / 1000000; }

 private:
  std::chrono::steady_clock::time_point t0_;
  long long elapsed_ = 0;
};

}  // namespace

Method method_from_name(const std::string& name) {
  if (name == "mmr_rkhs") return Method::MmrRkhs;
  if (name == "mmr_nystrom") return Method::MmrNystrom;
  if (name == "mmr_nn") return Method::MmrNn;
  if (name == "2sls") return Method::TwoSls;
  if (name == "poly2sls") return Method::Poly2Sls;
  if (name == "direct_krr") return Method::DirectKrr;
  throw InputError("unknown method '" + name +
                   "' (mmr_rkhs|mmr_nystrom|mmr_nn|2sls|poly2sls|direct_krr)");
}

std::string method_name(Method m) {
  switch (m) {
    case Method::MmrRkhs: return "mmr_rkhs";
    case Method::MmrNystrom: return "mmr_nystrom";
    case Method::MmrNn: return "mmr_nn";
    case Method::TwoSls: return "2sls";
    case Method::Poly2Sls: return "poly2sls";
    case Method::DirectKrr: return "direct_krr";
  }
  throw InputError("method_name: invalid enum");
}

std::string scenario_name(const Scenario& s) {
  if (const auto* low = std::get_if<LowDimScenario>(&s)) {
    return true_function_name(low->f_star);
  }
  const auto& m = std::get<MendelianScenario>(s);
  std::ostringstream os;
  os << "mendelian_dp" << m.d_prime << "_c1_" << format_g(m.c1) << "_c2_" << format_g(m.c2);
  return os.str();
}

std::vector<double> paper_nn_lr_grid() {
  return {1e-12, 1e-11, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6};
}

void ExperimentConfig::validate() const {
  require(repetitions >= 1, "config: repetitions must be at least 1");
  require(!methods.empty(), "config: method list must be non-empty");
  require(n >= 4, "config: n too small");
  require(nystrom.m >= 1 && nystrom.draws >= 1, "config: nystrom.m and draws must be >= 1");
  require(select.leave_out >= 1, "config: select.leave_out must be >= 1");
  require(nn.epochs >= 1 && !nn.arch.empty(), "config: nn.epochs/arch invalid");
}

bool BenchmarkRecord::failed() const { return !std::isfinite(test_mse); }

namespace {

Scenario scenario_from_json(const json& j) {
  const std::string type = j.value("type", "low_dim");
  if (type == "low_dim") {
    LowDimScenario s;
    s.f_star = true_function_from_name(j.value("f_star", "sin"));
    return s;
  }
  if (type == "mendelian") {
    MendelianScenario m;
    m.d_prime = j.value("d_prime", 16);
    m.beta = j.value("beta", 1.0);
    m.c1 = j.value("c1", 1.0);
    m.c2 = j.value("c2", 1.0);
    require(m.d_prime >= 1, "config: d_prime must be >= 1");
    return m;
  }
  throw InputError("config: scenario.type must be low_dim or mendelian");
}

json scenario_to_json(const Scenario& s) {
  json j;
  if (const auto* low = std::get_if<LowDimScenario>(&s)) {
    j["type"] = "low_dim";
    j["f_star"] = true_function_name(low->f_star);
  } else {
    const auto& m = std::get<MendelianScenario>(s);
    j["type"] = "mendelian";
    j["d_prime"] = m.d_prime;
    j["beta"] = m.beta;
    j["c1"] = m.c1;
    j["c2"] = m.c2;
  }
  return j;
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  try {
    if (j.contains("scenario")) c.scenario = scenario_from_json(j.at("scenario"));
    if (j.contains("methods")) {
      c.methods.clear();
      for (const auto& m : j.at("methods")) {
        c.methods.push_back(method_from_name(m.get<std::string>()));
      }
    }
    c.n = j.value("n", c.n);
    c.repetitions = j.value("repetitions", c.repetitions);
    c.master_seed = j.value("master_seed", c.master_seed);
    c.output_dir = j.value("output_dir", c.output_dir);
    if (j.contains("nystrom")) {
      c.nystrom.m = j.at("nystrom").value("m", c.nystrom.m);
      c.nystrom.draws = j.at("nystrom").value("draws", c.nystrom.draws);
    }
    if (j.contains("nn")) {
      const auto& nj = j.at("nn");
      if (nj.contains("arch")) c.nn.arch = nj.at("arch").get<std::vector<int>>();
      if (nj.contains("lr_grid")) {
        if (nj.at("lr_grid").is_string() && nj.at("lr_grid").get<std::string>() == "paper") {
          c.nn.lr_grid = paper_nn_lr_grid();
        } else {
          c.nn.lr_grid = nj.at("lr_grid").get<std::vector<double>>();
        }
      }
      if (nj.contains("lambda_grid")) {
        c.nn.lambda_grid = nj.at("lambda_grid").get<std::vector<double>>();
      }
      c.nn.epochs = nj.value("epochs", c.nn.epochs);
      c.nn.momentum = nj.value("momentum", c.nn.momentum);
    }
    if (j.contains("select")) {
      c.select.leave_out = j.at("select").value("leave_out", c.select.leave_out);
    }
    if (j.contains("baseline")) {
      const auto& bj = j.at("baseline");
      c.baseline.max_degree = bj.value("max_degree", c.baseline.max_degree);
      if (bj.contains("ridge_grid")) {
        c.baseline.ridge_grid = bj.at("ridge_grid").get<std::vector<double>>();
      }
      c.baseline.cv_folds = bj.value("cv_folds", c.baseline.cv_folds);
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["scenario"] = scenario_to_json(c.scenario);
  std::vector<std::string> methods;
  for (Method m : c.methods) methods.push_back(method_name(m));
  j["methods"] = methods;
  j["n"] = c.n;
  j["repetitions"] = c.repetitions;
  j["master_seed"] = c.master_seed;
  j["output_dir"] = c.output_dir;
  j["nystrom"] = {{"m", c.nystrom.m}, {"draws", c.nystrom.draws}};
  j["nn"] = {{"arch", c.nn.arch},
             {"lr_grid", c.nn.lr_grid},
             {"lambda_grid", c.nn.lambda_grid},
             {"epochs", c.nn.epochs},
             {"momentum", c.nn.momentum}};
  j["select"] = {{"leave_out", c.select.leave_out}};
  j["baseline"] = {{"max_degree", c.baseline.max_degree},
                   {"ridge_grid", c.baseline.ridge_grid},
                   {"cv_folds", c.baseline.cv_folds}};
  return j;
}

namespace {

// Test MSE against the (standardized) f_star column. The whole pipeline,
// including the reference Table-1 values this reproduces, lives on the
// scale where the training outcomes have unit variance; predictions for
// external use go back through YTransform::invert instead.
double mse_against(const Vector& pred, const Vector& target) {
  return (pred - target).squaredNorm() / static_cast<double>(pred.size());
}

bool is_mendelian(const ExperimentConfig& config) {
  return std::holds_alternative<MendelianScenario>(config.scenario);
}

// MMR-IV (RKHS / Nystrom): LMOCV selection of (delta, sigma_l) on the fit
// set, lambda = (delta N^2)^{-1}, final fit, test MSE. Low-dim pools
// train+validation for the fit set; Mendelian uses the training set only.
double fit_mmr_kernel(bool nystrom, const ExperimentConfig& config, const Dataset& train,
                      const Dataset& validation, const Dataset& test,
                      std::uint64_t rep_seed, json* hyper, Stopwatch& watch) {
  const Dataset fit_set = is_mendelian(config) ? train : concat(train, validation);
  const int N = fit_set.n();
  const KernelSpec kernel_k = sum_gaussians_from_median(fit_set.z);
  const GramMatrix K_z = gram(kernel_k, fit_set.z, "z");
  const auto l_family = [](double sigma) { return KernelSpec::gaussian(sigma); };

  const CvPlan plan = make_clustered_cv_plan(fit_set.z, config.select.leave_out);
  const std::vector<double> delta_grid = default_delta_grid(N);
  const std::vector<double> sigma_grid = default_sigma_l_grid(fit_set.x);

  SelectionResult sel = [&] {
    if (nystrom) {
      const int m = std::min(config.nystrom.m, N);
      const NystromFactors factors =
          nystrom_factors(K_z, m, substream(rep_seed, kTagSelectSubset));
      return select_hyperparams(K_z, fit_set.x, fit_set.y, l_family, delta_grid, sigma_grid,
                                plan, &factors);
    }
    return select_hyperparams(K_z, fit_set.x, fit_set.y, l_family, delta_grid, sigma_grid,
                              plan, nullptr);
  }();

  const double lambda = 1.0 / (sel.best_delta * static_cast<double>(N) * N);
  const GramMatrix L = gram(sel.best_l, fit_set.x, "x");

  double mse = 0.0;
  if (nystrom) {
    // Test-time variance of the random subset is handled by averaging the
    // test errors of `draws` independent Nystrom approximations.
    const int m = std::min(config.nystrom.m, N);
    watch.start();
    for (int d = 0; d < config.nystrom.draws; ++d) {
      const NystromFactors factors =
          nystrom_factors(K_z, m, substream(rep_seed, kTagDrawBase + d));
      const RkhsModel model =
          fit_nystrom_with(factors, L.values, fit_set.y, fit_set.x, sel.best_l, lambda);
      mse += mse_against(predict(model, test.x), *test.f_star);
    }
    watch.stop();
    mse /= config.nystrom.draws;
    (*hyper)["m"] = m;
    (*hyper)["draws"] = config.nystrom.draws;
  } else {
    watch.start();
    const RkhsModel model =
        fit_rkhs_with(L.values, weight_v(K_z), fit_set.y, fit_set.x, sel.best_l, lambda);
    mse = mse_against(predict(model, test.x), *test.f_star);
    watch.stop();
  }
  (*hyper)["lambda"] = lambda;
  (*hyper)["delta"] = sel.best_delta;
  (*hyper)["sigma_l"] = sel.best_l_param;
  (*hyper)["fit_n"] = N;
  return mse;
}

// MMR-IV (NN): (lr, lambda) by 2-fold CV on the validation split scored by
// held-out V-statistic risk, final training on the training split.
double fit_mmr_nn(const ExperimentConfig& config, const Dataset& train,
                  const Dataset& validation, const Dataset& test, std::uint64_t rep_seed,
                  json* hyper, Stopwatch& watch) {
  Rng shuffle_rng(substream(rep_seed, kTagNnCvSplit));
  const int nv = validation.n();
  std::vector<int> perm(nv);
  for (int i = 0; i < nv; ++i) perm[i] = i;
  for (int i = 0; i < nv - 1; ++i) {
    int j = i + static_cast<int>(shuffle_rng.below(static_cast<std::uint64_t>(nv - i)));
    std::swap(perm[i], perm[j]);
  }
  const std::vector<int> half_a(perm.begin(), perm.begin() + nv / 2);
  const std::vector<int> half_b(perm.begin() + nv / 2, perm.end());
  const Dataset fold_a = take_rows(validation, half_a);
  const Dataset fold_b = take_rows(validation, half_b);

  const auto held_out_risk = [](const Mlp& params, const Dataset& held) {
    const KernelSpec k = sum_gaussians_from_median(held.z);
    const WeightMatrix w = weight_v(gram(k, held.z, "z"));
    const Vector r = held.y - mlp_forward(params, held.x);
    return empirical_risk(r, w);
  };

  double best_cv = std::numeric_limits<double>::infinity();
  double best_lr = config.nn.lr_grid.front();
  double best_lambda = config.nn.lambda_grid.front();
  for (double lr : config.nn.lr_grid) {
    for (double lambda : config.nn.lambda_grid) {
      double cv = 0.0;
      bool ok = true;
      const std::pair<const Dataset*, const Dataset*> folds[2] = {{&fold_a, &fold_b},
                                                                  {&fold_b, &fold_a}};
      for (const auto& [tr, held] : folds) {
        TrainConfig tc;
        tc.learning_rate = lr;
        tc.epochs = config.nn.epochs;
        tc.lambda = lambda;
        tc.seed = substream(rep_seed, kTagNnTrain);
        tc.optimizer = config.nn.momentum ? TrainConfig::Optimizer::Momentum
                                          : TrainConfig::Optimizer::PlainGd;
        try {
          const KernelSpec k = sum_gaussians_from_median(tr->z);
          const TrainResult res = train_mlp(*tr, k, config.nn.arch, tc);
          cv += held_out_risk(res.params, *held);
        } catch (const NumericalError&) {
          ok = false;
          break;
        }
      }
      if (ok && cv < best_cv) {
        best_cv = cv;
        best_lr = lr;
        best_lambda = lambda;
      }
    }
  }
  if (!std::isfinite(best_cv)) {
    throw NumericalError("mmr_nn: every (lr, lambda) grid point diverged");
  }

  TrainConfig tc;
  tc.learning_rate = best_lr;
  tc.epochs = config.nn.epochs;
  tc.lambda = best_lambda;
  tc.seed = substream(rep_seed, kTagNnTrain);
  tc.optimizer = config.nn.momentum ? TrainConfig::Optimizer::Momentum
                                    : TrainConfig::Optimizer::PlainGd;
  const KernelSpec k = sum_gaussians_from_median(train.z);
  watch.start();
  const TrainResult res = train_mlp(train, k, config.nn.arch, tc);
  const double mse =
      mse_against(mlp_forward(res.params, test.x), *test.f_star);
  watch.stop();
  (*hyper)["lr"] = best_lr;
  (*hyper)["lambda"] = best_lambda;
  (*hyper)["epochs"] = config.nn.epochs;
  (*hyper)["best_epoch"] = res.best_epoch;
  return mse;
}

}  // namespace

double fit_and_score(Method method, const ExperimentConfig& config, const Dataset& train,
                     const Dataset& validation, const Dataset& test, std::uint64_t rep_seed,
                     json* hyper_out, long long* fit_time_ms_out) {
  require(test.f_star.has_value(), "fit_and_score: test split lacks f_star");
  json local;
  json* hyper = hyper_out != nullptr ? hyper_out : &local;
  Stopwatch watch;
  double mse = kNan;
  switch (method) {
    case Method::MmrRkhs:
      mse = fit_mmr_kernel(false, config, train, validation, test, rep_seed, hyper, watch);
      break;
    case Method::MmrNystrom:
      mse = fit_mmr_kernel(true, config, train, validation, test, rep_seed, hyper, watch);
      break;
    case Method::MmrNn:
      mse = fit_mmr_nn(config, train, validation, test, rep_seed, hyper, watch);
      break;
    case Method::TwoSls: {
      const Dataset fit_set = is_mendelian(config) ? train : concat(train, validation);
      watch.start();
      const LinearModel model = fit_2sls(fit_set);
      mse = mse_against(predict(model, test.x), *test.f_star);
      watch.stop();
      (*hyper)["first_stage_f"] = model.first_stage_f;
      (*hyper)["weak_instrument"] = model.weak_instrument;
      break;
    }
    case Method::Poly2Sls: {
      const Dataset fit_set = is_mendelian(config) ? train : concat(train, validation);
      const PolyRidgeModel selected =
          fit_poly2sls(fit_set, config.baseline.max_degree, config.baseline.ridge_grid,
                       config.baseline.cv_folds, substream(rep_seed, kTagBaselineCv));
      watch.start();
      mse = mse_against(predict(selected, test.x), *test.f_star);
      watch.stop();
      (*hyper)["degree"] = selected.degree;
      (*hyper)["ridge"] = selected.ridge;
      break;
    }
    case Method::DirectKrr: {
      const Dataset fit_set = is_mendelian(config) ? train : concat(train, validation);
      const KernelSpec kernel_l = KernelSpec::gaussian(median_heuristic(fit_set.x));
      const RkhsModel selected =
          fit_direct_ridge(fit_set, kernel_l, default_lambda_grid(), config.baseline.cv_folds,
                           substream(rep_seed, kTagBaselineCv));
      watch.start();
      const GramMatrix L = gram(kernel_l, fit_set.x, "x");
      const RkhsModel model = fit_krr(L.values, fit_set.y, fit_set.x, kernel_l, selected.lambda);
      mse = mse_against(predict(model, test.x), *test.f_star);
      watch.stop();
      (*hyper)["lambda"] = selected.lambda;
      break;
    }
  }
  if (fit_time_ms_out != nullptr) *fit_time_ms_out = watch.ms();
  return mse;
}

namespace {

void make_splits(const ExperimentConfig& config, std::uint64_t rep_seed, Dataset& train,
                 Dataset& validation, Dataset& test) {
  if (const auto* low = std::get_if<LowDimScenario>(&config.scenario)) {
    train = gen_low_dim({low->f_star, config.n, substream(rep_seed, kTagTrain)});
    validation = gen_low_dim({low->f_star, config.n, substream(rep_seed, kTagValidation)});
    test = gen_low_dim({low->f_star, config.n, substream(rep_seed, kTagTest)});
    return;
  }
  const auto& m = std::get<MendelianScenario>(config.scenario);
  MendelianSpec spec;
  spec.d_prime = m.d_prime;
  spec.beta = m.beta;
  spec.c1 = m.c1;
  spec.c2 = m.c2;
  spec.n = config.n;
  spec.param_seed = rep_seed;  // (p, alpha) shared across the three splits
  spec.param_seed_set = true;
  spec.seed = substream(rep_seed, kTagTrain);
  train = gen_mendelian(spec);
  spec.seed = substream(rep_seed, kTagValidation);
  validation = gen_mendelian(spec);
  spec.seed = substream(rep_seed, kTagTest);
  test = gen_mendelian(spec);
}

}  // namespace

BenchmarkResult run_benchmark(const ExperimentConfig& config) {
  config.validate();
  const std::string scen_name = scenario_name(config.scenario);
  std::vector<BenchmarkRecord> records;

  for (int r = 0; r < config.repetitions; ++r) {
    const std::uint64_t rep_seed = substream(config.master_seed, static_cast<std::uint64_t>(r));
    Dataset train, validation, test;
    make_splits(config, rep_seed, train, validation, test);
    standardize_y(train, {&validation, &test});

    for (Method method : config.methods) {
      BenchmarkRecord rec;
      rec.scenario = scen_name;
      rec.method = method_name(method);
      rec.seed = rep_seed;
      rec.n = config.n;
      json hyper = json::object();
      long long ms = 0;
      try {
        rec.test_mse =
            fit_and_score(method, config, train, validation, test, rep_seed, &hyper, &ms);
        hyper["status"] = "ok";
      } catch (const std::exception& e) {
        rec.test_mse = kNan;
        hyper["status"] = "FAILED";
        hyper["error"] = e.what();
      }
      rec.fit_time_ms = ms;
      rec.hyperparams_json = hyper.dump();
      records.push_back(std::move(rec));
    }
  }

  std::sort(records.begin(), records.end(), [](const BenchmarkRecord& a, const BenchmarkRecord& b) {
    return std::tie(a.scenario, a.method, a.seed) < std::tie(b.scenario, b.method, b.seed);
  });

  // Per (scenario, method) mean +- sd over successful repetitions.
  BenchmarkResult result;
  result.records = std::move(records);
  for (size_t i = 0; i < result.records.size();) {
    size_t j = i;
    double sum = 0.0;
    int runs = 0, failures = 0;
    while (j < result.records.size() && result.records[j].scenario == result.records[i].scenario &&
           result.records[j].method == result.records[i].method) {
      ++runs;
      if (result.records[j].failed()) {
        ++failures;
      } else {
        sum += result.records[j].test_mse;
      }
      ++j;
    }
    const int ok_runs = runs - failures;
    SummaryRow row;
    row.scenario = result.records[i].scenario;
    row.method = result.records[i].method;
    row.runs = runs;
    row.failures = failures;
    row.mean_mse = ok_runs > 0 ? sum / ok_runs : kNan;
    double ss = 0.0;
    for (size_t k = i; k < j; ++k) {
      if (!result.records[k].failed()) {
        const double d = result.records[k].test_mse - row.mean_mse;
        ss += d * d;
      }
    }
    row.sd_mse = ok_runs > 1 ? std::sqrt(ss / (ok_runs - 1)) : 0.0;
    result.summary.push_back(std::move(row));
    i = j;
  }
  return result;
}

MendelianSweep sweep_from_name(const std::string& name) {
  if (name == "dprime") return MendelianSweep::DPrime;
  if (name == "c1") return MendelianSweep::C1;
  if (name == "c2") return MendelianSweep::C2;
  throw InputError("unknown sweep '" + name + "' (dprime|c1|c2)");
}

BenchmarkResult run_mendelian_sweep(const ExperimentConfig& base, MendelianSweep sweep) {
  require(std::holds_alternative<MendelianScenario>(base.scenario),
          "run_mendelian_sweep: scenario must be mendelian");
  BenchmarkResult all;
  auto run_one = [&](const MendelianScenario& scen) {
    ExperimentConfig config = base;
    config.scenario = scen;
    BenchmarkResult one = run_benchmark(config);
    all.records.insert(all.records.end(), one.records.begin(), one.records.end());
    all.summary.insert(all.summary.end(), one.summary.begin(), one.summary.end());
  };
  const auto& scen = std::get<MendelianScenario>(base.scenario);
  switch (sweep) {
    case MendelianSweep::DPrime:
      for (int dp : {8, 16, 32}) {
        MendelianScenario s = scen;
        s.d_prime = dp;
        run_one(s);
      }
      break;
    case MendelianSweep::C1:
      for (double c : {0.5, 1.0, 2.0}) {
        MendelianScenario s = scen;
        s.c1 = c;
        run_one(s);
      }
      break;
    case MendelianSweep::C2:
      for (double c : {0.5, 1.0, 2.0}) {
        MendelianScenario s = scen;
        s.c2 = c;
        run_one(s);
      }
      break;
  }
  return all;
}

std::string records_to_csv(const std::vector<BenchmarkRecord>& records) {
  std::ostringstream os;
  os << "scenario,method,seed,n,test_mse,fit_time_ms,hyperparams_json\n";
  for (const auto& r : records) {
    std::string hyper = r.hyperparams_json;
    for (char& ch : hyper) {
      if (ch == '"') ch = '\'';  // keep the CSV single-token per field
    }
    os << r.scenario << "," << r.method << "," << r.seed << "," << r.n << ","
       << format_double(r.test_mse) << "," << r.fit_time_ms << "," << hyper << "\n";
  }
  return os.str();
}

std::string summary_to_csv(const std::vector<SummaryRow>& summary) {
  std::ostringstream os;
  os << "scenario,method,runs,failures,mean_mse,sd_mse\n";
  for (const auto& s : summary) {
    os << s.scenario << "," << s.method << "," << s.runs << "," << s.failures << ","
       << format_double(s.mean_mse) << "," << format_double(s.sd_mse) << "\n";
  }
  return os.str();
}

std::string strip_timing_column(const std::string& records_csv) {
  std::istringstream in(records_csv);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
      if (ch == ',') {
        fields.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(ch);
      }
    }
    fields.push_back(cur);
    bool first = true;
    for (size_t i = 0; i < fields.size(); ++i) {
      if (i == 5) continue;  // fit_time_ms
      if (!first) out << ",";
      out << fields[i];
      first = false;
    }
    out << "\n";
  }
  return out.str();
}

namespace {

double parse_scenario_number(const std::string& scenario, const std::string& key) {
  // mendelian_dp16_c1_0.5_c2_1 style tokens.
  const std::string token = key + "_";
  size_t pos;
  if (key == "dp") {
    pos = scenario.find("_dp");
    require(pos != std::string::npos, "plot-data: scenario lacks dp token: " + scenario);
    pos += 3;
  } else {
    pos = scenario.find("_" + token);
    require(pos != std::string::npos, "plot-data: scenario lacks " + key + ": " + scenario);
    pos += 2 + key.size();
  }
  size_t end = scenario.find('_', pos);
  if (end == std::string::npos) end = scenario.size();
  return std::stod(scenario.substr(pos, end - pos));
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.size() == 1) return sorted[0];
  const double h = q * (static_cast<double>(sorted.size()) - 1.0);
  const size_t lo = static_cast<size_t>(h);
  const size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - lo) * (sorted[hi] - sorted[lo]);
}

}  // namespace

std::string emit_plot_data(const std::vector<BenchmarkRecord>& records,
                           const std::string& x_axis) {
  require(!records.empty(), "plot-data: no records");
  require(x_axis == "n" || x_axis == "dprime" || x_axis == "c1" || x_axis == "c2",
          "plot-data: x axis must be n|dprime|c1|c2");

  struct Key {
    std::string method;
    double x;
    bool operator<(const Key& o) const {
      return std::tie(method, x) < std::tie(o.method, o.x);
    }
  };
  std::map<Key, std::vector<double>> groups;
  for (const auto& r : records) {
    if (r.failed()) continue;
    double x = 0.0;
    if (x_axis == "n") {
      x = r.n;
    } else if (x_axis == "dprime") {
      x = parse_scenario_number(r.scenario, "dp");
    } else {
      x = parse_scenario_number(r.scenario, x_axis);
    }
    groups[{r.method, x}].push_back(r.test_mse);
  }
  require(!groups.empty(), "plot-data: every record failed");

  std::ostringstream os;
  os << "x_value,method,median,p25,p75\n";
  for (auto& [key, vals] : groups) {
    std::sort(vals.begin(), vals.end());
    double median;
    const size_t c = vals.size();
    median = (c % 2 == 1) ? vals[c / 2] : 0.5 * (vals[c / 2 - 1] + vals[c / 2]);
    os << format_g(key.x) << "," << key.method << "," << format_double(median) << ","
       << format_double(quantile_sorted(vals, 0.25)) << ","
       << format_double(quantile_sorted(vals, 0.75)) << "\n";
  }
  return os.str();
}

}  // namespace mmriv
