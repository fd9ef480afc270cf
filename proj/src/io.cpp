#include "mmriv/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

namespace mmriv {

using nlohmann::json;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open file: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write file: " + path);
  out << content;
}

void write_dataset_csv(const Dataset& data, const std::string& path) {
  data.validate();
  std::ostringstream os;
  for (int j = 0; j < data.d(); ++j) os << "x_" << j << ",";
  os << "y";
  for (int j = 0; j < data.d_instrument(); ++j) os << ",z_" << j;
  if (data.f_star) os << ",f_star";
  os << "\n";
  for (int i = 0; i < data.n(); ++i) {
    for (int j = 0; j < data.d(); ++j) os << format_double(data.x(i, j)) << ",";
    os << format_double(data.y[i]);
    for (int j = 0; j < data.d_instrument(); ++j) os << "," << format_double(data.z(i, j));
    if (data.f_star) os << "," << format_double((*data.f_star)[i]);
    os << "\n";
  }
  write_text_file(path, os.str());
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

Dataset read_dataset_csv(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line)) throw InputError("empty dataset file: " + path);
  const auto header = split_csv_line(line);

  int d = 0, dp = 0;
  int y_col = -1, f_col = -1;
  for (size_t c = 0; c < header.size(); ++c) {
    const std::string& h = header[c];
    if (h.rfind("x_", 0) == 0) {
      ++d;
    } else if (h == "y") {
      y_col = static_cast<int>(c);
    } else if (h.rfind("z_", 0) == 0) {
      ++dp;
    } else if (h == "f_star") {
      f_col = static_cast<int>(c);
    } else {
      throw InputError("dataset CSV: unexpected column '" + h + "'");
    }
  }
  require(d >= 1 && dp >= 1 && y_col == d, "dataset CSV: header must be x_*,y,z_*[,f_star]");

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    require(fields.size() == header.size(), "dataset CSV: row width differs from header");
    std::vector<double> vals;
    vals.reserve(fields.size());
    for (const auto& f : fields) {
      try {
        size_t used = 0;
        vals.push_back(std::stod(f, &used));
        require(used == f.size(), "dataset CSV: trailing characters in number");
      } catch (const std::exception&) {
        throw InputError("dataset CSV: cannot parse value '" + f + "'");
      }
    }
    rows.push_back(std::move(vals));
  }
  require(!rows.empty(), "dataset CSV: no data rows");

  const int n = static_cast<int>(rows.size());
  Dataset data;
  data.x.resize(n, d);
  data.y.resize(n);
  data.z.resize(n, dp);
  Vector f(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) data.x(i, j) = rows[i][j];
    data.y[i] = rows[i][d];
    for (int j = 0; j < dp; ++j) data.z(i, j) = rows[i][d + 1 + j];
    if (f_col >= 0) f[i] = rows[i][f_col];
  }
  if (f_col >= 0) data.f_star = std::move(f);
  data.validate();
  return data;
}

json kernel_to_json(const KernelSpec& spec) {
  json j;
  std::visit(
      [&j](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, GaussianRBF>) {
          j["family"] = "gaussian";
          j["sigma"] = k.sigma;
        } else if constexpr (std::is_same_v<T, Laplacian>) {
          j["family"] = "laplacian";
          j["sigma"] = k.sigma;
        } else if constexpr (std::is_same_v<T, InverseMultiquadric>) {
          j["family"] = "imq";
          j["c"] = k.c;
          j["gamma"] = k.gamma;
        } else if constexpr (std::is_same_v<T, SumOfGaussians>) {
          j["family"] = "sum_gaussians";
          j["sigmas"] = {k.sigmas[0], k.sigmas[1], k.sigmas[2]};
        } else {
          j["family"] = "ard";
          std::vector<double> ls(k.lengthscales.data(),
                                 k.lengthscales.data() + k.lengthscales.size());
          j["lengthscales"] = ls;
        }
      },
      spec.variant());
  return j;
}

KernelSpec kernel_from_json(const json& j, const Eigen::Ref<const Matrix>& points) {
  if (!j.is_object() || !j.contains("family")) {
    throw InputError("kernel config: expected an object with a 'family' key");
  }
  const std::string family = j.at("family").get<std::string>();
  const bool median_mode = j.value("mode", "") == "median";
  try {
    if (family == "gaussian") {
      const double sigma = median_mode ? median_heuristic(points) : j.at("sigma").get<double>();
      return KernelSpec::gaussian(sigma);
    }
    if (family == "laplacian") {
      const double sigma = median_mode ? median_heuristic(points) : j.at("sigma").get<double>();
      return KernelSpec::laplacian(sigma);
    }
    if (family == "imq") {
      return KernelSpec::imq(j.at("c").get<double>(), j.at("gamma").get<double>());
    }
    if (family == "sum_gaussians") {
      if (median_mode) return sum_gaussians_from_median(points);
      const auto s = j.at("sigmas").get<std::vector<double>>();
      require(s.size() == 3, "kernel config: sum_gaussians needs exactly 3 sigmas");
      return KernelSpec::sum_of_gaussians(s[0], s[1], s[2]);
    }
    if (family == "ard") {
      const auto ls = j.at("lengthscales").get<std::vector<double>>();
      Vector v = Eigen::Map<const Vector>(ls.data(), static_cast<Eigen::Index>(ls.size()));
      return KernelSpec::ard(std::move(v));
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("kernel config: ") + e.what());
  }
  throw InputError("kernel config: unknown family '" + family + "'");
}

void save_model(const RkhsModel& model, const std::string& path) {
  json j;
  j["kernel_l"] = kernel_to_json(model.kernel_l);
  j["lambda"] = model.lambda;
  j["jitter_used"] = model.jitter_used;
  j["alpha"] = std::vector<double>(model.alpha.data(), model.alpha.data() + model.alpha.size());
  std::vector<std::vector<double>> tx(model.train_x.rows());
  for (Eigen::Index i = 0; i < model.train_x.rows(); ++i) {
    tx[i].assign(model.train_x.row(i).begin(), model.train_x.row(i).end());
  }
  j["train_x"] = tx;
  write_text_file(path, j.dump(2) + "\n");
}

RkhsModel load_model(const std::string& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw InputError(std::string("model file: ") + e.what());
  }
  try {
    const auto alpha = j.at("alpha").get<std::vector<double>>();
    const auto tx = j.at("train_x").get<std::vector<std::vector<double>>>();
    require(!tx.empty() && tx.size() == alpha.size(),
            "model file: alpha and train_x sizes differ");
    Matrix train_x(tx.size(), tx[0].size());
    for (size_t i = 0; i < tx.size(); ++i) {
      require(tx[i].size() == tx[0].size(), "model file: ragged train_x");
      for (size_t c = 0; c < tx[i].size(); ++c) train_x(i, c) = tx[i][c];
    }
    KernelSpec kernel_l = kernel_from_json(j.at("kernel_l"), train_x);
    RkhsModel model{
        Eigen::Map<const Vector>(alpha.data(), static_cast<Eigen::Index>(alpha.size())),
        std::move(train_x), std::move(kernel_l), j.at("lambda").get<double>(),
        j.value("jitter_used", 0.0)};
    return model;
  } catch (const json::exception& e) {
    throw InputError(std::string("model file: ") + e.what());
  }
}

}  // namespace mmriv
