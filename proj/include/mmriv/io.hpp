#pragma once

#include <string>

#include "mmriv/dataset.hpp"
#include "mmriv/kernels.hpp"
#include "mmriv/rkhs_solver.hpp"

#include <nlohmann/json_fwd.hpp>

namespace mmriv {

/// Datasets travel as CSV with header x_0..x_{d-1},y,z_0..z_{d'-1}[,f_star]
/// and floats printed with 17 significant digits (value-preserving).
void write_dataset_csv(const Dataset& data, const std::string& path);
Dataset read_dataset_csv(const std::string& path);

/// Fitted models round-trip through JSON (kernel spec, lambda, alpha,
/// training treatments); doubles survive exactly.
void save_model(const RkhsModel& model, const std::string& path);
RkhsModel load_model(const std::string& path);

/// Kernel specs in config files, e.g.
///   {"family": "gaussian", "sigma": 0.7}
///   {"family": "sum_gaussians", "mode": "median"}
///   {"family": "sum_gaussians", "sigmas": [1.0, 0.1, 10.0]}
/// "mode": "median" defers the bandwidths to the median heuristic on the
/// points the kernel is applied to, which is why resolution takes them.
KernelSpec kernel_from_json(const nlohmann::json& j, const Eigen::Ref<const Matrix>& points);
nlohmann::json kernel_to_json(const KernelSpec& spec);

/// 17-significant-digit formatting used by every CSV writer.
std::string format_double(double v);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace mmriv
