#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "embodied/kernels.hpp"

namespace embodied {

using json = nlohmann::json;

/// Serialises JSON with every floating-point number written to 17 significant
/// digits, so decimal text round-trips bit-exactly. indent < 0 gives compact output.
std::string dump_json(const json& j, int indent = -1);

json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);
void write_json_file(const std::filesystem::path& path, const json& j, int indent = -1);

json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const json& rows, const char* what);
json vector_to_json(const Vector& v);
Vector vector_from_json(const json& values, const char* what);

// Kernel file: {"domain": D, "codomain": C, "rows": [[...], ...]}
json to_json(const StochasticKernel& k);
json to_json(const EmpiricalKernel& k);
StochasticKernel stochastic_kernel_from_json(const json& j, double row_tol = kIngestionRowTol);
EmpiricalKernel empirical_kernel_from_json(const json& j, double row_tol = kIngestionRowTol);

// System file: {"world": n, "sensor": n, "actuator": n, "beta": K, "alpha": K, "init_world": [...]}
json to_json(const SmlSystem& sys);
SmlSystem sml_system_from_json(const json& j);

json to_json(const Trajectory& traj);
Trajectory trajectory_from_json(const json& j);

StochasticKernel load_kernel(const std::filesystem::path& path);
SmlSystem load_system(const std::filesystem::path& path);
void save_kernel(const std::filesystem::path& path, const StochasticKernel& k);
void save_system(const std::filesystem::path& path, const SmlSystem& sys);

}  // namespace embodied
