#ifndef DGLASSO_IO_HPP
#define DGLASSO_IO_HPP

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "dglasso/datagen.hpp"
#include "dglasso/metrics.hpp"
#include "dglasso/solver.hpp"

namespace dglasso::io {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kFormatVersion = 1;

/// Shortest decimal string that round-trips the given binary64 value.
std::string format_double(double value);

/// Matrix CSV: row-major, comma separated, no header, shortest round-trip
/// number format (read-back is bit-identical).
void write_matrix_csv(const std::filesystem::path& path,
                      const Matrix<double>& m);
Matrix<double> read_matrix_csv(const std::filesystem::path& path);

/// Time-series CSV: one header line "k,y1,...,yNy", then rows k,y_k(1..Ny).
void write_series_csv(const std::filesystem::path& path,
                      const TimeSeries<double>& series);
TimeSeries<double> read_series_csv(const std::filesystem::path& path);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

/// FNV-1a hash of a canonical string; embedded in every JSON artifact so
/// equal-config runs are recognizable.
std::uint64_t fnv1a(const std::string& text);
std::string config_hash(const nlohmann::json& config);

nlohmann::json to_json(const DatasetSpec& spec);
DatasetSpec dataset_spec_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SolverConfig<double>& cfg);
SolverConfig<double> solver_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const EdgeScores& scores);
nlohmann::json to_json(const MetricsReport& report);

}  // namespace dglasso::io

#endif  // DGLASSO_IO_HPP
