#include "dglasso/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>
#include <vector>

namespace dglasso::io {

namespace fs = std::filesystem;

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

static double parse_double(std::string_view text, const fs::path& path) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc() || res.ptr != end)
    throw IoError("malformed number '" + std::string(text) + "' in " +
                  path.string());
  return value;
}

static std::vector<std::string_view> split_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

static std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

static std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  return in;
}

void write_matrix_csv(const fs::path& path, const Matrix<double>& m) {
  std::ofstream out = open_out(path);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

Matrix<double> read_matrix_csv(const fs::path& path) {
  std::ifstream in = open_in(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    for (auto field : split_line(line)) row.push_back(parse_double(field, path));
    if (!rows.empty() && rows.front().size() != row.size())
      throw IoError("ragged rows in " + path.string());
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError("empty matrix file " + path.string());
  Matrix<double> m(static_cast<Index>(rows.size()),
                   static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j)
      m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

void write_series_csv(const fs::path& path, const TimeSeries<double>& series) {
  std::ofstream out = open_out(path);
  const Index ny = series.observations.cols();
  out << 'k';
  for (Index j = 1; j <= ny; ++j) out << ",y" << j;
  out << '\n';
  for (Index k = 1; k <= series.length(); ++k) {
    out << k;
    for (Index j = 0; j < ny; ++j)
      out << ',' << format_double(series.observations(k - 1, j));
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

TimeSeries<double> read_series_csv(const fs::path& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line))
    throw IoError("missing header in " + path.string());
  const std::size_t ny = split_line(line).size() - 1;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = split_line(line);
    if (fields.size() != ny + 1)
      throw IoError("bad row width in " + path.string());
    std::vector<double> row;
    for (std::size_t j = 1; j < fields.size(); ++j)
      row.push_back(parse_double(fields[j], path));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError("no observations in " + path.string());
  TimeSeries<double> series;
  series.observations.resize(static_cast<Index>(rows.size()),
                             static_cast<Index>(ny));
  for (Index k = 0; k < series.observations.rows(); ++k)
    for (Index j = 0; j < series.observations.cols(); ++j)
      series.observations(k, j) =
          rows[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
  return series;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in = open_in(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("invalid JSON in " + path.string() + ": " + e.what());
  }
  return j;
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string config_hash(const nlohmann::json& config) {
  std::ostringstream hex;
  hex << std::hex << fnv1a(config.dump());
  return hex.str();
}

nlohmann::json to_json(const DatasetSpec& spec) {
  nlohmann::json j{{"Nx", spec.Nx},
                   {"block_sizes", spec.block_sizes},
                   {"cond_log10", spec.cond_log10},
                   {"spectral_cap", spec.spectral_cap},
                   {"K", spec.K},
                   {"sigma_R", spec.sigma_R},
                   {"sigma_0", spec.sigma_0},
                   {"seed", spec.seed}};
  if (spec.sparsity_keep) j["sparsity_keep"] = *spec.sparsity_keep;
  return j;
}

DatasetSpec dataset_spec_from_json(const nlohmann::json& j) {
  DatasetSpec spec;
  spec.Nx = j.value("Nx", spec.Nx);
  if (j.contains("block_sizes"))
    spec.block_sizes = j.at("block_sizes").get<std::vector<int>>();
  spec.cond_log10 = j.value("cond_log10", spec.cond_log10);
  spec.spectral_cap = j.value("spectral_cap", spec.spectral_cap);
  spec.K = j.value("K", spec.K);
  spec.sigma_R = j.value("sigma_R", spec.sigma_R);
  spec.sigma_0 = j.value("sigma_0", spec.sigma_0);
  if (j.contains("sparsity_keep") && !j.at("sparsity_keep").is_null())
    spec.sparsity_keep = j.at("sparsity_keep").get<int>();
  spec.seed = j.value("seed", spec.seed);
  spec.validate();
  return spec;
}

static Mode mode_from_string(const std::string& name) {
  if (name == "dglasso") return Mode::Dglasso;
  if (name == "mlem") return Mode::Mlem;
  if (name == "a_only") return Mode::AOnly;
  if (name == "p_only") return Mode::POnly;
  throw InvalidConfig("unknown mode '" + name + "'");
}

nlohmann::json to_json(const SolverConfig<double>& cfg) {
  return nlohmann::json{{"mode", mode_name(cfg.mode)},
                        {"lambda_A", cfg.lambda_A},
                        {"lambda_P", cfg.lambda_P},
                        {"theta_A", cfg.theta_A},
                        {"theta_P", cfg.theta_P},
                        {"epsilon", cfg.epsilon},
                        {"max_outer", cfg.max_outer},
                        {"vartheta", cfg.inner.vartheta},
                        {"xi", cfg.inner.xi},
                        {"max_inner", cfg.inner.max_iter}};
}

SolverConfig<double> solver_config_from_json(const nlohmann::json& j) {
  SolverConfig<double> cfg;
  if (j.contains("mode")) cfg.mode = mode_from_string(j.at("mode"));
  cfg.lambda_A = j.value("lambda_A", cfg.lambda_A);
  cfg.lambda_P = j.value("lambda_P", cfg.lambda_P);
  cfg.theta_A = j.value("theta_A", cfg.theta_A);
  cfg.theta_P = j.value("theta_P", cfg.theta_P);
  cfg.epsilon = j.value("epsilon", cfg.epsilon);
  cfg.max_outer = j.value("max_outer", cfg.max_outer);
  cfg.inner.vartheta = j.value("vartheta", cfg.inner.vartheta);
  cfg.inner.xi = j.value("xi", cfg.inner.xi);
  cfg.inner.max_iter = j.value("max_inner", cfg.inner.max_iter);
  cfg.validate();
  return cfg;
}

nlohmann::json to_json(const EdgeScores& s) {
  return nlohmann::json{{"auc", s.auc_defined ? nlohmann::json(s.auc)
                                              : nlohmann::json()},
                        {"f1", s.f1},
                        {"precision", s.precision},
                        {"recall", s.recall},
                        {"specificity", s.specificity},
                        {"accuracy", s.accuracy},
                        {"threshold", s.threshold}};
}

nlohmann::json to_json(const MetricsReport& r) {
  return nlohmann::json{{"rmse_A", r.rmse_A},
                        {"rmse_P", r.rmse_P},
                        {"rmse_Q", r.rmse_Q},
                        {"edges_A", to_json(r.edges_A)},
                        {"edges_P", to_json(r.edges_P)},
                        {"cnmse_filter", r.cnmse_filter},
                        {"cnmse_smooth", r.cnmse_smooth},
                        {"cnmse_pred", r.cnmse_pred},
                        {"test_negloglik", r.test_negloglik}};
}

}  // namespace dglasso::io
