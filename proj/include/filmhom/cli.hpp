#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "filmhom/film.hpp"
#include "filmhom/homogenize.hpp"

namespace filmhom::cli {

enum ExitCode : int {
    kSuccess = 0,
    kConfigError = 2,
    kResolutionError = 3,
    kNonConvergence = 4,
    kStructuralInconsistency = 5,
};

struct ProfileSpec {
    std::string kind = "builtin"; // builtin | constant | file
    std::string name = "sin2-product";
    int dim = 2;
    double floor = 0.5;
    std::string path;
};

struct EnergySpec {
    std::string kind = "p_norm_power";
    double p = 2.0;
    std::optional<double> gamma;
    std::optional<double> beta;
    std::vector<double> A; // row-major (mn) x (mn)
};

struct RandomProbes {
    int count = 0;
    std::uint64_t seed = 1;
    double scale = 1.0;
};

struct GammaSpec {
    std::vector<double> eps;
    double delta_exponent = 2.0;
    int cells_per_delta = 8;
    int transverse_cells = 32;
};

/// Parsed and validated run configuration.
struct RunConfig {
    nlohmann::json source;
    ProfileSpec profile_spec;
    EnergySpec energy_spec;
    int m = 1;
    int N = 64;
    int vertical_layers = 0;
    SolverOptions solver;
    std::vector<double> t_grid;
    std::vector<Eigen::MatrixXd> F_probes;
    RandomProbes random_F;
    double bisect_tol = 1e-6;
    bool confirm_kernels = true;
    double coercivity_floor = 1e-3;
    QuadratureOptions quad;
    std::vector<Eigen::MatrixXd> film_Fbar;
    std::vector<double> omega;
    GammaSpec gamma;
    int cube_T = 2;
    bool write_csv = true;
    bool write_json = true;
    bool save_profile = false;

    Profile profile() const;
    int dim() const;
    /// Energy on m x (dim+1) matrices.
    EnergyDensity energy() const;
    CellOptions cell_options() const;
    FilmOptions film_options() const;
    /// Explicit probes followed by seeded random ones, each with `cols` columns.
    std::vector<Eigen::MatrixXd> probes(int cols) const;
};

RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);

/// FNV-1a over the canonical (sorted-key) dump of the config.
std::string config_hash(const nlohmann::json& j);

/// 12 significant digits, '.' decimal point, independent of the C locale.
std::string format_real(double x);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// The header row and data rows, without any comment preamble.
    std::string body() const;
};

struct RunContext {
    std::filesystem::path out_dir = ".";
    int jobs = 1;
    bool reproducible = false;
    bool oracle = false;
};

/// Runs body(i) for i in [0, count) on up to `jobs` threads. Exceptions are
/// rethrown in index order after all workers finish.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body);

int cmd_mask(const RunConfig& cfg, const RunContext& ctx);
int cmd_phi(const RunConfig& cfg, const RunContext& ctx);
int cmd_psi(const RunConfig& cfg, const RunContext& ctx);
int cmd_whom(const RunConfig& cfg, const RunContext& ctx);
int cmd_thresholds(const RunConfig& cfg, const RunContext& ctx);
int cmd_film(const RunConfig& cfg, const RunContext& ctx);
int cmd_gamma(const RunConfig& cfg, const RunContext& ctx);

/// Command-line entry point; `args` excludes the program name. Returns the
/// process exit code.
int run(const std::vector<std::string>& args);

/// Writes `# ` + preamble then the table body.
void write_csv(const std::filesystem::path& path, const CsvTable& table, const std::string& preamble);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

/// Strips the comment preamble ('#' lines) from a CSV file.
std::string read_csv_body(const std::filesystem::path& path);

} // namespace filmhom::cli
