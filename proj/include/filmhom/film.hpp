#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "filmhom/energy.hpp"
#include "filmhom/homogenize.hpp"
#include "filmhom/profile.hpp"

namespace filmhom {

struct QuadratureOptions {
    int initial_nodes = 8;      // midpoint nodes per panel at level 0
    double rel_tol = 1e-3;
    double abs_tol = 1e-9;
    int max_levels = 7;
    bool split_at_thresholds = true;
    double bisect_tol = 1e-6;
};

struct FilmOptions {
    int N = 64;
    // Minimizers of the cylinder problem are constant along the transverse
    // axis (average over x_n and use convexity), so one layer is exact.
    CellOptions cell{SolverOptions{}, 1};
    QuadratureOptions quad;
    double argmin_tol = 1e-6;
};

struct WTildeResult {
    double value = 0.0;
    Eigen::VectorXd argmin;
    int evaluations = 0;
    bool converged = true;
};

/// inf over F_n of w_hom(t, (Fbar | F_n)).
WTildeResult w_tilde(const Profile& profile, const EnergyDensity& W, double t, const Eigen::MatrixXd& Fbar,
                     const FilmOptions& opts = {});

struct FilmDensityEntry {
    Eigen::MatrixXd Fbar;
    double value = 0.0;
    std::vector<double> breakpoints; // panel ends, thresholds included
    std::vector<double> nodes;
    std::vector<double> weights;
    std::vector<double> samples;     // w_tilde at each node
    std::vector<Eigen::VectorXd> argmins;
    int levels = 0;
    std::vector<double> history;     // estimate per refinement level
    bool converged = false;
};

struct FilmDensityTable {
    std::vector<FilmDensityEntry> entries;
    QuadratureOptions quad;
    int N = 0;
};

/// Quadrature failure; carries the best estimate and node history.
struct QuadratureError : ConvergenceError {
    QuadratureError(const std::string& what, FilmDensityEntry entry)
        : ConvergenceError(what), best(std::move(entry)) {}
    FilmDensityEntry best;
};

/// Integral over t in (0,1) of w_tilde(t, Fbar) by composite midpoint
/// quadrature, split at the degeneracy thresholds unless disabled.
FilmDensityEntry w_bar(const Profile& profile, const EnergyDensity& W, const Eigen::MatrixXd& Fbar,
                       const FilmOptions& opts = {});

/// Boundary datum on the lateral boundary of omega. Only affine data are
/// supported.
struct BoundaryDatum {
    Eigen::MatrixXd gradient;
    bool affine = true;

    static BoundaryDatum linear(const Eigen::MatrixXd& Fbar) { return {Fbar, true}; }
};

struct MembraneResult {
    double value = 0.0;
    FilmDensityEntry density;
    std::string certificate;
};

/// Minimum of the limit membrane energy over omega = prod (0, L_i) for
/// affine boundary data; the affine map is a minimizer by convexity.
MembraneResult membrane_min(const std::vector<double>& omega, const BoundaryDatum& datum, const Profile& profile,
                            const EnergyDensity& W, const FilmOptions& opts = {});
double membrane_min_value(const std::vector<double>& omega, double w_bar_value);

struct DirectGrid {
    std::vector<double> omega{1.0};
    int cells_per_delta = 8;
    int transverse_cells = 32;
};

struct DirectResult {
    double value = 0.0;
    SolveReport report;
    std::vector<int> cells;
    std::size_t occupied_cells = 0;
};

/// Discrete minimum of the film energy over Omega(eps, delta) with
/// u = Fbar x_alpha on (boundary of omega) x (-eps, eps) and free top and
/// bottom surfaces. With `scaled` the problem is posed on omega x (-1, 1)
/// with the transverse derivative divided by eps, and the result is m/eps.
DirectResult direct_min(const Profile& profile, double eps, double delta, const BoundaryDatum& datum,
                        const DirectGrid& grid, const EnergyDensity& W, const SolverOptions& opts = {},
                        bool scaled = false);

struct GammaEntry {
    double eps = 0.0;
    double delta = 0.0;
    double minimum = 0.0;
    double scaled = 0.0;
    double gap = 0.0;
    SolveReport report;
};

struct GammaCheckReport {
    std::vector<GammaEntry> entries;
    double target = 0.0;
    double w_bar = 0.0;
    bool trend_nonincreasing = false;
    bool aborted = false;
    std::string error;
};

struct GammaOptions {
    DirectGrid grid;
    double delta_exponent = 2.0; // delta = eps^exponent
    FilmOptions film;
    SolverOptions solver;
};

GammaCheckReport gamma_check(const Profile& profile, const EnergyDensity& W, const BoundaryDatum& datum,
                             const std::vector<double>& eps_schedule, const GammaOptions& opts = {});

/// Film-module hypotheses: min f > 0 and W convex.
void validate_film_inputs(const Profile& profile, const EnergyDensity& W);

} // namespace filmhom
