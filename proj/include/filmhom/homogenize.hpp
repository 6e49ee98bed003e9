#pragma once

#include <vector>

#include <Eigen/Core>

#include "filmhom/cell_solver.hpp"
#include "filmhom/energy.hpp"
#include "filmhom/profile.hpp"

namespace filmhom {

struct CellOptions {
    SolverOptions solver;
    // Cells along the transverse axis of cylinder problems; 0 means N.
    int vertical_layers = 0;
};

struct HomogenizedSample {
    double t = 0.0;
    DeformationGradient F;
    double value = 0.0;
    double theta = 0.0; // area fraction of E_t on the grid
    SolveReport report;
    int N = 0;
};

/// The cylinder E_t x (0,1) on a periodic grid with N cells per in-plane
/// axis and `layers` transverse cells. The transverse axis is last.
struct CylinderMask {
    Lattice lattice;
    std::vector<std::uint8_t> occupancy;
    double theta = 0.0;
};

CylinderMask cylinder_mask(const Profile& profile, double t, int N, int layers);

/// In-plane cell formula for W = ||.||^p on E_t; Fbar is m x dim.
HomogenizedSample phi_sharp(const Profile& profile, double t, const Eigen::MatrixXd& Fbar, int N, double p,
                            const CellOptions& opts = {});

/// phi_sharp(t, Fbar) + theta(t) |F_n|^p for an m x (dim+1) matrix F.
HomogenizedSample psi(const Profile& profile, double t, const DeformationGradient& F, int N, double p,
                      const CellOptions& opts = {});

/// The same quantity from a (dim+1)-dimensional periodic solve on the
/// cylinder with affine offset F.
HomogenizedSample psi_cylinder_oracle(const Profile& profile, double t, const DeformationGradient& F, int N, double p,
                                      const CellOptions& opts = {});

/// Periodic cylinder cell formula for a convex W on m x (dim+1) matrices.
/// Throws ConfigError when W is not known to be convex.
HomogenizedSample w_hom(const Profile& profile, double t, const DeformationGradient& F, const EnergyDensity& W, int N,
                        const CellOptions& opts = {});

/// Growing-cube approximation with zero boundary values on (0,T)^(dim+1);
/// the period grid has N cells on every axis.
DirichletSolution w_hom_cube_oracle(const Profile& profile, double t, const DeformationGradient& F,
                                    const EnergyDensity& W, int T, int N, const SolverOptions& opts = {});

struct KernelOptions {
    double p = 2.0;
    int m = 1;
    bool confirm = true;
    double kernel_tolerance = 1e-6;
    double coercivity_floor = 1e-3;
    CellOptions cell;
};

struct KernelResult {
    double t = 0.0;
    int k = 0;    // kernel dimension divided by m
    int rank = 0; // wrap-lattice rank
    std::vector<Eigen::VectorXi> wrap_lattice;
    std::vector<Eigen::VectorXd> xi;     // orthonormal, spans the wrap lattice
    std::vector<Eigen::VectorXd> kernel_directions;
    bool confirmed = false;              // energetic pass ran and agreed
    double max_kernel_value = 0.0;       // largest phi over kernel probes
    double min_coercive_ratio = 0.0;     // smallest phi / |Fbar xi|^p over coercive probes
};

/// Geometric kernel of phi_sharp(t, .) from the wrap lattice of E_t,
/// optionally confirmed energetically. Throws StructuralInconsistency when
/// the two verdicts disagree.
KernelResult kernel(const Profile& profile, double t, int N, const KernelOptions& opts = {});

int wrap_rank(const Profile& profile, double t, int N);

struct ThresholdInterval {
    double lo = 0.0;
    double hi = 1.0;
    int k = 0;
    int kernel_dim = 0; // k * m
    int wrap_rank = 0;
    std::vector<Eigen::VectorXd> xi;
    bool confirmed = false;
};

struct ThresholdReport {
    std::vector<double> thresholds; // t_1 <= ... <= t_dim
    std::vector<ThresholdInterval> intervals; // non-empty intervals only
    int dim = 0;
    int m = 1;
    int N = 0;
    double bisect_tol = 0.0;
};

ThresholdReport thresholds(const Profile& profile, int N, double bisect_tol, const KernelOptions& opts = {});

struct BoundsReport {
    double alpha = 0.0;
    double beta = 0.0;
    int samples = 0;
    int excluded = 0;
    bool ok = false;
};

/// Fits the two-sided bound of psi against sum_i |Fbar xi_i|^p + |F_n|^p
/// for t in (lo, s] of the given interval.
BoundsReport bounds_check(const Profile& profile, const ThresholdInterval& interval, double s,
                          const std::vector<DeformationGradient>& F_samples, int t_samples, int N, double p,
                          const CellOptions& opts = {});

} // namespace filmhom
