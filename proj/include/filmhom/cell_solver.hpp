#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "filmhom/energy.hpp"
#include "filmhom/profile.hpp"
#include "filmhom/types.hpp"

namespace filmhom {

/// A structured grid of cells in dimension 1-3. Fields live on nodes; a
/// periodic axis stores no duplicated boundary layer.
struct Lattice {
    int dim = 1;
    std::array<int, 3> cells{1, 1, 1};
    std::array<bool, 3> periodic{true, true, true};
    std::array<double, 3> spacing{1.0, 1.0, 1.0};
    // Multiplies the difference quotient on each axis; 1/eps on the
    // transverse axis gives the rescaled thin-film gradient.
    std::array<double, 3> gradient_scale{1.0, 1.0, 1.0};

    /// The unit torus with `resolution` cells per axis.
    static Lattice torus(int dim, int resolution);
    /// A periodic cell (0,1)^dim with a per-axis resolution.
    static Lattice torus(int dim, std::array<int, 3> cells);
    /// A non-periodic box.
    static Lattice box(int dim, std::array<int, 3> cells, std::array<double, 3> spacing);

    int nodes_along(int axis) const { return periodic[axis] ? cells[axis] : cells[axis] + 1; }
    std::size_t cell_count() const;
    std::size_t node_count() const;
    double cell_volume() const;
    double min_spacing() const;
};

/// Occupancy over a lattice plus optional Dirichlet nodes (held at zero).
struct CellProblem {
    Lattice lattice;
    std::vector<std::uint8_t> occupied;  // per cell, axis 0 fastest
    std::vector<std::uint8_t> dirichlet; // per node; empty means none
};

/// Marks every node on a non-periodic face of the lattice whose axis is
/// listed in `axes`.
std::vector<std::uint8_t> boundary_nodes(const Lattice& lattice, std::array<bool, 3> axes);

enum class SolverMethod { Auto, ConjugateGradient, Descent };

SolverMethod parse_solver_method(const std::string& name);
std::string to_string(SolverMethod method);

struct SolverOptions {
    SolverMethod method = SolverMethod::Auto;
    double cg_tolerance = 1e-10;      // relative residual
    double descent_tolerance = 1e-8;  // RMS stress residual / (1 + |F|^(p-1))
    long max_iterations = 0;          // 0: 10 x (grid nodes)
    double smoothing = 1e-8;          // |x| -> sqrt(|x|^2 + s^2) for p < 2
    int history = 8;                  // L-BFGS memory
    bool record_trace = false;
};

struct SolveReport {
    long iterations = 0;
    double final_energy = 0.0;
    double residual = 0.0;
    double tolerance = 0.0;
    bool converged = false;
    std::string method;
    double smoothing = 0.0;
    int gauge_components = 0;
    bool nonconvex_warning = false;
    std::vector<double> energy_trace;
};

/// Periodic (or Dirichlet) discrete corrector, m x nodes.
struct CorrectorField {
    Lattice lattice;
    int m = 1;
    Eigen::MatrixXd values;

    std::size_t node_index(int i0, int i1 = 0, int i2 = 0) const;
    /// Wrapped lookup on periodic axes.
    double operator()(int component, int i0, int i1 = 0, int i2 = 0) const { return values(component, node_index(i0, i1, i2)); }
};

struct CellSolution {
    double value = 0.0; // integral of W(F + D_h v) over occupied cells
    CorrectorField corrector;
    SolveReport report;
};

/// Minimizes sum_{occupied c} |c| W(F + D_h v) over node fields v that vanish
/// on Dirichlet nodes. D_h is the forward difference from each cell's lower
/// corner, wrapped on periodic axes. Nodes touching no occupied cell stay at
/// zero and every node-coupled component without a Dirichlet node is fixed
/// to zero mean.
CellSolution minimize(const CellProblem& problem, const EnergyDensity& W, const DeformationGradient& F,
                      const SolverOptions& opts = {});

/// Cell problem on the unit torus: the value is the average over the cell.
CellSolution minimize_periodic(const CellMask& mask, const EnergyDensity& W, const DeformationGradient& F,
                               const SolverOptions& opts = {});
CellSolution minimize_periodic(const Lattice& torus, const std::vector<std::uint8_t>& occupancy,
                               const EnergyDensity& W, const DeformationGradient& F, const SolverOptions& opts = {});

struct DirichletSolution {
    double value = 0.0; // (1/T^n) times the box integral
    SolveReport report;
};

/// Growing-cube problem on (0,T)^dim with the periodic mask replicated T
/// times per axis and zero boundary values.
DirichletSolution minimize_dirichlet(const Lattice& period, const std::vector<std::uint8_t>& occupancy, int T,
                                     const EnergyDensity& W, const DeformationGradient& F,
                                     const SolverOptions& opts = {});

/// Discrete energy of a given field (no minimization).
double discrete_energy(const CellProblem& problem, const EnergyDensity& W, const DeformationGradient& F,
                       const Eigen::MatrixXd& values);

/// Gradient of the discrete energy with respect to free node values;
/// entries on frozen or Dirichlet nodes are zero.
Eigen::MatrixXd discrete_energy_gradient(const CellProblem& problem, const EnergyDensity& W,
                                         const DeformationGradient& F, const Eigen::MatrixXd& values);

} // namespace filmhom
