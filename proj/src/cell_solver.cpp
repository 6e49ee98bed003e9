#include "filmhom/cell_solver.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <numeric>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

namespace filmhom {

Lattice Lattice::torus(int dim, int resolution) { return torus(dim, {resolution, resolution, resolution}); }

Lattice Lattice::torus(int dim, std::array<int, 3> cells) {
    if (dim < 1 || dim > 3) throw ConfigError("lattice dimension must be 1, 2 or 3");
    Lattice l;
    l.dim = dim;
    for (int a = 0; a < 3; ++a) {
        if (a < dim) {
            if (cells[a] < 1) throw ConfigError("lattice needs at least one cell per axis");
            l.cells[a] = cells[a];
            l.spacing[a] = 1.0 / cells[a];
        } else {
            l.cells[a] = 1;
        }
        l.periodic[a] = true;
    }
    return l;
}

Lattice Lattice::box(int dim, std::array<int, 3> cells, std::array<double, 3> spacing) {
    if (dim < 1 || dim > 3) throw ConfigError("lattice dimension must be 1, 2 or 3");
    Lattice l;
    l.dim = dim;
    for (int a = 0; a < 3; ++a) {
        if (a < dim) {
            if (cells[a] < 1 || !(spacing[a] > 0.0)) throw ConfigError("box needs positive cells and spacing");
            l.cells[a] = cells[a];
            l.spacing[a] = spacing[a];
            l.periodic[a] = false;
        } else {
            l.cells[a] = 1;
            l.periodic[a] = true;
        }
    }
    return l;
}

std::size_t Lattice::cell_count() const {
    std::size_t n = 1;
    for (int a = 0; a < dim; ++a) n *= std::size_t(cells[a]);
    return n;
}

std::size_t Lattice::node_count() const {
    std::size_t n = 1;
    for (int a = 0; a < dim; ++a) n *= std::size_t(nodes_along(a));
    return n;
}

double Lattice::cell_volume() const {
    double v = 1.0;
    for (int a = 0; a < dim; ++a) v *= spacing[a];
    return v;
}

double Lattice::min_spacing() const {
    double h = spacing[0];
    for (int a = 1; a < dim; ++a) h = std::min(h, spacing[a]);
    return h;
}

std::vector<std::uint8_t> boundary_nodes(const Lattice& lattice, std::array<bool, 3> axes) {
    std::vector<std::uint8_t> out(lattice.node_count(), 0);
    const int n0 = lattice.nodes_along(0);
    const int n1 = lattice.dim > 1 ? lattice.nodes_along(1) : 1;
    const int n2 = lattice.dim > 2 ? lattice.nodes_along(2) : 1;
    const std::array<int, 3> last{n0 - 1, n1 - 1, n2 - 1};
    std::size_t idx = 0;
    for (int k = 0; k < n2; ++k)
        for (int j = 0; j < n1; ++j)
            for (int i = 0; i < n0; ++i, ++idx) {
                const std::array<int, 3> c{i, j, k};
                for (int a = 0; a < lattice.dim; ++a)
                    if (axes[a] && !lattice.periodic[a] && (c[a] == 0 || c[a] == last[a])) out[idx] = 1;
            }
    return out;
}

SolverMethod parse_solver_method(const std::string& name) {
    if (name == "auto") return SolverMethod::Auto;
    if (name == "cg") return SolverMethod::ConjugateGradient;
    if (name == "descent") return SolverMethod::Descent;
    throw ConfigError("unknown solver method '" + name + "' (expected auto, cg or descent)");
}

std::string to_string(SolverMethod method) {
    switch (method) {
    case SolverMethod::Auto:
        return "auto";
    case SolverMethod::ConjugateGradient:
        return "cg";
    case SolverMethod::Descent:
        return "descent";
    }
    return "auto";
}

std::size_t CorrectorField::node_index(int i0, int i1, int i2) const {
    std::array<int, 3> c{i0, i1, i2};
    std::size_t idx = 0, stride = 1;
    for (int a = 0; a < lattice.dim; ++a) {
        const int n = lattice.nodes_along(a);
        int v = c[a];
        if (lattice.periodic[a]) {
            v %= n;
            if (v < 0) v += n;
        }
        idx += stride * std::size_t(v);
        stride *= std::size_t(n);
    }
    return idx;
}

namespace {

/// Flattened stencil data and node classification for one problem.
struct Assembly {
    int dim = 1;
    int m = 1;
    double volume = 1.0;
    std::array<double, 3> inv_h{1.0, 1.0, 1.0};
    std::vector<std::int32_t> stencil; // per active cell: base, then one neighbor per axis
    std::size_t active_cells = 0;
    std::size_t nodes = 0;
    std::vector<std::uint8_t> free;       // per node
    std::vector<std::int32_t> gauge;      // gauge group per node, -1 if none
    std::vector<double> gauge_weight;     // 1 / (free nodes in group)
    int gauge_groups = 0;
    std::size_t free_count = 0;

    std::size_t width() const { return std::size_t(dim) + 1; }
};

int find_root(std::vector<std::int32_t>& parent, std::int32_t x) {
    while (parent[x] != x) {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    return x;
}

Assembly assemble(const CellProblem& problem, int m) {
    const Lattice& L = problem.lattice;
    if (problem.occupied.size() != L.cell_count()) throw std::invalid_argument("occupancy size does not match lattice");
    if (!problem.dirichlet.empty() && problem.dirichlet.size() != L.node_count())
        throw std::invalid_argument("dirichlet marker size does not match lattice");

    Assembly a;
    a.dim = L.dim;
    a.m = m;
    a.volume = L.cell_volume();
    for (int k = 0; k < L.dim; ++k) a.inv_h[k] = L.gradient_scale[k] / L.spacing[k];
    a.nodes = L.node_count();

    std::array<int, 3> nn{1, 1, 1};
    std::array<std::size_t, 3> nstride{1, 1, 1};
    for (int k = 0; k < L.dim; ++k) nn[k] = L.nodes_along(k);
    nstride[1] = std::size_t(nn[0]);
    nstride[2] = std::size_t(nn[0]) * nn[1];

    const int c0 = L.cells[0], c1 = L.dim > 1 ? L.cells[1] : 1, c2 = L.dim > 2 ? L.cells[2] : 1;
    a.stencil.reserve(std::size_t(std::count(problem.occupied.begin(), problem.occupied.end(), 1)) * a.width());
    std::size_t cell = 0;
    for (int k = 0; k < c2; ++k)
        for (int j = 0; j < c1; ++j)
            for (int i = 0; i < c0; ++i, ++cell) {
                if (!problem.occupied[cell]) continue;
                const std::array<int, 3> c{i, j, k};
                std::size_t base = 0;
                for (int ax = 0; ax < L.dim; ++ax) base += nstride[ax] * std::size_t(c[ax]);
                a.stencil.push_back(std::int32_t(base));
                for (int ax = 0; ax < L.dim; ++ax) {
                    int next = c[ax] + 1;
                    if (L.periodic[ax] && next == nn[ax]) next = 0;
                    a.stencil.push_back(std::int32_t(base + (std::size_t(next) - std::size_t(c[ax])) * nstride[ax]));
                }
                ++a.active_cells;
            }

    // Node classification: touched nodes are free unless Dirichlet.
    std::vector<std::uint8_t> touched(a.nodes, 0);
    for (auto idx : a.stencil) touched[idx] = 1;
    a.free.assign(a.nodes, 0);
    for (std::size_t n = 0; n < a.nodes; ++n)
        a.free[n] = touched[n] && (problem.dirichlet.empty() || !problem.dirichlet[n]);
    a.free_count = std::size_t(std::count(a.free.begin(), a.free.end(), 1));

    // Node-coupling components; a component touching a Dirichlet node needs no gauge.
    std::vector<std::int32_t> parent(a.nodes);
    std::iota(parent.begin(), parent.end(), 0);
    const std::size_t w = a.width();
    for (std::size_t c = 0; c < a.active_cells; ++c) {
        const std::int32_t r0 = find_root(parent, a.stencil[c * w]);
        for (std::size_t s = 1; s < w; ++s) {
            const std::int32_t r = find_root(parent, a.stencil[c * w + s]);
            if (r != r0) parent[r] = r0;
        }
    }
    std::vector<std::uint8_t> anchored(a.nodes, 0);
    for (std::size_t n = 0; n < a.nodes; ++n)
        if (touched[n] && !a.free[n]) anchored[find_root(parent, std::int32_t(n))] = 1;
    std::vector<std::int32_t> group_of_root(a.nodes, -1);
    a.gauge.assign(a.nodes, -1);
    std::vector<std::size_t> group_size;
    for (std::size_t n = 0; n < a.nodes; ++n) {
        if (!a.free[n]) continue;
        const std::int32_t r = find_root(parent, std::int32_t(n));
        if (anchored[r]) continue;
        if (group_of_root[r] < 0) {
            group_of_root[r] = a.gauge_groups++;
            group_size.push_back(0);
        }
        a.gauge[n] = group_of_root[r];
        ++group_size[group_of_root[r]];
    }
    a.gauge_weight.resize(group_size.size());
    for (std::size_t g = 0; g < group_size.size(); ++g) a.gauge_weight[g] = 1.0 / double(group_size[g]);
    return a;
}

/// Zeroes non-free nodes and removes each gauge group's mean.
void project(const Assembly& a, Eigen::MatrixXd& v) {
    if (a.gauge_groups > 0) {
        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(a.m, a.gauge_groups);
        for (std::size_t n = 0; n < a.nodes; ++n)
            if (a.gauge[n] >= 0) sums.col(a.gauge[n]) += v.col(n);
        for (int g = 0; g < a.gauge_groups; ++g) sums.col(g) *= a.gauge_weight[g];
        for (std::size_t n = 0; n < a.nodes; ++n)
            if (a.gauge[n] >= 0) v.col(n) -= sums.col(a.gauge[n]);
    }
    for (std::size_t n = 0; n < a.nodes; ++n)
        if (!a.free[n]) v.col(n).setZero();
}

void cell_gradient(const Assembly& a, const Eigen::MatrixXd& v, std::size_t c, SmallMatrixd& G) {
    const std::size_t w = a.width();
    const std::int32_t base = a.stencil[c * w];
    for (int k = 0; k < a.dim; ++k) G.col(k) += (v.col(a.stencil[c * w + 1 + k]) - v.col(base)) * a.inv_h[k];
}

void scatter(const Assembly& a, const SmallMatrixd& S, std::size_t c, Eigen::MatrixXd& g) {
    const std::size_t w = a.width();
    const std::int32_t base = a.stencil[c * w];
    for (int k = 0; k < a.dim; ++k) {
        const double coeff = a.volume * a.inv_h[k];
        g.col(a.stencil[c * w + 1 + k]) += coeff * S.col(k);
        g.col(base) -= coeff * S.col(k);
    }
}

double energy(const Assembly& a, const EnergyDensity& W, const SmallMatrixd& F, const Eigen::MatrixXd& v,
              double smoothing) {
    double sum = 0.0;
    SmallMatrixd G;
    for (std::size_t c = 0; c < a.active_cells; ++c) {
        G = F;
        cell_gradient(a, v, c, G);
        sum += W.value(G, smoothing);
    }
    return a.volume * sum;
}

double energy_and_gradient(const Assembly& a, const EnergyDensity& W, const SmallMatrixd& F, const Eigen::MatrixXd& v,
                           double smoothing, Eigen::MatrixXd& g) {
    g.setZero(a.m, Eigen::Index(a.nodes));
    double sum = 0.0;
    SmallMatrixd G, S;
    for (std::size_t c = 0; c < a.active_cells; ++c) {
        G = F;
        cell_gradient(a, v, c, G);
        sum += W.value(G, smoothing);
        W.stress(G, S, smoothing);
        scatter(a, S, c, g);
    }
    return a.volume * sum;
}

/// Applies the Hessian of a quadratic density: v -> sum_c |c| D_c^T (2A) D_c v.
void apply_hessian(const Assembly& a, const EnergyDensity& W, const Eigen::MatrixXd& v, Eigen::MatrixXd& out) {
    out.setZero(a.m, Eigen::Index(a.nodes));
    SmallMatrixd G, S;
    for (std::size_t c = 0; c < a.active_cells; ++c) {
        G.setZero(a.m, a.dim);
        cell_gradient(a, v, c, G);
        W.linear_stress(G, S);
        scatter(a, S, c, out);
    }
}

Eigen::MatrixXd hessian_diagonal(const Assembly& a, const EnergyDensity& W) {
    Eigen::MatrixXd diag = Eigen::MatrixXd::Zero(a.m, Eigen::Index(a.nodes));
    const std::size_t w = a.width();
    // Per-row blocks A_r[k][l] = A((r,k),(r,l)) of the 2A operator.
    std::vector<Eigen::MatrixXd> blocks(a.m, Eigen::MatrixXd::Identity(a.dim, a.dim) * 2.0);
    if (W.kind() == EnergyDensity::Kind::QuadraticForm) {
        for (int r = 0; r < a.m; ++r)
            for (int k = 0; k < a.dim; ++k)
                for (int l = 0; l < a.dim; ++l) blocks[r](k, l) = 2.0 * W.form()(r + a.m * k, r + a.m * l);
    }
    Eigen::VectorXd base_coeff(a.dim);
    for (int k = 0; k < a.dim; ++k) base_coeff[k] = -a.inv_h[k];
    for (int r = 0; r < a.m; ++r) {
        const double base_term = a.volume * base_coeff.dot(blocks[r] * base_coeff);
        for (std::size_t c = 0; c < a.active_cells; ++c) {
            diag(r, a.stencil[c * w]) += base_term;
            for (int k = 0; k < a.dim; ++k)
                diag(r, a.stencil[c * w + 1 + k]) += a.volume * a.inv_h[k] * a.inv_h[k] * blocks[r](k, k);
        }
    }
    return diag;
}

constexpr long kNewtonAfter = 400;
constexpr std::size_t kNewtonMaxDofs = 150000;
// Sparse LDL^T fill-in grows fast on 3-d grids; beyond this size use CG.
constexpr Eigen::Index kNewtonDirect3dDofs = 4096;
constexpr int kNewtonStall = 30; // steps without halving the residual

double dot(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) { return x.cwiseProduct(y).sum(); }

long default_iterations(const Assembly& a, const SolverOptions& opts) {
    return opts.max_iterations > 0 ? opts.max_iterations : std::max<long>(100, 10 * long(a.nodes));
}

void solve_cg(const Assembly& a, const EnergyDensity& W, const SmallMatrixd& F, const SolverOptions& opts,
              Eigen::MatrixXd& x, SolveReport& report) {
    report.method = "cg";
    report.tolerance = opts.cg_tolerance;
    Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(a.m, Eigen::Index(a.nodes));
    Eigen::MatrixXd b;
    energy_and_gradient(a, W, F, zero, 0.0, b);
    b = -b;
    project(a, b);
    x = zero;
    const double bnorm = b.norm();
    if (bnorm == 0.0) {
        report.converged = true;
        report.residual = 0.0;
        return;
    }

    Eigen::MatrixXd diag = hessian_diagonal(a, W);
    Eigen::MatrixXd inv_diag = diag.unaryExpr([](double d) { return d > 0.0 ? 1.0 / d : 0.0; });

    Eigen::MatrixXd r = b, z = inv_diag.cwiseProduct(r), p, Ap;
    project(a, z);
    p = z;
    double rz = dot(r, z);
    const long max_it = default_iterations(a, opts);
    double rel = 1.0;
    long it = 0;
    for (; it < max_it; ++it) {
        apply_hessian(a, W, p, Ap);
        project(a, Ap);
        const double pAp = dot(p, Ap);
        if (!(pAp > 0.0)) break;
        const double alpha = rz / pAp;
        x += alpha * p;
        r -= alpha * Ap;
        if (opts.record_trace) report.energy_trace.push_back(energy(a, W, F, x, 0.0));
        rel = r.norm() / bnorm;
        if (rel <= opts.cg_tolerance) {
            ++it;
            break;
        }
        z = inv_diag.cwiseProduct(r);
        project(a, z);
        const double rz_next = dot(r, z);
        p = z + (rz_next / rz) * p;
        rz = rz_next;
    }
    // True residual of the projected normal equations.
    apply_hessian(a, W, x, Ap);
    project(a, Ap);
    report.residual = (b - Ap).norm() / bnorm;
    report.iterations = it;
    report.converged = report.residual <= opts.cg_tolerance;
}

/// Damped Newton steps on the (smoothed) energy with a sparse LDL^T solve.
/// A tiny diagonal shift removes the constant null directions of gauge
/// groups and the degenerate curvature of p > 2 densities at zero stress;
/// the projected gradient has no component along the former.
bool newton_polish(const Assembly& a, const EnergyDensity& W, const SmallMatrixd& F, double s, long budget,
                   const std::function<double(const Eigen::MatrixXd&)>& residual_of, double tolerance,
                   bool trace, Eigen::MatrixXd& x, SolveReport& report, long& used) {
    std::vector<std::int32_t> dof(a.nodes, -1);
    std::int32_t count = 0;
    for (std::size_t n = 0; n < a.nodes; ++n)
        if (a.free[n]) dof[n] = count++;
    const int m = a.m, width = int(a.width());
    const Eigen::Index size = Eigen::Index(count) * m;

    // dG(i,k)/dv_i at the base node is -inv_h[k]; at neighbor k it is +inv_h[k].
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m * a.dim, m * width);
    for (int k = 0; k < a.dim; ++k)
        for (int i = 0; i < m; ++i) {
            B(i + m * k, i) = -a.inv_h[k];
            B(i + m * k, i + m * (k + 1)) = a.inv_h[k];
        }

    Eigen::MatrixXd g, x_next, H, local;
    double f = energy_and_gradient(a, W, F, x, s, g);
    project(a, g);
    report.residual = residual_of(g);
    double best = report.residual;
    int since_best = 0;
    Eigen::MatrixXd g_next;
    SmallMatrixd G;
    std::vector<Eigen::Triplet<double>> triplets;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> direct;
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                             Eigen::IncompleteCholesky<double>>
        iterative;
    Eigen::SparseMatrix<double> K(size, size);
    const std::size_t w = a.width();
    while (used < budget && report.residual > tolerance) {
        triplets.clear();
        triplets.reserve(a.active_cells * std::size_t(m * width) * std::size_t(m * width));
        double diag_sum = 0.0;
        for (std::size_t c = 0; c < a.active_cells; ++c) {
            G = F;
            cell_gradient(a, x, c, G);
            W.hessian(G, H, s);
            local.noalias() = a.volume * B.transpose() * H * B;
            for (int lc = 0; lc < m * width; ++lc) {
                const std::int32_t dc = dof[a.stencil[c * w + std::size_t(lc / m)]];
                if (dc < 0) continue;
                for (int lr = 0; lr < m * width; ++lr) {
                    const std::int32_t dr = dof[a.stencil[c * w + std::size_t(lr / m)]];
                    if (dr < 0) continue;
                    triplets.emplace_back(dr * m + lr % m, dc * m + lc % m, local(lr, lc));
                }
                diag_sum += local(lc, lc);
            }
        }
        K.setFromTriplets(triplets.begin(), triplets.end());
        const double shift = 1e-12 * std::max(diag_sum / double(std::max<Eigen::Index>(1, size)), 1e-300);
        for (Eigen::Index i = 0; i < size; ++i) K.coeffRef(i, i) += shift;
        Eigen::VectorXd rhs(size);
        for (std::size_t n = 0; n < a.nodes; ++n)
            if (dof[n] >= 0)
                for (int i = 0; i < m; ++i) rhs[dof[n] * m + i] = -g(i, Eigen::Index(n));
        Eigen::VectorXd step_dofs;
        if (a.dim < 3 || size <= kNewtonDirect3dDofs) {
            direct.compute(K);
            if (direct.info() != Eigen::Success) return false;
            step_dofs = direct.solve(rhs);
            if (direct.info() != Eigen::Success) return false;
        } else {
            // Inexact Newton: the line search tolerates a loose inner solve.
            iterative.setTolerance(1e-6);
            iterative.setMaxIterations(2000);
            iterative.compute(K);
            if (iterative.info() != Eigen::Success) return false;
            step_dofs = iterative.solve(rhs);
        }
        if (!step_dofs.allFinite()) return false;
        Eigen::MatrixXd d = Eigen::MatrixXd::Zero(m, Eigen::Index(a.nodes));
        for (std::size_t n = 0; n < a.nodes; ++n)
            if (dof[n] >= 0)
                for (int i = 0; i < m; ++i) d(i, Eigen::Index(n)) = step_dofs[dof[n] * m + i];
        project(a, d);
        const double slope = dot(g, d);
        if (!(slope < 0.0)) return false;

        // Close to the minimizer the energy decrease drops below rounding;
        // there a step is judged by the stress residual instead.
        const double noise = 64.0 * std::numeric_limits<double>::epsilon() * (std::abs(f) + 1e-300);
        double step = 1.0, f_next = f;
        bool accepted = false;
        for (int bt = 0; bt < 40; ++bt) {
            x_next = x + step * d;
            f_next = energy(a, W, F, x_next, s);
            if (f_next <= f + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            if (f_next <= f + noise) {
                energy_and_gradient(a, W, F, x_next, s, g_next);
                project(a, g_next);
                if (residual_of(g_next) < report.residual) {
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        ++used;
        if (!accepted) return false;
        x.swap(x_next);
        f = energy_and_gradient(a, W, F, x, s, g);
        project(a, g);
        if (trace) report.energy_trace.push_back(f);
        report.residual = residual_of(g);
        if (report.residual < 0.5 * best) {
            best = report.residual;
            since_best = 0;
        } else if (++since_best > kNewtonStall) {
            return false;
        }
    }
    return report.residual <= tolerance;
}

void solve_descent(const Assembly& a, const EnergyDensity& W, const SmallMatrixd& F, const SolverOptions& opts,
                   Eigen::MatrixXd& x, SolveReport& report) {
    report.method = "descent";
    const bool smooth = W.p() < 2.0 && W.kind() != EnergyDensity::Kind::QuadraticForm &&
                        W.kind() != EnergyDensity::Kind::Custom;
    const double s = smooth ? opts.smoothing : 0.0;
    report.smoothing = s;
    report.tolerance = opts.descent_tolerance * (1.0 + std::pow(F.norm(), W.p() - 1.0));

    double inv_h_max = 0.0;
    for (int k = 0; k < a.dim; ++k) inv_h_max = std::max(inv_h_max, a.inv_h[k]);
    const double stress_scale = a.volume * inv_h_max * std::sqrt(double(std::max<std::size_t>(1, a.free_count)));
    auto residual_of = [&](const Eigen::MatrixXd& g) { return g.norm() / stress_scale; };

    x = Eigen::MatrixXd::Zero(a.m, Eigen::Index(a.nodes));
    Eigen::MatrixXd g, g_next, x_next, d;
    double f = energy_and_gradient(a, W, F, x, s, g);
    project(a, g);
    if (opts.record_trace) report.energy_trace.push_back(f);

    const long max_it = default_iterations(a, opts);
    long it = 0;
    report.residual = residual_of(g);
    const double displacement_scale = a.inv_h[0] > 0 ? (1.0 + F.norm()) / inv_h_max : 1.0;

    // L-BFGS with Armijo backtracking, up to `budget` total iterations.
    auto lbfgs = [&](long budget) {
        std::deque<Eigen::MatrixXd> S, Y;
        std::deque<double> rho;
        for (; it < budget && report.residual > report.tolerance; ++it) {
            d = -g;
            std::vector<double> alpha(S.size());
            for (int i = int(S.size()) - 1; i >= 0; --i) {
                alpha[i] = rho[i] * dot(S[i], d);
                d -= alpha[i] * Y[i];
            }
            if (!S.empty()) d *= dot(S.back(), Y.back()) / Y.back().squaredNorm();
            for (std::size_t i = 0; i < S.size(); ++i) {
                const double beta = rho[i] * dot(Y[i], d);
                d += (alpha[i] - beta) * S[i];
            }
            project(a, d);
            double slope = dot(g, d);
            if (!(slope < 0.0)) {
                S.clear();
                Y.clear();
                rho.clear();
                d = -g;
                slope = -g.squaredNorm();
            }

            double step = 1.0;
            if (S.empty()) {
                const double gmax = d.cwiseAbs().maxCoeff();
                step = gmax > 0.0 ? displacement_scale / gmax : 1.0;
            }
            double f_next = f;
            bool accepted = false;
            for (int bt = 0; bt < 60; ++bt) {
                x_next = x + step * d;
                f_next = energy(a, W, F, x_next, s);
                if (f_next <= f + 1e-4 * step * slope) {
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if (!accepted) {
                if (S.empty()) return; // no progress possible at working precision
                S.clear();
                Y.clear();
                rho.clear();
                continue;
            }
            energy_and_gradient(a, W, F, x_next, s, g_next);
            project(a, g_next);
            Eigen::MatrixXd sk = x_next - x;
            Eigen::MatrixXd yk = g_next - g;
            const double sy = dot(sk, yk);
            if (sy > 1e-300) {
                S.push_back(std::move(sk));
                Y.push_back(std::move(yk));
                rho.push_back(1.0 / sy);
                if (int(S.size()) > opts.history) {
                    S.pop_front();
                    Y.pop_front();
                    rho.pop_front();
                }
            }
            x.swap(x_next);
            g.swap(g_next);
            f = f_next;
            if (opts.record_trace) report.energy_trace.push_back(f);
            report.residual = residual_of(g);
        }
    };

    lbfgs(std::min(max_it, kNewtonAfter));
    // Degenerate or badly conditioned stationary points (p != 2 with a
    // vanishing local gradient) stall first-order methods; finish with Newton
    // when the factorization is affordable.
    if (report.residual > report.tolerance && it < max_it && a.free_count * std::size_t(a.m) <= kNewtonMaxDofs) {
        // The smoothed Hessian of a p < 2 density is huge where the stress
        // vanishes; walk the smoothing down so each stage starts near its
        // own minimizer.
        for (double sk = 1e-2 * (1.0 + F.norm()); s > 0.0 && sk > 2.0 * s && it < max_it; sk *= 0.1)
            newton_polish(a, W, F, sk, max_it, residual_of, report.tolerance, opts.record_trace, x, report, it);
        if (newton_polish(a, W, F, s, max_it, residual_of, report.tolerance, opts.record_trace, x, report, it))
            report.method = "descent+newton";
        f = energy_and_gradient(a, W, F, x, s, g);
        project(a, g);
        report.residual = residual_of(g);
    }
    if (report.residual > report.tolerance) lbfgs(max_it);
    report.iterations = it;
    report.converged = report.residual <= report.tolerance;
}

} // namespace

double discrete_energy(const CellProblem& problem, const EnergyDensity& W, const DeformationGradient& F,
                       const Eigen::MatrixXd& values) {
    check_dims(W, F);
    const Assembly a = assemble(problem, W.rows());
    return energy(a, W, SmallMatrixd(F), values, 0.0);
}

Eigen::MatrixXd discrete_energy_gradient(const CellProblem& problem, const EnergyDensity& W,
                                         const DeformationGradient& F, const Eigen::MatrixXd& values) {
    check_dims(W, F);
    const Assembly a = assemble(problem, W.rows());
    Eigen::MatrixXd g;
    energy_and_gradient(a, W, SmallMatrixd(F), values, 0.0, g);
    for (std::size_t n = 0; n < a.nodes; ++n)
        if (!a.free[n]) g.col(n).setZero();
    return g;
}

CellSolution minimize(const CellProblem& problem, const EnergyDensity& W, const DeformationGradient& F,
                      const SolverOptions& opts) {
    check_dims(W, F);
    if (F.cols() != problem.lattice.dim)
        throw std::invalid_argument("deformation gradient needs one column per lattice axis");

    const Assembly a = assemble(problem, W.rows());
    const SmallMatrixd F0(F);

    CellSolution out;
    out.corrector.lattice = problem.lattice;
    out.corrector.m = W.rows();
    out.report.gauge_components = a.gauge_groups;
    out.report.nonconvex_warning = !W.known_convex();

    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(a.m, Eigen::Index(a.nodes));
    if (a.active_cells == 0 || a.free_count == 0) {
        out.report.method = "none";
        out.report.converged = true;
        out.value = energy(a, W, F0, x, 0.0);
        out.report.final_energy = out.value;
        out.corrector.values = std::move(x);
        return out;
    }

    SolverMethod method = opts.method;
    if (method == SolverMethod::Auto)
        method = W.is_quadratic() ? SolverMethod::ConjugateGradient : SolverMethod::Descent;
    if (method == SolverMethod::ConjugateGradient && !W.is_quadratic())
        throw ConfigError("cg requires a quadratic energy density (p = 2 or quadratic_form)");

    if (method == SolverMethod::ConjugateGradient)
        solve_cg(a, W, F0, opts, x, out.report);
    else
        solve_descent(a, W, F0, opts, x, out.report);

    // The zero corrector is always admissible.
    const double zero_value = energy(a, W, F0, Eigen::MatrixXd::Zero(a.m, Eigen::Index(a.nodes)), 0.0);
    out.value = energy(a, W, F0, x, 0.0);
    if (out.value > zero_value) {
        out.value = zero_value;
        x.setZero();
    }
    out.report.final_energy = out.value;
    out.corrector.values = std::move(x);
    return out;
}

CellSolution minimize_periodic(const Lattice& torus, const std::vector<std::uint8_t>& occupancy,
                               const EnergyDensity& W, const DeformationGradient& F, const SolverOptions& opts) {
    CellProblem problem{torus, occupancy, {}};
    CellSolution sol = minimize(problem, W, F, opts);
    // The unit cell has volume one, so the integral is already the average.
    return sol;
}

CellSolution minimize_periodic(const CellMask& mask, const EnergyDensity& W, const DeformationGradient& F,
                               const SolverOptions& opts) {
    return minimize_periodic(Lattice::torus(mask.dim, mask.resolution), mask.occupancy, W, F, opts);
}

DirichletSolution minimize_dirichlet(const Lattice& period, const std::vector<std::uint8_t>& occupancy, int T,
                                     const EnergyDensity& W, const DeformationGradient& F,
                                     const SolverOptions& opts) {
    if (T < 1) throw ConfigError("cube side T must be a positive integer");
    if (occupancy.size() != period.cell_count()) throw std::invalid_argument("occupancy size does not match lattice");
    const int d = period.dim;
    std::array<int, 3> cells{1, 1, 1};
    std::array<double, 3> spacing{1.0, 1.0, 1.0};
    for (int a = 0; a < d; ++a) {
        cells[a] = period.cells[a] * T;
        spacing[a] = period.spacing[a];
    }
    CellProblem problem;
    problem.lattice = Lattice::box(d, cells, spacing);
    problem.occupied.resize(problem.lattice.cell_count());
    std::size_t idx = 0;
    for (int k = 0; k < (d > 2 ? cells[2] : 1); ++k)
        for (int j = 0; j < (d > 1 ? cells[1] : 1); ++j)
            for (int i = 0; i < cells[0]; ++i, ++idx) {
                std::size_t src = std::size_t(i % period.cells[0]);
                if (d > 1) src += std::size_t(period.cells[0]) * std::size_t(j % period.cells[1]);
                if (d > 2) src += std::size_t(period.cells[0]) * period.cells[1] * std::size_t(k % period.cells[2]);
                problem.occupied[idx] = occupancy[src];
            }
    problem.dirichlet = boundary_nodes(problem.lattice, {true, true, true});

    CellSolution sol = minimize(problem, W, F, opts);
    DirichletSolution out;
    double box_volume = 1.0;
    for (int a = 0; a < d; ++a) box_volume *= cells[a] * spacing[a];
    out.value = sol.value / box_volume;
    out.report = std::move(sol.report);
    return out;
}

} // namespace filmhom
