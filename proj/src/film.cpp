#include "filmhom/film.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

namespace filmhom {

void validate_film_inputs(const Profile& profile, const EnergyDensity& W) {
    if (!(profile.min_value() > 0.0)) throw ConfigError("film computations require min f > 0");
    if (!W.known_convex()) throw ConfigError("film computations require a convex energy density");
    if (W.cols() != profile.dim() + 1)
        throw ConfigError("energy must act on m x (dim+1) matrices for a dim-dimensional profile");
}

namespace {

/// Golden-section search for a convex scalar function on [lo, hi].
template <typename Fn>
double golden_section(Fn&& fn, double lo, double hi, double tol, int& evaluations) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
    double fc = fn(c), fd = fn(d);
    evaluations += 2;
    while (b - a > tol) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = fn(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = fn(d);
        }
        ++evaluations;
    }
    return 0.5 * (a + b);
}

} // namespace

WTildeResult w_tilde(const Profile& profile, const EnergyDensity& W, double t, const Eigen::MatrixXd& Fbar,
                     const FilmOptions& opts) {
    validate_film_inputs(profile, W);
    const int m = int(Fbar.rows());
    WTildeResult out;
    out.argmin = Eigen::VectorXd::Zero(m);
    if (superlevel_mask(profile, t, opts.N).empty()) return out;

    Eigen::VectorXd Fn = Eigen::VectorXd::Zero(m);
    bool all_converged = true;
    auto objective = [&](const Eigen::VectorXd& column) {
        HomogenizedSample s = w_hom(profile, t, join(Fbar, column), W, opts.N, opts.cell);
        all_converged = all_converged && s.report.converged;
        return s.value;
    };

    const double initial_bracket = 2.0 * (1.0 + Fbar.norm());
    for (int sweep = 0; sweep < 50; ++sweep) {
        double change = 0.0;
        for (int r = 0; r < m; ++r) {
            double B = initial_bracket;
            double best = Fn[r];
            for (int expand = 0; expand < 30; ++expand) {
                const double lo = Fn[r] - B, hi = Fn[r] + B;
                auto scalar = [&](double x) {
                    Eigen::VectorXd trial = Fn;
                    trial[r] = x;
                    return objective(trial);
                };
                best = golden_section(scalar, lo, hi, opts.argmin_tol, out.evaluations);
                if (best - lo > 2.0 * opts.argmin_tol && hi - best > 2.0 * opts.argmin_tol) break;
                B *= 2.0;
            }
            change = std::max(change, std::abs(best - Fn[r]));
            Fn[r] = best;
        }
        if (m == 1 || change <= opts.argmin_tol) break;
    }
    out.argmin = Fn;
    out.value = objective(Fn);
    ++out.evaluations;
    out.converged = all_converged;
    return out;
}

FilmDensityEntry w_bar(const Profile& profile, const EnergyDensity& W, const Eigen::MatrixXd& Fbar,
                       const FilmOptions& opts) {
    validate_film_inputs(profile, W);
    const QuadratureOptions& q = opts.quad;
    if (q.initial_nodes < 1 || q.max_levels < 1) throw ConfigError("quadrature needs positive node and level counts");

    FilmDensityEntry entry;
    entry.Fbar = Fbar;
    entry.breakpoints = {0.0};
    if (q.split_at_thresholds) {
        KernelOptions kopts;
        kopts.confirm = false;
        kopts.m = int(Fbar.rows());
        const ThresholdReport tr = thresholds(profile, opts.N, q.bisect_tol, kopts);
        for (double tk : tr.thresholds)
            if (tk > 0.0 && tk < 1.0) entry.breakpoints.push_back(tk);
    }
    entry.breakpoints.push_back(1.0);
    std::sort(entry.breakpoints.begin(), entry.breakpoints.end());
    entry.breakpoints.erase(std::unique(entry.breakpoints.begin(), entry.breakpoints.end()), entry.breakpoints.end());

    std::map<double, WTildeResult> cache;
    auto sample = [&](double t) -> const WTildeResult& {
        auto it = cache.find(t);
        if (it == cache.end()) it = cache.emplace(t, w_tilde(profile, W, t, Fbar, opts)).first;
        return it->second;
    };

    double previous = 0.0;
    for (int level = 0; level < q.max_levels; ++level) {
        entry.nodes.clear();
        entry.weights.clear();
        entry.samples.clear();
        entry.argmins.clear();
        const int per_panel = q.initial_nodes << level;
        double estimate = 0.0;
        for (std::size_t p = 0; p + 1 < entry.breakpoints.size(); ++p) {
            const double a = entry.breakpoints[p], b = entry.breakpoints[p + 1];
            const double h = (b - a) / per_panel;
            for (int i = 0; i < per_panel; ++i) {
                const double t = a + (i + 0.5) * h;
                const WTildeResult& r = sample(t);
                entry.nodes.push_back(t);
                entry.weights.push_back(h);
                entry.samples.push_back(r.value);
                entry.argmins.push_back(r.argmin);
                estimate += h * r.value;
            }
        }
        entry.history.push_back(estimate);
        entry.value = estimate;
        entry.levels = level + 1;
        if (level > 0 && std::abs(estimate - previous) <= q.rel_tol * std::abs(estimate) + q.abs_tol) {
            entry.converged = true;
            return entry;
        }
        previous = estimate;
    }
    throw QuadratureError("t-quadrature did not converge within " + std::to_string(q.max_levels) + " levels", entry);
}

double membrane_min_value(const std::vector<double>& omega, double w_bar_value) {
    double area = 1.0;
    for (double L : omega) area *= L;
    return 2.0 * area * w_bar_value;
}

MembraneResult membrane_min(const std::vector<double>& omega, const BoundaryDatum& datum, const Profile& profile,
                            const EnergyDensity& W, const FilmOptions& opts) {
    if (!datum.affine) throw ConfigError("unsupported feature: membrane_min handles affine boundary data only");
    if (int(omega.size()) != profile.dim()) throw ConfigError("omega needs one side length per in-plane axis");
    MembraneResult out;
    out.density = w_bar(profile, W, datum.gradient, opts);
    out.value = membrane_min_value(omega, out.density.value);
    out.certificate = "affine datum and convex limit density: the affine map attains the minimum "
                      "2 |omega| Wbar(Fbar)";
    return out;
}

DirectResult direct_min(const Profile& profile, double eps, double delta, const BoundaryDatum& datum,
                        const DirectGrid& grid, const EnergyDensity& W, const SolverOptions& opts, bool scaled) {
    validate_film_inputs(profile, W);
    if (!datum.affine) throw ConfigError("unsupported feature: direct_min handles affine boundary data only");
    const int d = profile.dim();
    if (int(grid.omega.size()) != d) throw ConfigError("omega needs one side length per in-plane axis");
    if (datum.gradient.cols() != d || datum.gradient.rows() != W.rows())
        throw ConfigError("boundary datum must be an m x dim matrix");

    DomainGrid dgrid;
    dgrid.omega = grid.omega;
    dgrid.transverse_cells = grid.transverse_cells;
    for (double L : grid.omega) dgrid.in_plane_cells.push_back(int(std::lround(L / delta * grid.cells_per_delta)));
    const DomainMask mask = oscillating_domain_mask(profile, eps, delta, dgrid, scaled);

    std::array<int, 3> cells{1, 1, 1};
    std::array<double, 3> spacing{1.0, 1.0, 1.0};
    for (int a = 0; a <= d; ++a) {
        cells[a] = mask.cells[a];
        spacing[a] = mask.spacing[a];
    }
    CellProblem problem;
    problem.lattice = Lattice::box(d + 1, cells, spacing);
    if (scaled) problem.lattice.gradient_scale[d] = 1.0 / eps;
    problem.occupied = mask.occupancy;
    std::array<bool, 3> lateral{false, false, false};
    for (int a = 0; a < d; ++a) lateral[a] = true;
    problem.dirichlet = boundary_nodes(problem.lattice, lateral);

    const DeformationGradient F = join(datum.gradient, Eigen::VectorXd::Zero(W.rows()));
    CellSolution sol = minimize(problem, W, F, opts);
    DirectResult out;
    out.value = sol.value;
    out.report = std::move(sol.report);
    out.cells = mask.cells;
    out.occupied_cells = mask.count();
    return out;
}

GammaCheckReport gamma_check(const Profile& profile, const EnergyDensity& W, const BoundaryDatum& datum,
                             const std::vector<double>& eps_schedule, const GammaOptions& opts) {
    validate_film_inputs(profile, W);
    if (eps_schedule.empty()) throw ConfigError("gamma check needs a non-empty eps schedule");
    for (std::size_t i = 0; i < eps_schedule.size(); ++i) {
        if (!(eps_schedule[i] > 0.0)) throw ConfigError("eps values must be positive");
        if (i > 0 && !(eps_schedule[i] < eps_schedule[i - 1])) throw ConfigError("eps schedule must be decreasing");
    }

    GammaCheckReport report;
    const MembraneResult membrane = membrane_min(opts.grid.omega, datum, profile, W, opts.film);
    report.w_bar = membrane.density.value;
    report.target = membrane.value;

    for (double eps : eps_schedule) {
        GammaEntry e;
        e.eps = eps;
        e.delta = std::pow(eps, opts.delta_exponent);
        try {
            DirectResult r = direct_min(profile, eps, e.delta, datum, opts.grid, W, opts.solver);
            e.minimum = r.value;
            e.report = std::move(r.report);
        } catch (const ResolutionError& err) {
            report.aborted = true;
            report.error = err.what();
            break;
        }
        e.scaled = e.minimum / eps;
        e.gap = report.target != 0.0 ? std::abs(e.scaled - report.target) / std::abs(report.target)
                                     : std::abs(e.scaled);
        report.entries.push_back(std::move(e));
    }
    report.trend_nonincreasing = !report.entries.empty();
    for (std::size_t i = 1; i < report.entries.size(); ++i)
        if (report.entries[i].gap > report.entries[i - 1].gap) report.trend_nonincreasing = false;
    return report;
}

} // namespace filmhom
