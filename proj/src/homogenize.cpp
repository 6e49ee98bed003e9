#include "filmhom/homogenize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace filmhom {

namespace {

void check_level(double t) {
    if (!(std::abs(t) < 1.0)) throw ConfigError("level t must satisfy |t| < 1");
}

int layers_for(int N, const CellOptions& opts) { return opts.vertical_layers > 0 ? opts.vertical_layers : N; }

/// Orthonormal basis of the span of `vectors` (Gram-Schmidt in the given
/// order), and an orthonormal basis of its complement in R^dim.
void orthonormal_split(const std::vector<Eigen::VectorXd>& vectors, int dim, std::vector<Eigen::VectorXd>& span,
                       std::vector<Eigen::VectorXd>& complement) {
    span.clear();
    complement.clear();
    auto reduce = [](Eigen::VectorXd v, const std::vector<Eigen::VectorXd>& basis) {
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& b : basis) v -= b.dot(v) * b;
        return v;
    };
    for (const auto& v : vectors) {
        Eigen::VectorXd r = reduce(v, span);
        if (r.norm() > 1e-10) span.push_back(r.normalized());
    }
    std::vector<Eigen::VectorXd> all = span;
    for (int i = 0; i < dim; ++i) {
        Eigen::VectorXd r = reduce(Eigen::VectorXd::Unit(dim, i), all);
        if (r.norm() > 1e-10) {
            all.push_back(r.normalized());
            complement.push_back(all.back());
        }
    }
}

double pnorm_sum(const Eigen::VectorXd& v, double p) { return std::pow(v.norm(), p); }

} // namespace

CylinderMask cylinder_mask(const Profile& profile, double t, int N, int layers) {
    if (layers < 1) throw ConfigError("cylinder needs at least one transverse layer");
    const CellMask section = superlevel_mask(profile, t, N);
    const int d = profile.dim();
    CylinderMask out;
    std::array<int, 3> cells{N, N, N};
    cells[d] = layers;
    out.lattice = Lattice::torus(d + 1, cells);
    out.occupancy.resize(out.lattice.cell_count());
    const std::size_t plane = section.size();
    for (int z = 0; z < layers; ++z)
        std::copy(section.occupancy.begin(), section.occupancy.end(), out.occupancy.begin() + std::size_t(z) * plane);
    out.theta = section.area_fraction;
    return out;
}

HomogenizedSample phi_sharp(const Profile& profile, double t, const Eigen::MatrixXd& Fbar, int N, double p,
                            const CellOptions& opts) {
    check_level(t);
    if (Fbar.cols() != profile.dim())
        throw std::invalid_argument("Fbar must have one column per in-plane axis of the profile");
    const CellMask mask = superlevel_mask(profile, t, N);
    const EnergyDensity W = EnergyDensity::p_norm_power(p, int(Fbar.rows()), profile.dim());
    CellSolution sol = minimize_periodic(mask, W, Fbar, opts.solver);
    HomogenizedSample s;
    s.t = t;
    s.F = Fbar;
    s.value = sol.value;
    s.theta = mask.area_fraction;
    s.report = std::move(sol.report);
    s.N = N;
    return s;
}

HomogenizedSample psi(const Profile& profile, double t, const DeformationGradient& F, int N, double p,
                      const CellOptions& opts) {
    if (F.cols() != profile.dim() + 1) throw std::invalid_argument("F must have dim + 1 columns");
    HomogenizedSample s = phi_sharp(profile, t, in_plane(F), N, p, opts);
    s.F = F;
    s.value += s.theta * pnorm_sum(transverse(F), p);
    return s;
}

HomogenizedSample psi_cylinder_oracle(const Profile& profile, double t, const DeformationGradient& F, int N, double p,
                                      const CellOptions& opts) {
    check_level(t);
    if (F.cols() != profile.dim() + 1) throw std::invalid_argument("F must have dim + 1 columns");
    const CylinderMask cyl = cylinder_mask(profile, t, N, layers_for(N, opts));
    const EnergyDensity W = EnergyDensity::p_norm_power(p, int(F.rows()), profile.dim() + 1);
    CellSolution sol = minimize_periodic(cyl.lattice, cyl.occupancy, W, F, opts.solver);
    HomogenizedSample s;
    s.t = t;
    s.F = F;
    s.value = sol.value;
    s.theta = cyl.theta;
    s.report = std::move(sol.report);
    s.N = N;
    return s;
}

HomogenizedSample w_hom(const Profile& profile, double t, const DeformationGradient& F, const EnergyDensity& W, int N,
                        const CellOptions& opts) {
    check_level(t);
    if (!W.known_convex()) throw ConfigError("w_hom requires a convex energy density");
    if (F.cols() != profile.dim() + 1) throw std::invalid_argument("F must have dim + 1 columns");
    check_dims(W, F);
    const CylinderMask cyl = cylinder_mask(profile, t, N, layers_for(N, opts));
    CellSolution sol = minimize_periodic(cyl.lattice, cyl.occupancy, W, F, opts.solver);
    HomogenizedSample s;
    s.t = t;
    s.F = F;
    s.value = sol.value;
    s.theta = cyl.theta;
    s.report = std::move(sol.report);
    s.N = N;
    return s;
}

DirichletSolution w_hom_cube_oracle(const Profile& profile, double t, const DeformationGradient& F,
                                    const EnergyDensity& W, int T, int N, const SolverOptions& opts) {
    check_level(t);
    if (!W.known_convex()) throw ConfigError("w_hom requires a convex energy density");
    check_dims(W, F);
    const CylinderMask cyl = cylinder_mask(profile, t, N, N);
    return minimize_dirichlet(cyl.lattice, cyl.occupancy, T, W, F, opts);
}

int wrap_rank(const Profile& profile, double t, int N) {
    if (std::abs(t) >= 1.0) return 0;
    return torus_components(superlevel_mask(profile, t, N)).rank;
}

KernelResult kernel(const Profile& profile, double t, int N, const KernelOptions& opts) {
    check_level(t);
    const int d = profile.dim();
    KernelResult out;
    out.t = t;
    const TorusComponents comps = torus_components(superlevel_mask(profile, t, N));
    out.wrap_lattice = comps.wrap_lattice;
    out.rank = comps.rank;
    out.k = d - comps.rank;

    std::vector<Eigen::VectorXd> generators;
    if (comps.rank == d) {
        for (int i = 0; i < d; ++i) generators.push_back(Eigen::VectorXd::Unit(d, i));
    } else {
        for (const auto& z : comps.wrap_lattice) generators.push_back(z.cast<double>());
    }
    orthonormal_split(generators, d, out.xi, out.kernel_directions);

    if (!opts.confirm) return out;

    auto probe = [&](const Eigen::VectorXd& direction) {
        Eigen::MatrixXd Fbar = Eigen::MatrixXd::Zero(opts.m, d);
        Fbar.row(0) = direction.transpose();
        return phi_sharp(profile, t, Fbar, N, opts.p, opts.cell).value;
    };
    out.max_kernel_value = 0.0;
    for (const auto& eta : out.kernel_directions) out.max_kernel_value = std::max(out.max_kernel_value, probe(eta));
    out.min_coercive_ratio = std::numeric_limits<double>::infinity();
    for (const auto& xi : out.xi) out.min_coercive_ratio = std::min(out.min_coercive_ratio, probe(xi));
    if (out.xi.empty()) out.min_coercive_ratio = 0.0;

    const bool kernel_ok = out.max_kernel_value <= opts.kernel_tolerance;
    const bool coercive_ok = out.xi.empty() || out.min_coercive_ratio >= opts.coercivity_floor;
    if (!kernel_ok || !coercive_ok) {
        std::ostringstream msg;
        msg << "kernel at t=" << t << ", N=" << N << ": wrap lattice gives k=" << out.k << " but "
            << (kernel_ok ? "" : "kernel probes reach phi=" + std::to_string(out.max_kernel_value) + " ")
            << (coercive_ok ? "" : "coercive probes drop to phi=" + std::to_string(out.min_coercive_ratio) + " ")
            << "(grid too coarse?)";
        throw StructuralInconsistency(msg.str());
    }
    out.confirmed = true;
    return out;
}

ThresholdReport thresholds(const Profile& profile, int N, double bisect_tol, const KernelOptions& opts) {
    if (!(bisect_tol > 0.0)) throw ConfigError("bisection tolerance must be positive");
    const int d = profile.dim();
    ThresholdReport report;
    report.dim = d;
    report.m = opts.m;
    report.N = N;
    report.bisect_tol = bisect_tol;

    const int rank0 = wrap_rank(profile, 0.0, N);
    for (int k = 1; k <= d; ++k) {
        const int target = d - k;
        if (rank0 <= target) {
            report.thresholds.push_back(0.0);
            continue;
        }
        double lo = 0.0, hi = 1.0;
        while (hi - lo > bisect_tol) {
            const double mid = 0.5 * (lo + hi);
            if (wrap_rank(profile, mid, N) <= target)
                hi = mid;
            else
                lo = mid;
        }
        report.thresholds.push_back(hi);
    }

    std::vector<double> breaks{0.0};
    breaks.insert(breaks.end(), report.thresholds.begin(), report.thresholds.end());
    breaks.push_back(1.0);
    for (int k = 0; k <= d; ++k) {
        const double lo = breaks[k], hi = breaks[k + 1];
        if (!(hi > lo)) continue;
        ThresholdInterval interval;
        interval.lo = lo;
        interval.hi = hi;
        const KernelResult kr = kernel(profile, 0.5 * (lo + hi), N, opts);
        interval.k = kr.k;
        interval.kernel_dim = kr.k * opts.m;
        interval.wrap_rank = kr.rank;
        interval.xi = kr.xi;
        interval.confirmed = kr.confirmed;
        report.intervals.push_back(std::move(interval));
    }
    return report;
}

BoundsReport bounds_check(const Profile& profile, const ThresholdInterval& interval, double s,
                          const std::vector<DeformationGradient>& F_samples, int t_samples, int N, double p,
                          const CellOptions& opts) {
    if (!(s > interval.lo && s < interval.hi)) throw ConfigError("bounds_check needs s inside the interval");
    if (t_samples < 1) throw ConfigError("bounds_check needs at least one t sample");
    BoundsReport out;
    out.alpha = std::numeric_limits<double>::infinity();
    out.beta = 0.0;
    for (int i = 1; i <= t_samples; ++i) {
        const double t = interval.lo + (s - interval.lo) * double(i) / double(t_samples);
        for (const auto& F : F_samples) {
            const Eigen::MatrixXd Fbar = in_plane(F);
            double denom = pnorm_sum(transverse(F), p);
            for (const auto& xi : interval.xi) denom += pnorm_sum(Fbar * xi, p);
            if (denom <= 1e-12) {
                ++out.excluded;
                continue;
            }
            const double ratio = psi(profile, t, F, N, p, opts).value / denom;
            out.alpha = std::min(out.alpha, ratio);
            out.beta = std::max(out.beta, ratio);
            ++out.samples;
        }
    }
    if (out.samples == 0) out.alpha = 0.0;
    out.ok = out.samples > 0 && out.alpha > 0.0 && std::isfinite(out.beta) && out.alpha <= out.beta;
    return out;
}

} // namespace filmhom
