#include <doctest.h>

#include <random>

#include "filmhom/cell_solver.hpp"
#include "oracles.hpp"

using namespace filmhom;

namespace {

std::vector<std::uint8_t> random_occupancy(std::mt19937_64& rng, std::size_t cells, double density) {
    std::bernoulli_distribution coin(density);
    std::vector<std::uint8_t> occ(cells);
    for (auto& o : occ) o = coin(rng);
    return occ;
}

Eigen::MatrixXd random_matrix(std::mt19937_64& rng, int m, int n) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd F(m, n);
    for (int i = 0; i < F.size(); ++i) F(i) = normal(rng);
    return F;
}

} // namespace

TEST_SUITE("cell_solver") {

TEST_CASE("lattice bookkeeping") {
    const Lattice t = Lattice::torus(2, 8);
    CHECK(t.cell_count() == 64);
    CHECK(t.node_count() == 64);
    CHECK(t.cell_volume() == doctest::Approx(1.0 / 64));
    const Lattice b = Lattice::box(2, {4, 3, 1}, {0.5, 1.0, 1.0});
    CHECK(b.cell_count() == 12);
    CHECK(b.node_count() == 20);
    const auto bn = boundary_nodes(b, {true, false, false});
    CHECK(std::count(bn.begin(), bn.end(), 1) == 8);
    CHECK(parse_solver_method("cg") == SolverMethod::ConjugateGradient);
    CHECK_THROWS_AS(parse_solver_method("newton"), ConfigError);
}

TEST_CASE("full mask gives W(F) with zero corrector") {
    std::mt19937_64 rng(1);
    for (double p : {1.5, 2.0, 3.0}) {
        const EnergyDensity W = EnergyDensity::p_norm_power(p, 2, 2);
        const std::vector<std::uint8_t> full(16 * 16, 1);
        for (int s = 0; s < 3; ++s) {
            const Eigen::MatrixXd F = random_matrix(rng, 2, 2);
            const CellSolution sol = minimize_periodic(Lattice::torus(2, 16), full, W, F);
            CHECK(sol.value == doctest::Approx(evaluate(W, F)).epsilon(1e-10));
            CHECK(sol.corrector.values.cwiseAbs().maxCoeff() <= 1e-8);
            CHECK(sol.report.converged);
        }
    }
}

TEST_CASE("empty mask has zero energy") {
    const std::vector<std::uint8_t> none(64, 0);
    Eigen::MatrixXd F(1, 2);
    F << 1, 2;
    const CellSolution sol = minimize_periodic(Lattice::torus(2, 8), none, EnergyDensity::p_norm_power(2, 1, 2), F);
    CHECK(sol.value == 0.0);
    CHECK(sol.report.converged);
}

TEST_CASE("quadratic cell problems match a dense least-squares oracle") {
    std::mt19937_64 rng(7);
    const int N = 8;
    for (int trial = 0; trial < 12; ++trial) {
        const auto occ = random_occupancy(rng, N * N, 0.4 + 0.05 * (trial % 6));
        const Eigen::MatrixXd F = random_matrix(rng, 1, 2);
        const double expected = oracle::dense_quadratic_cell_min(2, {N, N, 1}, occ, F.row(0).transpose(),
                                                                 Eigen::Matrix2d::Identity());
        const CellSolution sol = minimize_periodic(Lattice::torus(2, N), occ, EnergyDensity::p_norm_power(2, 1, 2), F);
        CAPTURE(trial);
        CHECK(sol.report.converged);
        CHECK(std::abs(sol.value - expected) <= 1e-9 * (1 + expected));
    }
}

TEST_CASE("anisotropic quadratic form against the dense oracle") {
    std::mt19937_64 rng(9);
    Eigen::Matrix2d A;
    A << 2.0, 0.7, 0.7, 1.0;
    const EnergyDensity W = EnergyDensity::quadratic_form(A, 1, 2);
    const int N = 8;
    for (int trial = 0; trial < 6; ++trial) {
        const auto occ = random_occupancy(rng, N * N, 0.6);
        const Eigen::MatrixXd F = random_matrix(rng, 1, 2);
        const double expected = oracle::dense_quadratic_cell_min(2, {N, N, 1}, occ, F.row(0).transpose(), A);
        const CellSolution sol = minimize_periodic(Lattice::torus(2, N), occ, W, F);
        CHECK(std::abs(sol.value - expected) <= 1e-9 * (1 + expected));
    }
}

TEST_CASE("three-dimensional cylinder against the dense oracle") {
    std::mt19937_64 rng(13);
    const int N = 4;
    auto plane = random_occupancy(rng, N * N, 0.55);
    std::vector<std::uint8_t> occ;
    for (int z = 0; z < N; ++z) occ.insert(occ.end(), plane.begin(), plane.end());
    const Eigen::MatrixXd F = random_matrix(rng, 1, 3);
    const double expected =
        oracle::dense_quadratic_cell_min(3, {N, N, N}, occ, F.row(0).transpose(), Eigen::Matrix3d::Identity());
    const CellSolution sol = minimize_periodic(Lattice::torus(3, N), occ, EnergyDensity::p_norm_power(2, 1, 3), F);
    CHECK(std::abs(sol.value - expected) <= 1e-9 * (1 + expected));
}

TEST_CASE("rows decouple for m = 2 at p = 2") {
    std::mt19937_64 rng(17);
    const int N = 8;
    const auto occ = random_occupancy(rng, N * N, 0.55);
    const Eigen::MatrixXd F = random_matrix(rng, 2, 2);
    double expected = 0.0;
    for (int r = 0; r < 2; ++r)
        expected += oracle::dense_quadratic_cell_min(2, {N, N, 1}, occ, F.row(r).transpose(), Eigen::Matrix2d::Identity());
    const CellSolution sol = minimize_periodic(Lattice::torus(2, N), occ, EnergyDensity::p_norm_power(2, 2, 2), F);
    CHECK(std::abs(sol.value - expected) <= 1e-9 * (1 + expected));
}

TEST_CASE("descent agrees with cg on a quadratic problem") {
    std::mt19937_64 rng(21);
    const int N = 12;
    const auto occ = random_occupancy(rng, N * N, 0.6);
    const Eigen::MatrixXd F = random_matrix(rng, 1, 2);
    const EnergyDensity W = EnergyDensity::p_norm_power(2, 1, 2);
    SolverOptions cg, descent;
    cg.method = SolverMethod::ConjugateGradient;
    descent.method = SolverMethod::Descent;
    const double a = minimize_periodic(Lattice::torus(2, N), occ, W, F, cg).value;
    const CellSolution b = minimize_periodic(Lattice::torus(2, N), occ, W, F, descent);
    CHECK(b.report.converged);
    CHECK(b.value == doctest::Approx(a).epsilon(1e-8));
    CHECK_THROWS_AS(minimize_periodic(Lattice::torus(2, N), occ, EnergyDensity::p_norm_power(3, 1, 2), F, cg),
                    ConfigError);
}

TEST_CASE("non-quadratic solves reach a stationary point") {
    std::mt19937_64 rng(23);
    const int N = 12;
    for (double p : {1.5, 3.0}) {
        const auto occ = random_occupancy(rng, N * N, 0.65);
        const Eigen::MatrixXd F = random_matrix(rng, 1, 2);
        const EnergyDensity W = EnergyDensity::p_norm_power(p, 1, 2);
        const CellSolution sol = minimize_periodic(Lattice::torus(2, N), occ, W, F);
        CAPTURE(p);
        CHECK(sol.report.converged);
        double zero = 0.0;
        const CellProblem problem{Lattice::torus(2, N), occ, {}};
        zero = discrete_energy(problem, W, F, Eigen::MatrixXd::Zero(1, N * N));
        CHECK(sol.value <= zero + 1e-12);
        // Random perturbations cannot lower the energy noticeably.
        std::normal_distribution<double> normal(0.0, 1e-3);
        for (int k = 0; k < 5; ++k) {
            Eigen::MatrixXd v = sol.corrector.values;
            for (int i = 0; i < v.size(); ++i) v(i) += normal(rng);
            CHECK(discrete_energy(problem, W, F, v) >= sol.value - 1e-9);
        }
    }
}

TEST_CASE("discrete gradient matches finite differences") {
    std::mt19937_64 rng(29);
    const int N = 5;
    const auto occ = random_occupancy(rng, N * N, 0.7);
    const CellProblem problem{Lattice::torus(2, N), occ, {}};
    const EnergyDensity W = EnergyDensity::p_norm_power(3, 1, 2);
    const Eigen::MatrixXd F = random_matrix(rng, 1, 2);
    Eigen::MatrixXd v = random_matrix(rng, 1, N * N) * 0.1;
    const Eigen::MatrixXd g = discrete_energy_gradient(problem, W, F, v);
    const double h = 1e-6;
    for (int i = 0; i < N * N; ++i) {
        if (g(0, i) == 0.0) continue; // frozen node
        Eigen::MatrixXd up = v, down = v;
        up(0, i) += h;
        down(0, i) -= h;
        const double fd = (discrete_energy(problem, W, F, up) - discrete_energy(problem, W, F, down)) / (2 * h);
        CHECK(std::abs(fd - g(0, i)) <= 1e-6 * (1 + std::abs(fd)));
    }
}

TEST_CASE("solves are deterministic") {
    std::mt19937_64 rng(31);
    const auto occ = random_occupancy(rng, 16 * 16, 0.6);
    const Eigen::MatrixXd F = random_matrix(rng, 1, 2);
    const EnergyDensity W = EnergyDensity::p_norm_power(3, 1, 2);
    const CellSolution a = minimize_periodic(Lattice::torus(2, 16), occ, W, F);
    const CellSolution b = minimize_periodic(Lattice::torus(2, 16), occ, W, F);
    CHECK(a.value == b.value);
    CHECK(a.corrector.values == b.corrector.values);
}

TEST_CASE("Dirichlet growing cube") {
    // Stripe of two occupied columns out of four, constant along axis 1.
    std::vector<std::uint8_t> occ(16);
    for (int j = 0; j < 4; ++j)
        for (int i = 0; i < 4; ++i) occ[std::size_t(i + 4 * j)] = i < 2;
    const Lattice period = Lattice::torus(2, 4);
    const EnergyDensity W = EnergyDensity::p_norm_power(2, 1, 2);
    Eigen::MatrixXd F(1, 2);
    F << 0.0, 1.0;
    const double periodic = minimize_periodic(period, occ, W, F).value;
    CHECK(periodic == doctest::Approx(0.5));
    double prev = std::numeric_limits<double>::infinity();
    for (int T : {1, 2, 4, 8}) {
        const DirichletSolution s = minimize_dirichlet(period, occ, T, W, F);
        CHECK(s.report.converged);
        CHECK(s.value <= prev + 1e-12);
        CHECK(s.value >= periodic - 1e-12);
        prev = s.value;
    }
    const std::vector<std::uint8_t> full(16, 1);
    CHECK(minimize_dirichlet(period, full, 3, W, F).value == doctest::Approx(1.0).epsilon(1e-10));
    CHECK_THROWS_AS(minimize_dirichlet(period, full, 0, W, F), ConfigError);
}

TEST_CASE("gradient scale rescales one axis") {
    // Affine data on a box: the zero corrector is optimal, so the integral is
    // W(F) times the box volume whatever the axis scale.
    CellProblem box{Lattice::box(2, {4, 4, 1}, {0.25, 0.5, 1.0}), std::vector<std::uint8_t>(16, 1), {}};
    box.lattice.gradient_scale[1] = 4.0;
    box.dirichlet = boundary_nodes(box.lattice, {true, false, false});
    Eigen::MatrixXd F(1, 2);
    F << 1.0, 0.0;
    const CellSolution sol = minimize(box, EnergyDensity::p_norm_power(2, 1, 2), F);
    CHECK(sol.value == doctest::Approx(1.0 * 2.0).epsilon(1e-10)); // volume 1 x 2
}

}
