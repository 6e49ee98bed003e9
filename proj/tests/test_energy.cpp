#include <doctest.h>

#include <random>

#include "filmhom/energy.hpp"

using namespace filmhom;

namespace {

Eigen::MatrixXd random_matrix(std::mt19937_64& rng, int m, int n, double scale = 1.0) {
    std::normal_distribution<double> normal(0.0, scale);
    Eigen::MatrixXd F(m, n);
    for (int i = 0; i < F.size(); ++i) F(i) = normal(rng);
    return F;
}

Eigen::MatrixXd finite_difference(const EnergyDensity& W, Eigen::MatrixXd F) {
    Eigen::MatrixXd g(F.rows(), F.cols());
    const double h = 1e-6;
    for (int i = 0; i < F.size(); ++i) {
        const double s = F(i);
        F(i) = s + h;
        const double up = evaluate(W, F);
        F(i) = s - h;
        const double down = evaluate(W, F);
        F(i) = s;
        g(i) = (up - down) / (2 * h);
    }
    return g;
}

} // namespace

TEST_SUITE("energy") {

TEST_CASE("closed-form values") {
    Eigen::MatrixXd F(1, 2);
    F << 3, 4;
    CHECK(evaluate(EnergyDensity::frobenius_power(4, 1, 2), F) == doctest::Approx(625.0));
    CHECK(evaluate(EnergyDensity::p_norm_power(2, 1, 2), F) == doctest::Approx(25.0));
    CHECK(evaluate(EnergyDensity::p_norm_power(3, 1, 2), F) == doctest::Approx(27.0 + 64.0));
    Eigen::MatrixXd G(2, 2);
    G << 1, 0, 0, 2;
    CHECK(evaluate(EnergyDensity::p_norm_power(4, 2, 2), G) == doctest::Approx(1.0 + 16.0));
    CHECK(evaluate(EnergyDensity::quadratic_form(Eigen::MatrixXd::Identity(4, 4), 2, 2), G) == doctest::Approx(5.0));
    CHECK(evaluate(EnergyDensity::p_norm_power(1.5, 1, 2), Eigen::MatrixXd::Zero(1, 2)) == 0.0);
}

TEST_CASE("quadratic form uses column-major flattening") {
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(4, 4);
    A(1, 1) = 3.0; // weights F(1,0)
    Eigen::MatrixXd F = Eigen::MatrixXd::Zero(2, 2);
    F(1, 0) = 1.0;
    CHECK(evaluate(EnergyDensity::quadratic_form(A, 2, 2), F) == doctest::Approx(3.0));
}

TEST_CASE("validation") {
    CHECK_THROWS_AS(EnergyDensity::p_norm_power(1.0, 1, 2), ConfigError);
    CHECK_THROWS_AS(EnergyDensity::frobenius_power(0.5, 1, 2), ConfigError);
    CHECK_THROWS_AS(EnergyDensity::p_norm_power(2, 0, 2), ConfigError);
    CHECK_THROWS_AS(EnergyDensity::p_norm_power(2, 1, 4), ConfigError);
    Eigen::MatrixXd indefinite = Eigen::MatrixXd::Identity(2, 2);
    indefinite(1, 1) = -1;
    CHECK_THROWS_AS(EnergyDensity::quadratic_form(indefinite, 1, 2), ConfigError);
    Eigen::MatrixXd asym = Eigen::MatrixXd::Identity(2, 2);
    asym(0, 1) = 0.5;
    CHECK_THROWS_AS(EnergyDensity::quadratic_form(asym, 1, 2), ConfigError);
    CHECK_THROWS_AS(EnergyDensity::quadratic_form(Eigen::MatrixXd::Identity(3, 3), 1, 2), ConfigError);
    CHECK_THROWS_AS(EnergyDensity::p_norm_power(2, 1, 2).with_growth(2.0, 1.0), ConfigError);
    CHECK_THROWS_AS(evaluate(EnergyDensity::p_norm_power(2, 1, 2), Eigen::MatrixXd::Zero(2, 2)), std::invalid_argument);
}

TEST_CASE("p-homogeneity of builtins") {
    std::mt19937_64 rng(11);
    for (double p : {1.5, 2.0, 3.0}) {
        for (const EnergyDensity& W : {EnergyDensity::p_norm_power(p, 2, 3), EnergyDensity::frobenius_power(p, 2, 3)}) {
            for (int s = 0; s < 20; ++s) {
                const Eigen::MatrixXd F = random_matrix(rng, 2, 3);
                const double lambda = 0.1 + 3.0 * std::abs(random_matrix(rng, 1, 1)(0));
                CHECK(evaluate(W, (lambda * F).eval()) ==
                      doctest::Approx(std::pow(lambda, p) * evaluate(W, F)).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("growth bounds hold on random samples") {
    std::mt19937_64 rng(5);
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(3, 3);
    A(0, 1) = A(1, 0) = 0.4;
    A(2, 2) = 2.5;
    std::vector<EnergyDensity> densities{EnergyDensity::p_norm_power(1.5, 1, 3), EnergyDensity::p_norm_power(3, 2, 3),
                                         EnergyDensity::frobenius_power(2.5, 2, 2), EnergyDensity::quadratic_form(A, 1, 3)};
    for (const auto& W : densities) {
        for (int s = 0; s < 200; ++s) {
            const Eigen::MatrixXd F = random_matrix(rng, W.rows(), W.cols(), 2.0);
            const double v = evaluate(W, F);
            const double np = frobenius_pow(F, W.p());
            CHECK(v >= W.gamma() * np * (1 - 1e-12));
            CHECK(v <= W.beta() * (1 + np) * (1 + 1e-12));
        }
    }
}

TEST_CASE("stress matches finite differences") {
    std::mt19937_64 rng(3);
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(4, 4) * 2.0;
    A(0, 3) = A(3, 0) = 0.3;
    std::vector<EnergyDensity> densities{EnergyDensity::p_norm_power(1.5, 2, 2), EnergyDensity::p_norm_power(3, 2, 2),
                                         EnergyDensity::frobenius_power(2.5, 2, 2), EnergyDensity::quadratic_form(A, 2, 2)};
    for (const auto& W : densities)
        for (int s = 0; s < 10; ++s) {
            const Eigen::MatrixXd F = random_matrix(rng, 2, 2);
            const Eigen::MatrixXd g = gradient(W, F), fd = finite_difference(W, F);
            CHECK((g - fd).norm() <= 1e-5 * (1 + g.norm()));
        }
}

TEST_CASE("custom densities") {
    auto quartic = [](const Eigen::MatrixXd& F) { return std::pow(F.squaredNorm(), 2) + F.squaredNorm(); };
    EnergyDensity W = EnergyDensity::custom(quartic, std::nullopt, 4.0, 1.0, 2.0, 1, 2);
    CHECK_FALSE(W.known_convex());
    CHECK(sample_convexity(W));
    CHECK(W.known_convex());
    Eigen::MatrixXd F(1, 2);
    F << 0.3, -0.7;
    const Eigen::MatrixXd exact = (4.0 * F.squaredNorm() + 2.0) * F;
    CHECK((gradient(W, F) - exact).norm() <= 1e-6);

    auto double_well = [](const Eigen::MatrixXd& F) { return std::pow(F.squaredNorm() - 1.0, 2); };
    EnergyDensity bad = EnergyDensity::custom(double_well, std::nullopt, 4.0, 0.5, 2.0, 1, 2);
    CHECK_FALSE(sample_convexity(bad));
    CHECK_FALSE(bad.known_convex());
}

TEST_CASE("resizing and kinds") {
    const EnergyDensity W = EnergyDensity::p_norm_power(2, 1, 2);
    CHECK(W.is_quadratic());
    CHECK(W.resized(2, 3).cols() == 3);
    CHECK_FALSE(EnergyDensity::p_norm_power(1.5, 1, 2).gradient_is_lipschitz());
    CHECK_FALSE(EnergyDensity::frobenius_power(3, 1, 2).is_quadratic());
    CHECK_THROWS_AS(EnergyDensity::quadratic_form(Eigen::MatrixXd::Identity(2, 2), 1, 2).resized(1, 3), ConfigError);
    CHECK(W.kind_name() == "p_norm_power");
}

}
