#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

#include "filmhom/types.hpp"

namespace filmhom {

/// Convex integrand W on m x n matrices with p-growth
///   gamma |F|^p <= W(F) <= beta (1 + |F|^p).
///
/// Builtin kinds:
///   p_norm_power     W(F) = sum_j |F_j|^p over the columns F_j
///   frobenius_power  W(F) = |F|^p
///   quadratic_form   W(F) = <A vec(F), vec(F)>, A symmetric positive definite (p = 2)
///   custom           black-box evaluator with optional gradient
///
/// vec(F) is the column-major flattening, so A is (mn) x (mn).
class EnergyDensity {
public:
    enum class Kind { PNormPower, FrobeniusPower, QuadraticForm, Custom };

    using Evaluator = std::function<double(const Eigen::MatrixXd&)>;
    using GradientFn = std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>;

    static EnergyDensity p_norm_power(double p, int m, int n);
    static EnergyDensity frobenius_power(double p, int m, int n);
    static EnergyDensity quadratic_form(const Eigen::MatrixXd& A, int m, int n);
    /// Custom evaluators must be re-entrant; they are called concurrently
    /// from sweep workers.
    static EnergyDensity custom(Evaluator value, std::optional<GradientFn> gradient, double p, double gamma,
                                double beta, int m, int n);

    /// Same density with explicit growth constants.
    EnergyDensity with_growth(double gamma, double beta) const;
    /// Same density acting on m x n matrices.
    EnergyDensity resized(int m, int n) const;

    Kind kind() const { return kind_; }
    std::string kind_name() const;
    double p() const { return p_; }
    double gamma() const { return gamma_; }
    double beta() const { return beta_; }
    int rows() const { return m_; }
    int cols() const { return n_; }
    const Eigen::MatrixXd& form() const { return A_; }

    /// True when W is a quadratic form (so the cell problem is linear).
    bool is_quadratic() const;
    /// False for p_norm_power / frobenius_power with p < 2, whose gradient is
    /// not Lipschitz at zero.
    bool gradient_is_lipschitz() const { return kind_ == Kind::QuadraticForm || kind_ == Kind::Custom || p_ >= 2.0; }
    bool known_convex() const { return kind_ != Kind::Custom || custom_convex_; }

    /// Hot-path evaluation without dimension checks. `smoothing` > 0 replaces
    /// |x| by sqrt(|x|^2 + smoothing^2) for p < 2 power kinds.
    double value(const SmallMatrixd& F, double smoothing = 0.0) const;
    void stress(const SmallMatrixd& F, SmallMatrixd& out, double smoothing = 0.0) const;
    /// Second derivative with respect to vec(F), (mn) x (mn).
    void hessian(const SmallMatrixd& F, Eigen::MatrixXd& out, double smoothing = 0.0) const;
    /// 2 A vec(G) for quadratic kinds (the linear map G -> dW/dF).
    void linear_stress(const SmallMatrixd& G, SmallMatrixd& out) const;

private:
    friend bool sample_convexity(EnergyDensity&, int, std::uint64_t);

    Kind kind_ = Kind::PNormPower;
    double p_ = 2.0;
    double gamma_ = 1.0;
    double beta_ = 1.0;
    int m_ = 1;
    int n_ = 1;
    Eigen::MatrixXd A_;
    Evaluator custom_value_;
    std::optional<GradientFn> custom_gradient_;
    bool custom_convex_ = false;
};

template <typename Derived>
void check_dims(const EnergyDensity& W, const Eigen::MatrixBase<Derived>& F) {
    if (F.rows() != W.rows() || F.cols() != W.cols())
        throw std::invalid_argument("energy expects a " + std::to_string(W.rows()) + "x" + std::to_string(W.cols()) +
                                    " matrix, got " + std::to_string(F.rows()) + "x" + std::to_string(F.cols()));
}

template <typename Derived>
double evaluate(const EnergyDensity& W, const Eigen::MatrixBase<Derived>& F) {
    check_dims(W, F);
    SmallMatrixd G = F;
    return W.value(G);
}

template <typename Derived>
Eigen::MatrixXd gradient(const EnergyDensity& W, const Eigen::MatrixBase<Derived>& F) {
    check_dims(W, F);
    SmallMatrixd G = F, out;
    W.stress(G, out);
    return out;
}

/// Samples the convexity inequality on random pairs and marks a custom
/// density as convex when no violation above 1e-10 is found. Returns the
/// verdict. Builtins are convex by construction and return true.
bool sample_convexity(EnergyDensity& W, int samples = 200, std::uint64_t seed = 7);

/// Frobenius norm |F| raised to p.
template <typename Derived>
double frobenius_pow(const Eigen::MatrixBase<Derived>& F, double p) {
    return std::pow(F.norm(), p);
}

} // namespace filmhom
