#include "filmhom/energy.hpp"

#include <Eigen/Eigenvalues>

namespace filmhom {

namespace {

void check_shape(int m, int n) {
    if (m < 1 || n < 1 || m > kMaxDim || n > kMaxDim)
        throw ConfigError("energy dimensions must satisfy 1 <= m, n <= " + std::to_string(kMaxDim));
}

void check_exponent(double p) {
    if (!(p > 1.0)) throw ConfigError("growth exponent p must be > 1");
}

} // namespace

EnergyDensity EnergyDensity::p_norm_power(double p, int m, int n) {
    check_exponent(p);
    check_shape(m, n);
    EnergyDensity W;
    W.kind_ = Kind::PNormPower;
    W.p_ = p;
    W.m_ = m;
    W.n_ = n;
    const double r = std::pow(double(n), 1.0 - p / 2.0);
    W.gamma_ = std::min(1.0, r);
    W.beta_ = std::max(1.0, r);
    return W;
}

EnergyDensity EnergyDensity::frobenius_power(double p, int m, int n) {
    check_exponent(p);
    check_shape(m, n);
    EnergyDensity W;
    W.kind_ = Kind::FrobeniusPower;
    W.p_ = p;
    W.m_ = m;
    W.n_ = n;
    W.gamma_ = W.beta_ = 1.0;
    return W;
}

EnergyDensity EnergyDensity::quadratic_form(const Eigen::MatrixXd& A, int m, int n) {
    check_shape(m, n);
    if (A.rows() != m * n || A.cols() != m * n)
        throw ConfigError("quadratic form must be (mn)x(mn) = " + std::to_string(m * n) + "x" + std::to_string(m * n));
    if (!A.isApprox(A.transpose(), 1e-12)) throw ConfigError("quadratic form must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0.0)) throw ConfigError("quadratic form must be positive definite");
    EnergyDensity W;
    W.kind_ = Kind::QuadraticForm;
    W.p_ = 2.0;
    W.m_ = m;
    W.n_ = n;
    W.A_ = 0.5 * (A + A.transpose());
    W.gamma_ = lo;
    W.beta_ = hi;
    return W;
}

EnergyDensity EnergyDensity::custom(Evaluator value, std::optional<GradientFn> gradient, double p, double gamma,
                                    double beta, int m, int n) {
    check_exponent(p);
    check_shape(m, n);
    if (!value) throw ConfigError("custom energy needs an evaluator");
    EnergyDensity W;
    W.kind_ = Kind::Custom;
    W.p_ = p;
    W.m_ = m;
    W.n_ = n;
    W.custom_value_ = std::move(value);
    W.custom_gradient_ = std::move(gradient);
    return W.with_growth(gamma, beta);
}

EnergyDensity EnergyDensity::with_growth(double gamma, double beta) const {
    if (!(gamma > 0.0) || !(beta >= gamma)) throw ConfigError("growth constants must satisfy 0 < gamma <= beta");
    EnergyDensity W = *this;
    W.gamma_ = gamma;
    W.beta_ = beta;
    return W;
}

EnergyDensity EnergyDensity::resized(int m, int n) const {
    if (m == m_ && n == n_) return *this;
    switch (kind_) {
    case Kind::PNormPower:
        return p_norm_power(p_, m, n);
    case Kind::FrobeniusPower:
        return frobenius_power(p_, m, n);
    default:
        throw ConfigError("energy of kind '" + kind_name() + "' is tied to its declared dimensions");
    }
}

std::string EnergyDensity::kind_name() const {
    switch (kind_) {
    case Kind::PNormPower:
        return "p_norm_power";
    case Kind::FrobeniusPower:
        return "frobenius_power";
    case Kind::QuadraticForm:
        return "quadratic_form";
    case Kind::Custom:
        return "custom";
    }
    return "unknown";
}

bool EnergyDensity::is_quadratic() const {
    return kind_ == Kind::QuadraticForm || ((kind_ == Kind::PNormPower || kind_ == Kind::FrobeniusPower) && p_ == 2.0);
}

double EnergyDensity::value(const SmallMatrixd& F, double smoothing) const {
    switch (kind_) {
    case Kind::PNormPower: {
        if (p_ == 2.0) return F.squaredNorm();
        double sum = 0.0;
        const bool smooth = smoothing > 0.0 && p_ < 2.0;
        for (int j = 0; j < F.cols(); ++j) {
            double sq = F.col(j).squaredNorm();
            sum += smooth ? std::pow(sq + smoothing * smoothing, 0.5 * p_) : std::pow(sq, 0.5 * p_);
        }
        return sum;
    }
    case Kind::FrobeniusPower: {
        double sq = F.squaredNorm();
        if (p_ == 2.0) return sq;
        if (smoothing > 0.0 && p_ < 2.0) sq += smoothing * smoothing;
        return std::pow(sq, 0.5 * p_);
    }
    case Kind::QuadraticForm: {
        Eigen::Map<const Eigen::VectorXd> v(F.data(), F.size());
        return v.dot(A_ * v);
    }
    case Kind::Custom:
        return custom_value_(Eigen::MatrixXd(F));
    }
    return 0.0;
}

void EnergyDensity::stress(const SmallMatrixd& F, SmallMatrixd& out, double smoothing) const {
    out.resize(F.rows(), F.cols());
    switch (kind_) {
    case Kind::PNormPower: {
        if (p_ == 2.0) {
            out = 2.0 * F;
            return;
        }
        const bool smooth = smoothing > 0.0 && p_ < 2.0;
        for (int j = 0; j < F.cols(); ++j) {
            double sq = F.col(j).squaredNorm();
            if (smooth) sq += smoothing * smoothing;
            const double coeff = sq > 0.0 ? p_ * std::pow(sq, 0.5 * p_ - 1.0) : 0.0;
            out.col(j) = coeff * F.col(j);
        }
        return;
    }
    case Kind::FrobeniusPower: {
        if (p_ == 2.0) {
            out = 2.0 * F;
            return;
        }
        double sq = F.squaredNorm();
        if (smoothing > 0.0 && p_ < 2.0) sq += smoothing * smoothing;
        if (sq > 0.0)
            out = (p_ * std::pow(sq, 0.5 * p_ - 1.0)) * F;
        else
            out.setZero();
        return;
    }
    case Kind::QuadraticForm:
        linear_stress(F, out);
        return;
    case Kind::Custom: {
        Eigen::MatrixXd G(F);
        if (custom_gradient_) {
            out = (*custom_gradient_)(G);
            return;
        }
        const double h = 1e-6 * (1.0 + G.norm());
        for (int i = 0; i < G.size(); ++i) {
            const double saved = G(i);
            G(i) = saved + h;
            const double up = custom_value_(G);
            G(i) = saved - h;
            const double down = custom_value_(G);
            G(i) = saved;
            out(i) = (up - down) / (2.0 * h);
        }
        return;
    }
    }
}

void EnergyDensity::hessian(const SmallMatrixd& F, Eigen::MatrixXd& out, double smoothing) const {
    const int m = int(F.rows()), n = int(F.cols()), size = m * n;
    out.setZero(size, size);
    const bool smooth = smoothing > 0.0 && p_ < 2.0;
    // p |x|^(p-2) (I + (p-2) x x^T / |x|^2) for the smoothed |x|.
    auto power_block = [&](auto x, int offset) {
        double sq = x.squaredNorm();
        if (smooth) sq += smoothing * smoothing;
        const int len = int(x.size());
        if (sq == 0.0) {
            if (p_ == 2.0) out.block(offset, offset, len, len).diagonal().setConstant(2.0);
            return;
        }
        const double a = p_ * std::pow(sq, 0.5 * p_ - 1.0);
        const double b = p_ * (p_ - 2.0) * std::pow(sq, 0.5 * p_ - 2.0);
        out.block(offset, offset, len, len) = b * x * x.transpose();
        out.block(offset, offset, len, len).diagonal().array() += a;
    };
    switch (kind_) {
    case Kind::PNormPower:
        for (int j = 0; j < n; ++j) power_block(Eigen::VectorXd(F.col(j)), m * j);
        return;
    case Kind::FrobeniusPower:
        power_block(Eigen::Map<const Eigen::VectorXd>(F.data(), size), 0);
        return;
    case Kind::QuadraticForm:
        out = 2.0 * A_;
        return;
    case Kind::Custom: {
        SmallMatrixd G = F, up, down;
        const double h = 1e-5 * (1.0 + F.norm());
        for (int i = 0; i < size; ++i) {
            const double saved = G(i);
            G(i) = saved + h;
            stress(G, up, smoothing);
            G(i) = saved - h;
            stress(G, down, smoothing);
            G(i) = saved;
            for (int r = 0; r < size; ++r) out(r, i) = (up(r) - down(r)) / (2.0 * h);
        }
        out = (0.5 * (out + out.transpose())).eval();
        return;
    }
    }
}

void EnergyDensity::linear_stress(const SmallMatrixd& G, SmallMatrixd& out) const {
    out.resize(G.rows(), G.cols());
    if (kind_ != Kind::QuadraticForm) {
        out = 2.0 * G;
        return;
    }
    Eigen::Map<const Eigen::VectorXd> g(G.data(), G.size());
    Eigen::Map<Eigen::VectorXd> o(out.data(), out.size());
    o.noalias() = 2.0 * (A_ * g);
}

bool sample_convexity(EnergyDensity& W, int samples, std::uint64_t seed) {
    if (W.kind() != EnergyDensity::Kind::Custom) return true;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto random_matrix = [&] {
        SmallMatrixd F(W.rows(), W.cols());
        for (int i = 0; i < F.size(); ++i) F(i) = 2.0 * normal(rng);
        return F;
    };
    for (int s = 0; s < samples; ++s) {
        SmallMatrixd F = random_matrix(), G = random_matrix();
        const double lambda = unit(rng);
        SmallMatrixd mid = lambda * F + (1.0 - lambda) * G;
        if (W.value(mid) > lambda * W.value(F) + (1.0 - lambda) * W.value(G) + 1e-10) {
            W.custom_convex_ = false;
            return false;
        }
    }
    W.custom_convex_ = true;
    return true;
}

} // namespace filmhom
