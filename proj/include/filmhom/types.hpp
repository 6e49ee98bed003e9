#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace filmhom {

// Small dense matrices live on the stack; every per-cell gradient fits in 3x3.
constexpr int kMaxDim = 3;

template <typename Scalar>
using SmallMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;
template <typename Scalar>
using SmallVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;

using SmallMatrixd = SmallMatrix<double>;
using SmallVectord = SmallVector<double>;

// An m x n deformation gradient. The last column is the transverse part F_n,
// the first n-1 columns the in-plane part Fbar.
using DeformationGradient = Eigen::MatrixXd;

inline Eigen::MatrixXd in_plane(const DeformationGradient& F) { return F.leftCols(F.cols() - 1); }
inline Eigen::VectorXd transverse(const DeformationGradient& F) { return F.col(F.cols() - 1); }

template <typename DerivedA, typename DerivedB>
DeformationGradient join(const Eigen::MatrixBase<DerivedA>& Fbar, const Eigen::MatrixBase<DerivedB>& Fn) {
    DeformationGradient F(Fbar.rows(), Fbar.cols() + 1);
    F.leftCols(Fbar.cols()) = Fbar;
    F.col(Fbar.cols()) = Fn;
    return F;
}

// Error taxonomy. The CLI maps each type onto a distinct exit code.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ResolutionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct StructuralInconsistency : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace filmhom
