#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace klnmf {

/// Dense 64-bit real matrix, row-major contiguous. All numerical work in this
/// library runs on this type; higher layers express their math as matrix
/// expressions over it.
using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// The factorization variable Z = (W, H) with W of shape m x r and
/// H of shape r x n. Solver steps keep every entry strictly positive.
struct FactorPair {
    Matrix W;
    Matrix H;

    Index rows() const { return W.rows(); }
    Index cols() const { return H.cols(); }
    Index rank() const { return W.cols(); }
};

/// Squared Frobenius norm of the stacked pair.
inline double squared_norm(const FactorPair& z) {
    return z.W.squaredNorm() + z.H.squaredNorm();
}

/// Frobenius inner product summed over both blocks.
inline double dot(const FactorPair& a, const FactorPair& b) {
    return a.W.cwiseProduct(b.W).sum() + a.H.cwiseProduct(b.H).sum();
}

inline bool same_shape(const FactorPair& a, const FactorPair& b) {
    return a.W.rows() == b.W.rows() && a.W.cols() == b.W.cols() &&
           a.H.rows() == b.H.rows() && a.H.cols() == b.H.cols();
}

/// Throws std::invalid_argument unless W.cols() == H.rows().
void require_compatible(const FactorPair& z);

/// Throws std::domain_error if any entry of either factor is <= 0.
void require_strictly_positive(const FactorPair& z, const char* what);

enum class ElementwiseOp { Add, Sub, Mul, Div, Max0 };

/// Matrix product with an explicit inner-dimension check.
Matrix matmul(const Matrix& a, const Matrix& b);

/// Entrywise combination of two equally shaped matrices. Division by a zero
/// denominator entry raises std::domain_error instead of producing Inf.
Matrix elementwise(ElementwiseOp op, const Matrix& a, const Matrix& b);

/// Scalar-broadcast variant: b is applied against every entry of a.
Matrix elementwise(ElementwiseOp op, const Matrix& a, double b);

/// sqrt of the sum of squared entries.
double frobenius_norm(const Matrix& a);

}  // namespace klnmf
