#include "klnmf/matrix.hpp"

namespace klnmf {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw std::invalid_argument(
            "elementwise: shape mismatch (" + std::to_string(a.rows()) + "x" +
            std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
            "x" + std::to_string(b.cols()) + ")");
    }
}

}  // namespace

void require_compatible(const FactorPair& z) {
    if (z.W.cols() != z.H.rows()) {
        throw std::invalid_argument(
            "factor pair: W.cols() != H.rows() (" +
            std::to_string(z.W.cols()) + " vs " + std::to_string(z.H.rows()) +
            ")");
    }
}

void require_strictly_positive(const FactorPair& z, const char* what) {
    if (z.W.size() == 0 || z.H.size() == 0)
        throw std::invalid_argument(std::string(what) + ": empty factor");
    if (z.W.minCoeff() <= 0.0 || z.H.minCoeff() <= 0.0)
        throw std::domain_error(std::string(what) +
                                ": factor entries must be strictly positive");
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw std::invalid_argument(
            "matmul: inner dimensions disagree (" + std::to_string(a.cols()) +
            " vs " + std::to_string(b.rows()) + ")");
    }
    return a * b;
}

Matrix elementwise(ElementwiseOp op, const Matrix& a, const Matrix& b) {
    require_same_shape(a, b);
    switch (op) {
        case ElementwiseOp::Add:
            return a + b;
        case ElementwiseOp::Sub:
            return a - b;
        case ElementwiseOp::Mul:
            return a.cwiseProduct(b);
        case ElementwiseOp::Div:
            if ((b.array() == 0.0).any())
                throw std::domain_error(
                    "elementwise: division by zero denominator entry");
            return a.cwiseQuotient(b);
        case ElementwiseOp::Max0:
            return a.cwiseMax(b);
    }
    throw std::logic_error("elementwise: unknown op");
}

Matrix elementwise(ElementwiseOp op, const Matrix& a, double b) {
    switch (op) {
        case ElementwiseOp::Add:
            return (a.array() + b).matrix();
        case ElementwiseOp::Sub:
            return (a.array() - b).matrix();
        case ElementwiseOp::Mul:
            return a * b;
        case ElementwiseOp::Div:
            if (b == 0.0)
                throw std::domain_error("elementwise: division by zero scalar");
            return a / b;
        case ElementwiseOp::Max0:
            return a.cwiseMax(b);
    }
    throw std::logic_error("elementwise: unknown op");
}

// stableNorm rescales internally, so tiny nonzero entries do not underflow
// to an exact zero norm.
double frobenius_norm(const Matrix& a) { return a.stableNorm(); }

}  // namespace klnmf
