#include "klnmf/model.hpp"

#include <cmath>

namespace klnmf {

namespace {

// X / WH entrywise; exact zeros of X stay exact zeros.
Matrix ratio_matrix(const Matrix& x, const Matrix& wh) {
    if (x.rows() != wh.rows() || x.cols() != wh.cols())
        throw std::invalid_argument("kl ratio: shape mismatch");
    if (wh.minCoeff() < kMinPositiveProduct)
        throw std::domain_error(
            "kl ratio: WH has a nonpositive (or underflowed) entry");
    return x.cwiseQuotient(wh);
}

Matrix product_of(const FactorPair& z) {
    require_compatible(z);
    return z.W * z.H;
}

}  // namespace

Regularizer Regularizer::l1(double mu_w, double mu_h) {
    if (mu_w < 0.0 || mu_h < 0.0)
        throw std::invalid_argument("regularizer: negative weight");
    return {RegKind::L1, mu_w, mu_h};
}

Regularizer Regularizer::squared_frobenius(double mu_w, double mu_h) {
    if (mu_w < 0.0 || mu_h < 0.0)
        throw std::invalid_argument("regularizer: negative weight");
    return {RegKind::SquaredFrobenius, mu_w, mu_h};
}

double Regularizer::value(const FactorPair& z) const {
    switch (kind) {
        case RegKind::None:
            return 0.0;
        case RegKind::L1:
            // Iterates are positive, but take |.| so the value is meaningful
            // on arbitrary test inputs.
            return mu_w * z.W.cwiseAbs().sum() + mu_h * z.H.cwiseAbs().sum();
        case RegKind::SquaredFrobenius:
            return 0.5 * mu_w * z.W.squaredNorm() +
                   0.5 * mu_h * z.H.squaredNorm();
    }
    throw std::logic_error("regularizer: unknown kind");
}

KLProblem::KLProblem(Matrix x, Index r, Regularizer reg)
    : x_(std::move(x)), r_(r), reg_(reg) {
    if (x_.size() == 0) throw std::invalid_argument("problem: empty X");
    if (r_ < 1) throw std::invalid_argument("problem: r must be positive");
    if (x_.minCoeff() < 0.0)
        throw std::invalid_argument("problem: X has a negative entry");
    if (reg_.kind == RegKind::None && (reg_.mu_w != 0.0 || reg_.mu_h != 0.0))
        throw std::invalid_argument(
            "problem: regularizer 'none' with nonzero weights");
    // Degenerate inputs stay constructible (several operations define their
    // behavior on them); surface them instead of rejecting.
    if (x_.maxCoeff() <= 0.0)
        warning_ = "X has no positive entry; most metrics are undefined";
    else if (r_ > std::min(m(), n()))
        warning_ = "inner dimension r = " + std::to_string(r_) +
                   " exceeds min(m, n) = " +
                   std::to_string(std::min(m(), n()));
}

double kl_divergence(const Matrix& x, const Matrix& wh) {
    if (x.size() > 0 && x.minCoeff() < 0.0)
        throw std::domain_error("kl_divergence: X has a negative entry");
    const Matrix ratio = ratio_matrix(x, wh);
    double acc = 0.0;
    const double* xp = x.data();
    const double* rp = ratio.data();
    for (Index i = 0; i < x.size(); ++i) {
        if (xp[i] > 0.0) acc += xp[i] * std::log(rp[i]) - xp[i];
    }
    return acc + wh.sum();
}

double objective(const KLProblem& p, const FactorPair& z) {
    require_strictly_positive(z, "objective");
    return kl_divergence(p.X(), product_of(z)) + p.reg().value(z);
}

std::pair<Matrix, Matrix> grad_f(const KLProblem& p, const FactorPair& z) {
    require_strictly_positive(z, "grad_f");
    const Matrix ratio = ratio_matrix(p.X(), product_of(z));
    // (1 - R) H^T expands to the row sums of H broadcast minus R H^T,
    // and symmetrically for the H block.
    Matrix gw = -(ratio * z.H.transpose());
    gw.rowwise() += z.H.rowwise().sum().transpose();
    Matrix gh = -(z.W.transpose() * ratio);
    gh.colwise() += z.W.colwise().sum().transpose();
    return {std::move(gw), std::move(gh)};
}

MajorizerState build_majorizer(const KLProblem& p, const FactorPair& anchor) {
    require_strictly_positive(anchor, "build_majorizer");
    const Matrix wh = product_of(anchor);
    const Matrix ratio = ratio_matrix(p.X(), wh);

    MajorizerState s;
    s.anchor = anchor;
    s.S_W = anchor.W.cwiseProduct(ratio * anchor.H.transpose());
    s.S_H = anchor.H.cwiseProduct(anchor.W.transpose() * ratio);

    const double dims = static_cast<double>(std::max(p.m(), p.n()));
    const double max_sw = s.S_W.maxCoeff();
    const double max_sh = s.S_H.maxCoeff();
    s.L_w = std::max(max_sw, dims);
    s.L_h = std::max(max_sh, dims);
    s.L_joint = std::max(s.L_w, s.L_h);

    // Constant part of the majorizer value. Folding the anchor's weight
    // entropy into the X-dependent terms gives
    //   const = sum(X log X - X) + sum(S_W log W^k) + sum(S_H log H^k)
    //           - sum(X log W^k H^k).
    double c = 0.0;
    const double* xp = p.X().data();
    const double* whp = wh.data();
    for (Index i = 0; i < p.X().size(); ++i) {
        if (xp[i] > 0.0)
            c += xp[i] * (std::log(xp[i]) - std::log(whp[i])) - xp[i];
    }
    c += s.S_W.cwiseProduct(anchor.W.array().log().matrix()).sum();
    c += s.S_H.cwiseProduct(anchor.H.array().log().matrix()).sum();
    s.value_const = c;
    return s;
}

std::pair<Matrix, Matrix> grad_majorizer(const MajorizerState& s,
                                         const FactorPair& y) {
    require_strictly_positive(y, "grad_majorizer");
    if (!same_shape(s.anchor, y))
        throw std::invalid_argument("grad_majorizer: shape mismatch");
    Matrix gw = -s.S_W.cwiseQuotient(y.W);
    gw.rowwise() += y.H.rowwise().sum().transpose();
    Matrix gh = -s.S_H.cwiseQuotient(y.H);
    gh.colwise() += y.W.colwise().sum().transpose();
    return {std::move(gw), std::move(gh)};
}

double majorizer_value(const MajorizerState& s, const FactorPair& y) {
    require_strictly_positive(y, "majorizer_value");
    if (!same_shape(s.anchor, y))
        throw std::invalid_argument("majorizer_value: shape mismatch");
    // sum(Y.W Y.H) = <column sums of W, row sums of H>.
    const double product_sum =
        y.W.colwise().sum().dot(y.H.rowwise().sum().transpose());
    return s.value_const -
           s.S_W.cwiseProduct(y.W.array().log().matrix()).sum() -
           s.S_H.cwiseProduct(y.H.array().log().matrix()).sum() + product_sum;
}

double relative_error(const KLProblem& p, const FactorPair& z) {
    const double num = kl_divergence(p.X(), product_of(z));
    const Matrix& x = p.X();
    const double n = static_cast<double>(p.n());
    double den = 0.0;
    for (Index i = 0; i < x.rows(); ++i) {
        const double row_sum = x.row(i).sum();
        if (row_sum <= 0.0) continue;
        for (Index j = 0; j < x.cols(); ++j) {
            const double v = x(i, j);
            if (v > 0.0) den += v * std::log(n * v / row_sum);
        }
    }
    if (den <= kDegenerateDenominator)
        throw DegenerateMetricError(
            "relative_error: denominator is degenerate; report the raw "
            "objective instead");
    return num / den;
}

std::pair<double, double> kkt_residuals(const KLProblem& p,
                                        const FactorPair& z) {
    auto [gw, gh] = grad_f(p, z);
    const Eigen::RowVectorXd wnorms = z.W.colwise().norm();
    const Vector hnorms = z.H.rowwise().norm();
    if ((wnorms.array() == 0.0).any())
        throw std::domain_error("kkt_residuals: zero column of W");
    if ((hnorms.array() == 0.0).any())
        throw std::domain_error("kkt_residuals: zero row of H");
    const Matrix wn = (z.W.array().rowwise() / wnorms.array()).matrix();
    const Matrix hn = (z.H.array().colwise() / hnorms.array()).matrix();
    return {wn.cwiseProduct(gw).norm(), hn.cwiseProduct(gh).norm()};
}

}  // namespace klnmf
