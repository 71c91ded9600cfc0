#pragma once

#include "klnmf/matrix.hpp"

#include <optional>
#include <utility>

namespace klnmf {

// Product entries below this are treated as misuse rather than floored: the
// closed-form updates keep iterates strictly positive, so underflow here
// means a bug upstream.
inline constexpr double kMinPositiveProduct = 1e-300;

// Denominator threshold below which the relative-error metric is undefined.
inline constexpr double kDegenerateDenominator = 1e-12;

enum class RegKind { None, L1, SquaredFrobenius };

/// Separable regularizer g(W, H). L1 uses mu_w*||W||_1 + mu_h*||H||_1;
/// SquaredFrobenius uses (mu_w/2)*||W||_F^2 + (mu_h/2)*||H||_F^2.
struct Regularizer {
    RegKind kind = RegKind::None;
    double mu_w = 0.0;
    double mu_h = 0.0;

    static Regularizer none() { return {}; }
    static Regularizer l1(double mu_w, double mu_h);
    static Regularizer squared_frobenius(double mu_w, double mu_h);

    double value(const FactorPair& z) const;
};

/// Raised by relative_error when the metric's denominator degenerates;
/// callers should fall back to reporting the raw objective.
class DegenerateMetricError : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

/// The KL-NMF instance: observed nonnegative matrix X, inner dimension r,
/// and the regularizer. Owns objective and gradient evaluation.
class KLProblem {
  public:
    KLProblem(Matrix x, Index r, Regularizer reg = Regularizer::none());

    const Matrix& X() const { return x_; }
    Index m() const { return x_.rows(); }
    Index n() const { return x_.cols(); }
    Index r() const { return r_; }
    const Regularizer& reg() const { return reg_; }

    /// Non-empty when r exceeds min(m, n); the CLI prints it.
    const std::optional<std::string>& warning() const { return warning_; }

  private:
    Matrix x_;
    Index r_;
    Regularizer reg_;
    std::optional<std::string> warning_;
};

/// Majorization data built at an anchor point Z^k. S_W and S_H are the
/// marginals of the iteration's mixture weights against X,
///   S_W_il = W_il * ((X / WH) H^T)_il,   S_H_lj = H_lj * (W^T (X / WH))_lj,
/// so the m x r x n weight tensor is never materialized. The step-size
/// constants satisfy the smooth-adaptable bound for the kernel in
/// bregman.hpp: L_joint covers both blocks, (L_w, L_h) the block split.
struct MajorizerState {
    Matrix S_W;
    Matrix S_H;
    double L_joint = 0.0;
    double L_w = 0.0;
    double L_h = 0.0;
    FactorPair anchor;
    // Anchor-dependent constant of the majorizer value; see majorizer_value.
    double value_const = 0.0;
};

/// sum(X log(X / WH) - X + WH) with 0 log 0 := 0, so cells where X is zero
/// contribute exactly WH. WH must be strictly positive.
double kl_divergence(const Matrix& x, const Matrix& wh);

/// Psi(Z) = kl_divergence(X, WH) + g(Z).
double objective(const KLProblem& p, const FactorPair& z);

/// Gradients of the loss f:
///   grad_W f = (1 - X/WH) H^T,   grad_H f = W^T (1 - X/WH).
std::pair<Matrix, Matrix> grad_f(const KLProblem& p, const FactorPair& z);

MajorizerState build_majorizer(const KLProblem& p, const FactorPair& anchor);

/// Gradient of the majorizer at Y:
///   (grad_W)_il = -S_W_il / Y.W_il + sum_j Y.H_lj,
///   (grad_H)_lj = -S_H_lj / Y.H_lj + sum_i Y.W_il.
/// Coincides with grad_f at the anchor.
std::pair<Matrix, Matrix> grad_majorizer(const MajorizerState& s,
                                         const FactorPair& y);

/// Majorizer value at Y, assembled from the precomputed anchor constant:
///   value_const - sum(S_W log Y.W) - sum(S_H log Y.H) + sum(Y.W Y.H).
/// Upper-bounds f everywhere and equals f at the anchor.
double majorizer_value(const MajorizerState& s, const FactorPair& y);

/// f(Z) divided by sum_ij X_ij log(n X_ij / row_sum_i(X)); zero entries of X
/// contribute nothing to the denominator. Throws DegenerateMetricError when
/// the denominator falls below kDegenerateDenominator (e.g. constant rows).
double relative_error(const KLProblem& p, const FactorPair& z);

/// Norms of the normalized first-order residuals: Frobenius norm of the
/// column-normalized W (Euclidean column norms) times grad_W f entrywise,
/// and of the row-normalized H times grad_H f entrywise.
std::pair<double, double> kkt_residuals(const KLProblem& p,
                                        const FactorPair& z);

}  // namespace klnmf
