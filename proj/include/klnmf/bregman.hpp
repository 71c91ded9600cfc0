#pragma once

#include "klnmf/matrix.hpp"

namespace klnmf {

// Separable kernel over the open positive orthant,
//   phi(W, H) = sum(-log W_il + W_il^2 / 2) + sum(-log H_lj + H_lj^2 / 2).
// Its per-coordinate second derivative 1/x^2 + 1 >= 1, so phi is 1-strongly
// convex; the closed-form prox updates in solvers.hpp are derived for exactly
// this kernel, which is why it is fixed rather than pluggable.

/// Kernel value over one matrix block.
double phi(const Matrix& a);

/// Kernel value over both factor blocks.
double phi(const FactorPair& z);

/// Entrywise kernel gradient -1/x + x on both blocks.
FactorPair grad_phi(const FactorPair& z);

/// D_phi(z1, z2) = phi(z1) - phi(z2) - <grad_phi(z2), z1 - z2>.
/// Nonnegative; zero iff z1 == z2.
double bregman_distance(const FactorPair& z1, const FactorPair& z2);

}  // namespace klnmf
