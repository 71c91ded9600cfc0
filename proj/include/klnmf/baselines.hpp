#pragma once

#include "klnmf/solvers.hpp"

namespace klnmf {

enum class BaselineAlgorithm { MU, MUe, CCD, AGD };

struct BaselineConfig {
    BaselineAlgorithm algorithm = BaselineAlgorithm::MU;
    std::int64_t ccd_inner_iters = 100;
    double agd_c = 2.0;  // initial step = 1/(agd_c * L0), agd_c > 1
    double agd_shrink = 0.5;
    double agd_sufficient_decrease = 1e-4;
    int agd_max_backtracks = 50;
    double positivity_floor = 1e-15;
    std::int64_t max_iter = 3000;
    double tol = 1e-9;
    std::int64_t trace_every = 10;
    bool force_beta_zero = false;  // test hook shared with the main solvers
};

/// Multiplicative update: W then H, each scaled by the ratio of the
/// data-fit numerator to the (regularizer-shifted) denominator. A zero
/// denominator or a collapsed (zero) entry raises std::domain_error, since
/// positive iterates cannot produce either.
FactorPair mu_step(const KLProblem& p, const FactorPair& z);

/// Multiplicative update at the extrapolated point
/// Y = Z + beta [Z - Z_prev]_+ (clipped difference, so Y stays positive).
/// No convergence guarantee when a regularizer is active; provided for
/// benchmark comparisons.
std::pair<FactorPair, ExtrapolationState> mue_step(
    const KLProblem& p, const FactorPair& z, const ExtrapolationState& ext,
    bool force_beta_zero = false);

/// inner_iters full cycles of coordinate-wise Newton updates over W then H,
/// each clipped at the positivity floor. Unregularized problems only.
FactorPair ccd_pass(const KLProblem& p, const FactorPair& z,
                    std::int64_t inner_iters,
                    double floor = 1e-15);

/// Carried line-search state for the alternating gradient method.
struct AGDState {
    double step_w = 0.0;
    double step_h = 0.0;
    double initial_step = 0.0;
    bool last_step_failed = false;
};

/// One alternating projected/proximal gradient step with backtracking on
/// each block. On line-search exhaustion the block is left unchanged and
/// the failure is flagged in the state.
FactorPair agd_step(const KLProblem& p, const FactorPair& z,
                    const BaselineConfig& cfg, AGDState& state);

/// Runs the configured baseline from Z0 under the same termination rule and
/// trace schema as run_solver.
std::pair<FactorPair, SolverTrace> run_baseline(const KLProblem& p,
                                                const FactorPair& z0,
                                                const BaselineConfig& cfg);

}  // namespace klnmf
