#pragma once

#include "klnmf/bregman.hpp"
#include "klnmf/model.hpp"

#include <cstdint>
#include <vector>

namespace klnmf {

enum class Algorithm { MMBPG, MMBPGe };

/// Joint mode runs one step-size constant for both blocks; Split derives a
/// separate constant per block from the block-wise majorization bounds.
enum class StepMode { Joint, Split };

/// ReciprocalL takes lambda = 1/L each iteration; Scaled applies user
/// factors, lambda = c/L per block.
enum class LambdaRule { ReciprocalL, Scaled };

enum class RestartReason { None, Nonpositive, DistanceTest };

const char* to_string(RestartReason r);

// Safety factor used by strict_step: lambda is shrunk to 1/((1+eps) L) so
// the monotone-decrease guarantees hold with margin.
inline constexpr double kStrictStepEpsilon = 0.05;

struct SolverConfig {
    Algorithm algorithm = Algorithm::MMBPGe;
    StepMode step_mode = StepMode::Joint;
    LambdaRule lambda_rule = LambdaRule::ReciprocalL;
    double lambda_scale_w = 1.0;  // used when lambda_rule == Scaled
    double lambda_scale_h = 1.0;
    // Default lambda = 1/L reproduces the benchmark settings; strict_step
    // shrinks it so the per-step decrease guarantees apply exactly.
    bool strict_step = false;
    double rho = 0.999;  // extrapolation restart threshold, in (0, 1]
    std::int64_t max_iter = 3000;
    double tol = 1e-9;  // relative step-norm termination threshold
    // Multiplier on the monitored potential weight M (geometric midpoint of
    // the admissible interval); monitoring only, never affects iterates.
    double potential_m_scale = 1.0;
    std::int64_t trace_every = 10;
    std::uint64_t seed = 0;  // recorded in manifests; the solver itself is
                             // deterministic given Z0
    // Test hook: forces beta = 0 so the extrapolated solver must reproduce
    // the plain one exactly.
    bool force_beta_zero = false;
};

/// Momentum bookkeeping across extrapolated iterations. theta_curr is the
/// most recently computed theta (next iteration's theta_{k-1}); a restart
/// resets both values to 1. dist_prev caches D_phi(Z_prev, Z) so the restart
/// test does not recompute it.
struct ExtrapolationState {
    double theta_curr = 1.0;
    double theta_prev = 1.0;
    FactorPair Z_prev;
    double dist_prev = 0.0;
};

struct TraceRecord {
    std::int64_t iter = 0;
    double time_s = 0.0;
    double objective = 0.0;
    double potential = 0.0;  // NaN for algorithms that do not monitor it
    double rel_error = 0.0;  // NaN when the metric is undefined
    double kkt_w = 0.0;
    double kkt_h = 0.0;
    RestartReason restart = RestartReason::None;
    double lambda_w = 0.0;
    double lambda_h = 0.0;
    double L_w = 0.0;
    double L_h = 0.0;
    bool step_failed = false;  // line-search exhaustion (AGD only)
};

struct SolverTrace {
    std::vector<TraceRecord> records;
    std::int64_t iterations = 0;
    bool converged = false;  // step-norm criterion met before max_iter
    std::int64_t restarts_nonpositive = 0;
    std::int64_t restarts_distance = 0;
    std::int64_t step_failures = 0;

    std::int64_t restarts_total() const {
        return restarts_nonpositive + restarts_distance;
    }
};

/// Raised when a run produces a non-finite objective; carries the partial
/// trace for post-mortem inspection.
class SolverDivergenceError : public std::runtime_error {
  public:
    SolverDivergenceError(const std::string& what, SolverTrace trace)
        : std::runtime_error(what), trace(std::move(trace)) {}
    SolverTrace trace;
};

struct StepMeta {
    double lambda_w = 0.0;
    double lambda_h = 0.0;
    double L_w = 0.0;
    double L_h = 0.0;
    double L_joint = 0.0;
    double beta = 0.0;
    RestartReason restart = RestartReason::None;
};

/// Entrywise minimizer of p x + mu_lambda x - log x + x^2/2 over x > 0:
///   x = (-p - mu_lambda + sqrt((p + mu_lambda)^2 + 4)) / 2.
/// Total on any real p; the output is strictly positive.
Matrix prox_step_l1(const Matrix& p, double mu_lambda);

/// Entrywise minimizer of p x + (mu_lambda/2) x^2 - log x + x^2/2:
///   x = (-p + sqrt(p^2 + 4 (1 + mu_lambda))) / (2 (1 + mu_lambda)).
/// mu_lambda = 0 gives the unregularized update.
Matrix prox_step_sqfro(const Matrix& p, double mu_lambda);

/// Linearization coefficients of the subproblem at Y:
///   P = lambda_w grad_W fhat(Y) - grad_W phi(Y), and likewise Q for H.
std::pair<Matrix, Matrix> assemble_P(const MajorizerState& s,
                                     const FactorPair& y, double lambda_w,
                                     double lambda_h);

/// One majorize-then-prox step anchored and evaluated at Z.
std::pair<FactorPair, StepMeta> mmbpg_step(const KLProblem& p,
                                           const FactorPair& z,
                                           const SolverConfig& cfg);

/// One extrapolated step: Y = Z + beta (Z - Z_prev) with the momentum
/// restart tests (nonpositive Y, then the distance test); the majorization
/// weights are built at Z while the subproblem gradients are taken at Y.
std::tuple<FactorPair, ExtrapolationState, StepMeta> mmbpge_step(
    const KLProblem& p, const FactorPair& z, const ExtrapolationState& ext,
    const SolverConfig& cfg);

/// Psi(Z_next) + M * D_phi(Z_curr, Z_next), the monitored potential on
/// consecutive iterates.
double potential_value(const KLProblem& p, const FactorPair& z_curr,
                       const FactorPair& z_next, double M);

/// Relative step-norm termination quantity,
///   ||Z_next - Z_prev||_F / max(1, ||Z_next||_F).
double step_criterion(const FactorPair& z_prev, const FactorPair& z_next);

/// Runs the configured algorithm from Z0 until the step criterion or
/// max_iter. Records a trace row every trace_every iterations plus the
/// initial point and the final iterate.
std::pair<FactorPair, SolverTrace> run_solver(const KLProblem& p,
                                              const FactorPair& z0,
                                              const SolverConfig& cfg);

}  // namespace klnmf
