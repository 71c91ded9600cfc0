#include "klnmf/solvers.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace klnmf {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void validate_config(const SolverConfig& cfg) {
    if (!(cfg.rho > 0.0 && cfg.rho <= 1.0))
        throw std::invalid_argument("config: rho must lie in (0, 1]");
    if (cfg.max_iter < 1)
        throw std::invalid_argument("config: max_iter must be positive");
    if (cfg.tol < 0.0)
        throw std::invalid_argument("config: tol must be nonnegative");
    if (cfg.trace_every < 1)
        throw std::invalid_argument("config: trace_every must be positive");
    if (cfg.lambda_rule == LambdaRule::Scaled &&
        (cfg.lambda_scale_w <= 0.0 || cfg.lambda_scale_h <= 0.0))
        throw std::invalid_argument("config: lambda scales must be positive");
    if (cfg.potential_m_scale <= 0.0)
        throw std::invalid_argument(
            "config: potential_m_scale must be positive");
}

// Per-block step sizes from the majorization constants.
std::pair<double, double> select_lambda(const MajorizerState& s,
                                        const SolverConfig& cfg) {
    const double cw =
        cfg.lambda_rule == LambdaRule::Scaled ? cfg.lambda_scale_w : 1.0;
    const double ch =
        cfg.lambda_rule == LambdaRule::Scaled ? cfg.lambda_scale_h : 1.0;
    double lw, lh;
    if (cfg.step_mode == StepMode::Joint) {
        lw = cw / s.L_joint;
        lh = ch / s.L_joint;
    } else {
        lw = cw / s.L_w;
        lh = ch / s.L_h;
    }
    if (cfg.strict_step) {
        lw /= 1.0 + kStrictStepEpsilon;
        lh /= 1.0 + kStrictStepEpsilon;
    }
    if (!(lw > 0.0) || !(lh > 0.0))
        throw std::invalid_argument("step: nonpositive lambda");
    return {lw, lh};
}

FactorPair apply_prox(const KLProblem& p, const Matrix& P, const Matrix& Q,
                      double lambda_w, double lambda_h) {
    const Regularizer& reg = p.reg();
    switch (reg.kind) {
        case RegKind::None:
            return {prox_step_sqfro(P, 0.0), prox_step_sqfro(Q, 0.0)};
        case RegKind::L1:
            return {prox_step_l1(P, reg.mu_w * lambda_w),
                    prox_step_l1(Q, reg.mu_h * lambda_h)};
        case RegKind::SquaredFrobenius:
            return {prox_step_sqfro(P, reg.mu_w * lambda_w),
                    prox_step_sqfro(Q, reg.mu_h * lambda_h)};
    }
    throw std::logic_error("step: unknown regularizer");
}

FactorPair prox_update(const KLProblem& p, const MajorizerState& s,
                       const FactorPair& y, double lambda_w,
                       double lambda_h) {
    auto [P, Q] = assemble_P(s, y, lambda_w, lambda_h);
    return apply_prox(p, P, Q, lambda_w, lambda_h);
}

}  // namespace

const char* to_string(RestartReason r) {
    switch (r) {
        case RestartReason::None:
            return "none";
        case RestartReason::Nonpositive:
            return "nonpositive";
        case RestartReason::DistanceTest:
            return "distance_test";
    }
    return "unknown";
}

Matrix prox_step_l1(const Matrix& p, double mu_lambda) {
    if (mu_lambda < 0.0)
        throw std::invalid_argument("prox_step_l1: negative mu*lambda");
    Matrix out(p.rows(), p.cols());
    const double* in = p.data();
    double* o = out.data();
    for (Index i = 0; i < p.size(); ++i) {
        const double a = in[i] + mu_lambda;
        const double s = std::sqrt(a * a + 4.0);
        // Two algebraically equal forms; pick the one without cancellation.
        o[i] = a >= 0.0 ? 2.0 / (a + s) : 0.5 * (s - a);
    }
    return out;
}

Matrix prox_step_sqfro(const Matrix& p, double mu_lambda) {
    if (mu_lambda < 0.0)
        throw std::invalid_argument("prox_step_sqfro: negative mu*lambda");
    const double c = 1.0 + mu_lambda;
    Matrix out(p.rows(), p.cols());
    const double* in = p.data();
    double* o = out.data();
    for (Index i = 0; i < p.size(); ++i) {
        const double a = in[i];
        const double s = std::sqrt(a * a + 4.0 * c);
        o[i] = a >= 0.0 ? 2.0 / (a + s) : (s - a) / (2.0 * c);
    }
    return out;
}

std::pair<Matrix, Matrix> assemble_P(const MajorizerState& s,
                                     const FactorPair& y, double lambda_w,
                                     double lambda_h) {
    auto [gw, gh] = grad_majorizer(s, y);
    const FactorPair gphi = grad_phi(y);
    return {lambda_w * gw - gphi.W, lambda_h * gh - gphi.H};
}

std::pair<FactorPair, StepMeta> mmbpg_step(const KLProblem& p,
                                           const FactorPair& z,
                                           const SolverConfig& cfg) {
    const MajorizerState s = build_majorizer(p, z);
    const auto [lw, lh] = select_lambda(s, cfg);
    StepMeta meta{lw, lh, s.L_w, s.L_h, s.L_joint, 0.0, RestartReason::None};
    return {prox_update(p, s, z, lw, lh), meta};
}

std::tuple<FactorPair, ExtrapolationState, StepMeta> mmbpge_step(
    const KLProblem& p, const FactorPair& z, const ExtrapolationState& ext,
    const SolverConfig& cfg) {
    const double theta_km1 = ext.theta_curr;
    double theta_k = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta_km1 * theta_km1));
    double beta = cfg.force_beta_zero ? 0.0 : (theta_km1 - 1.0) / theta_k;

    FactorPair y{z.W + beta * (z.W - ext.Z_prev.W),
                 z.H + beta * (z.H - ext.Z_prev.H)};

    RestartReason restart = RestartReason::None;
    if (y.W.minCoeff() <= 0.0 || y.H.minCoeff() <= 0.0) {
        restart = RestartReason::Nonpositive;
    } else if (bregman_distance(z, y) > cfg.rho * ext.dist_prev) {
        restart = RestartReason::DistanceTest;
    }
    if (restart != RestartReason::None) {
        y = z;
        theta_k = 1.0;
        beta = 0.0;
    }

    // Majorization weights come from the current iterate; the subproblem is
    // linearized at the extrapolated point.
    const MajorizerState s = build_majorizer(p, z);
    const auto [lw, lh] = select_lambda(s, cfg);
    FactorPair z_next = prox_update(p, s, y, lw, lh);

    ExtrapolationState next;
    next.theta_prev = restart == RestartReason::None ? theta_km1 : 1.0;
    next.theta_curr = theta_k;
    next.Z_prev = z;
    next.dist_prev = bregman_distance(z, z_next);

    StepMeta meta{lw, lh, s.L_w, s.L_h, s.L_joint, beta, restart};
    return {std::move(z_next), std::move(next), meta};
}

double potential_value(const KLProblem& p, const FactorPair& z_curr,
                       const FactorPair& z_next, double M) {
    if (M < 0.0) throw std::invalid_argument("potential_value: negative M");
    const double psi = objective(p, z_next);
    return M == 0.0 ? psi : psi + M * bregman_distance(z_curr, z_next);
}

double step_criterion(const FactorPair& z_prev, const FactorPair& z_next) {
    const double dw = (z_next.W - z_prev.W).squaredNorm();
    const double dh = (z_next.H - z_prev.H).squaredNorm();
    const double step = std::sqrt(dw + dh);
    return step / std::max(1.0, std::sqrt(squared_norm(z_next)));
}

namespace {

TraceRecord make_record(const KLProblem& p, const FactorPair& z,
                        std::int64_t iter, double time_s, double potential,
                        const StepMeta& meta) {
    TraceRecord rec;
    rec.iter = iter;
    rec.time_s = time_s;
    rec.objective = objective(p, z);
    rec.potential = potential;
    try {
        rec.rel_error = relative_error(p, z);
    } catch (const DegenerateMetricError&) {
        rec.rel_error = kNaN;
    }
    std::tie(rec.kkt_w, rec.kkt_h) = kkt_residuals(p, z);
    rec.restart = meta.restart;
    rec.lambda_w = meta.lambda_w;
    rec.lambda_h = meta.lambda_h;
    rec.L_w = meta.L_w;
    rec.L_h = meta.L_h;
    return rec;
}

}  // namespace

std::pair<FactorPair, SolverTrace> run_solver(const KLProblem& p,
                                              const FactorPair& z0,
                                              const SolverConfig& cfg) {
    validate_config(cfg);
    require_strictly_positive(z0, "run_solver");
    require_compatible(z0);

    const bool extrapolated = cfg.algorithm == Algorithm::MMBPGe;
    FactorPair z = z0;
    ExtrapolationState ext;
    ext.Z_prev = z0;

    SolverTrace trace;
    trace.records.push_back(make_record(p, z, 0, 0.0,
                                        extrapolated ? objective(p, z) : kNaN,
                                        StepMeta{}));

    double monitor_m = -1.0;  // fixed after the first step
    double solve_seconds = 0.0;
    using clock = std::chrono::steady_clock;

    for (std::int64_t k = 0; k < cfg.max_iter; ++k) {
        FactorPair z_next;
        StepMeta meta;
        const auto t0 = clock::now();
        if (extrapolated) {
            auto [zn, ext_next, m] = mmbpge_step(p, z, ext, cfg);
            z_next = std::move(zn);
            ext = std::move(ext_next);
            meta = m;
        } else {
            auto [zn, m] = mmbpg_step(p, z, cfg);
            z_next = std::move(zn);
            meta = m;
        }
        solve_seconds += std::chrono::duration<double>(clock::now() - t0).count();

        if (meta.restart == RestartReason::Nonpositive)
            ++trace.restarts_nonpositive;
        else if (meta.restart == RestartReason::DistanceTest)
            ++trace.restarts_distance;

        if (extrapolated && monitor_m < 0.0) {
            const double lam = std::min(meta.lambda_w, meta.lambda_h);
            monitor_m = cfg.potential_m_scale *
                        std::sqrt(cfg.rho * (1.0 + lam * meta.L_joint)) / lam;
        }

        const std::int64_t iter = k + 1;
        const double crit = step_criterion(z, z_next);
        const bool done = crit <= cfg.tol || iter == cfg.max_iter;
        trace.iterations = iter;
        trace.converged = crit <= cfg.tol;

        if (iter % cfg.trace_every == 0 || done) {
            const double potential =
                extrapolated ? objective(p, z_next) +
                                   monitor_m * bregman_distance(z, z_next)
                             : kNaN;
            TraceRecord rec =
                make_record(p, z_next, iter, solve_seconds, potential, meta);
            if (!std::isfinite(rec.objective)) {
                trace.records.push_back(rec);
                throw SolverDivergenceError(
                    "run_solver: non-finite objective at iteration " +
                        std::to_string(iter),
                    trace);
            }
            trace.records.push_back(std::move(rec));
        }
        z = std::move(z_next);
        if (crit <= cfg.tol) break;
    }
    return {std::move(z), std::move(trace)};
}

}  // namespace klnmf
