#include "klnmf/baselines.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace klnmf {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Matrix ratio_or_throw(const Matrix& x, const FactorPair& z) {
    const Matrix wh = z.W * z.H;
    if (wh.minCoeff() < kMinPositiveProduct)
        throw std::domain_error("baseline: WH entry underflowed");
    return x.cwiseQuotient(wh);
}

void require_no_zero(const Matrix& denom, const char* what) {
    if ((denom.array() == 0.0).any())
        throw std::domain_error(std::string(what) + ": zero denominator");
}

void require_positive_result(const Matrix& updated, const char* what) {
    if (updated.minCoeff() <= 0.0)
        throw std::domain_error(std::string(what) +
                                ": update collapsed an entry to zero");
}

}  // namespace

FactorPair mu_step(const KLProblem& p, const FactorPair& z) {
    require_strictly_positive(z, "mu_step");
    if (p.reg().kind == RegKind::SquaredFrobenius)
        throw std::invalid_argument(
            "mu_step: squared-Frobenius regularizer not supported");
    const double mu_w = p.reg().mu_w;
    const double mu_h = p.reg().mu_h;

    FactorPair out = z;
    {
        const Matrix ratio = ratio_or_throw(p.X(), out);
        const Matrix numer = ratio * out.H.transpose();
        Matrix denom(out.W.rows(), out.W.cols());
        denom.rowwise() = out.H.rowwise().sum().transpose();
        denom.array() += mu_w;
        require_no_zero(denom, "mu_step (W)");
        out.W = out.W.cwiseProduct(numer).cwiseQuotient(denom);
        require_positive_result(out.W, "mu_step (W)");
    }
    {
        const Matrix ratio = ratio_or_throw(p.X(), out);
        const Matrix numer = out.W.transpose() * ratio;
        Matrix denom(out.H.rows(), out.H.cols());
        denom.colwise() = out.W.colwise().sum().transpose();
        denom.array() += mu_h;
        require_no_zero(denom, "mu_step (H)");
        out.H = out.H.cwiseProduct(numer).cwiseQuotient(denom);
        require_positive_result(out.H, "mu_step (H)");
    }
    return out;
}

std::pair<FactorPair, ExtrapolationState> mue_step(
    const KLProblem& p, const FactorPair& z, const ExtrapolationState& ext,
    bool force_beta_zero) {
    const double theta_km1 = ext.theta_curr;
    const double theta_k =
        0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta_km1 * theta_km1));
    const double beta = force_beta_zero ? 0.0 : (theta_km1 - 1.0) / theta_k;

    // Clipping the difference keeps Y >= Z > 0, so no positivity restart is
    // needed here.
    FactorPair y{z.W + beta * (z.W - ext.Z_prev.W).cwiseMax(0.0),
                 z.H + beta * (z.H - ext.Z_prev.H).cwiseMax(0.0)};
    FactorPair z_next = mu_step(p, y);

    ExtrapolationState next;
    next.theta_prev = theta_km1;
    next.theta_curr = theta_k;
    next.Z_prev = z;
    return {std::move(z_next), std::move(next)};
}

FactorPair ccd_pass(const KLProblem& p, const FactorPair& z,
                    std::int64_t inner_iters, double floor) {
    require_strictly_positive(z, "ccd_pass");
    if (p.reg().kind != RegKind::None)
        throw std::invalid_argument(
            "ccd_pass: only the unregularized problem is supported");
    if (inner_iters < 1)
        throw std::invalid_argument("ccd_pass: inner_iters must be positive");

    const Matrix& x = p.X();
    FactorPair out = z;
    Matrix wh = out.W * out.H;

    // One coordinate update: Newton step on the one-variable restriction of
    // the loss, clipped at the floor, with the step halved until the
    // restriction does not increase (an undamped jump from the right of the
    // minimizer can land on the floor where the loss blows up). The running
    // product is patched by the applied delta. Two refinements per visit.
    //
    // The 1-D restriction along direction d with current product slice s is
    //   f(w + delta) - f(w) = -sum_j x_j log(1 + delta d_j / s_j)
    //                         + delta * sum_j d_j.
    auto newton_update = [&](auto x_slice, auto d_slice, auto wh_slice,
                             double& coord) {
        for (int pass = 0; pass < 2; ++pass) {
            const double dsum = d_slice.sum();
            const double g = dsum - (x_slice * d_slice / wh_slice).sum();
            const double h =
                (x_slice * d_slice.square() / wh_slice.square()).sum();
            double target;
            if (h > 0.0)
                target = std::max(coord - g / h, floor);
            else if (g > 0.0)
                target = floor;
            else
                return;
            double delta = target - coord;
            if (delta == 0.0) return;
            bool accepted = false;
            for (int damp = 0; damp < 30; ++damp) {
                const double change =
                    -(x_slice *
                      (1.0 + delta * d_slice / wh_slice).log()).sum() +
                    delta * dsum;
                if (change <= 1e-12 * (1.0 + std::abs(delta * dsum))) {
                    accepted = true;
                    break;
                }
                delta *= 0.5;
            }
            if (!accepted) return;
            wh_slice += delta * d_slice;
            coord += delta;
        }
    };

    auto update_w = [&](Index i, Index l) {
        newton_update(x.row(i).array(), out.H.row(l).array(),
                      wh.row(i).array(), out.W(i, l));
    };
    auto update_h = [&](Index l, Index j) {
        newton_update(x.col(j).array(), out.W.col(l).array(),
                      wh.col(j).array(), out.H(l, j));
    };

    for (std::int64_t it = 0; it < inner_iters; ++it) {
        for (Index i = 0; i < out.W.rows(); ++i)
            for (Index l = 0; l < out.W.cols(); ++l) update_w(i, l);
        for (Index l = 0; l < out.H.rows(); ++l)
            for (Index j = 0; j < out.H.cols(); ++j) update_h(l, j);
    }
    return out;
}

namespace {

// Proximal/projected candidate for one block given gradient and step size.
Matrix agd_candidate(const Matrix& block, const Matrix& grad, double step,
                     const Regularizer& reg, double mu, double floor) {
    Matrix v = block - step * grad;
    switch (reg.kind) {
        case RegKind::None:
            return v.cwiseMax(floor);
        case RegKind::L1:
            return (v.array() - step * mu).cwiseMax(floor).matrix();
        case RegKind::SquaredFrobenius:
            return (v / (1.0 + step * mu)).cwiseMax(floor);
    }
    throw std::logic_error("agd: unknown regularizer");
}

}  // namespace

FactorPair agd_step(const KLProblem& p, const FactorPair& z,
                    const BaselineConfig& cfg, AGDState& state) {
    require_strictly_positive(z, "agd_step");
    FactorPair cur = z;
    state.last_step_failed = false;

    auto search_block = [&](bool w_block, double& step) {
        auto [gw, gh] = grad_f(p, cur);
        const Matrix& grad = w_block ? gw : gh;
        const Matrix& block = w_block ? cur.W : cur.H;
        const double mu = w_block ? p.reg().mu_w : p.reg().mu_h;
        const double f_cur = objective(p, cur);

        double s = std::min(2.0 * step, state.initial_step);
        for (int bt = 0; bt <= cfg.agd_max_backtracks; ++bt) {
            Matrix cand = agd_candidate(block, grad, s, p.reg(), mu,
                                        cfg.positivity_floor);
            FactorPair trial = cur;
            (w_block ? trial.W : trial.H) = cand;
            const double decrease =
                cfg.agd_sufficient_decrease / s * (cand - block).squaredNorm();
            if (objective(p, trial) <= f_cur - decrease) {
                cur = std::move(trial);
                step = s;
                return true;
            }
            s *= cfg.agd_shrink;
        }
        step = s;
        return false;
    };

    const bool ok_w = search_block(true, state.step_w);
    const bool ok_h = search_block(false, state.step_h);
    state.last_step_failed = !(ok_w && ok_h);
    return cur;
}

std::pair<FactorPair, SolverTrace> run_baseline(const KLProblem& p,
                                                const FactorPair& z0,
                                                const BaselineConfig& cfg) {
    require_strictly_positive(z0, "run_baseline");
    require_compatible(z0);
    if (cfg.max_iter < 1)
        throw std::invalid_argument("config: max_iter must be positive");
    if (cfg.trace_every < 1)
        throw std::invalid_argument("config: trace_every must be positive");
    if (cfg.algorithm == BaselineAlgorithm::CCD &&
        p.reg().kind != RegKind::None)
        throw std::invalid_argument(
            "config: ccd supports only the unregularized problem");
    if ((cfg.algorithm == BaselineAlgorithm::MU ||
         cfg.algorithm == BaselineAlgorithm::MUe) &&
        p.reg().kind == RegKind::SquaredFrobenius)
        throw std::invalid_argument(
            "config: mu/mue support only none or l1 regularizers");
    if (cfg.algorithm == BaselineAlgorithm::AGD && cfg.agd_c <= 1.0)
        throw std::invalid_argument("config: agd_c must exceed 1");

    FactorPair z = z0;
    ExtrapolationState ext;
    ext.Z_prev = z0;
    AGDState agd;
    if (cfg.algorithm == BaselineAlgorithm::AGD) {
        agd.initial_step =
            1.0 / (cfg.agd_c * build_majorizer(p, z0).L_joint);
        agd.step_w = agd.step_h = agd.initial_step;
    }

    SolverTrace trace;
    auto record = [&](const FactorPair& zc, std::int64_t iter, double time_s,
                      double lw, double lh, bool failed) {
        TraceRecord rec;
        rec.iter = iter;
        rec.time_s = time_s;
        rec.objective = objective(p, zc);
        rec.potential = kNaN;
        try {
            rec.rel_error = relative_error(p, zc);
        } catch (const DegenerateMetricError&) {
            rec.rel_error = kNaN;
        }
        std::tie(rec.kkt_w, rec.kkt_h) = kkt_residuals(p, zc);
        rec.lambda_w = lw;
        rec.lambda_h = lh;
        rec.step_failed = failed;
        return rec;
    };
    trace.records.push_back(record(z, 0, 0.0, 0.0, 0.0, false));

    double solve_seconds = 0.0;
    using clock = std::chrono::steady_clock;
    for (std::int64_t k = 0; k < cfg.max_iter; ++k) {
        FactorPair z_next;
        const auto t0 = clock::now();
        switch (cfg.algorithm) {
            case BaselineAlgorithm::MU:
                z_next = mu_step(p, z);
                break;
            case BaselineAlgorithm::MUe: {
                auto [zn, ext_next] =
                    mue_step(p, z, ext, cfg.force_beta_zero);
                z_next = std::move(zn);
                ext = std::move(ext_next);
                break;
            }
            case BaselineAlgorithm::CCD:
                z_next = ccd_pass(p, z, cfg.ccd_inner_iters,
                                  cfg.positivity_floor);
                break;
            case BaselineAlgorithm::AGD:
                z_next = agd_step(p, z, cfg, agd);
                break;
        }
        solve_seconds +=
            std::chrono::duration<double>(clock::now() - t0).count();
        if (agd.last_step_failed) ++trace.step_failures;

        const std::int64_t iter = k + 1;
        const double crit = step_criterion(z, z_next);
        const bool done = crit <= cfg.tol || iter == cfg.max_iter;
        trace.iterations = iter;
        trace.converged = crit <= cfg.tol;

        if (iter % cfg.trace_every == 0 || done) {
            const bool is_agd = cfg.algorithm == BaselineAlgorithm::AGD;
            TraceRecord rec = record(z_next, iter, solve_seconds,
                                     is_agd ? agd.step_w : 0.0,
                                     is_agd ? agd.step_h : 0.0,
                                     agd.last_step_failed);
            if (!std::isfinite(rec.objective)) {
                trace.records.push_back(rec);
                throw SolverDivergenceError(
                    "run_baseline: non-finite objective at iteration " +
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
