// Explicit Euler-Maruyama discretization of the interacting particle system,
// its mean-field proxy (copies driven by a reference ensemble standing in
// for the law), and the ball-truncated variant. Consensus points are frozen
// at the pre-step state; Brownian increments come from addressed noise so a
// particle and its mean-field copy can share them exactly.

#ifndef MINMAXCBO_DYNAMICS_HPP
#define MINMAXCBO_DYNAMICS_HPP

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "minmaxcbo/common.hpp"
#include "minmaxcbo/consensus.hpp"
#include "minmaxcbo/metrics.hpp"
#include "minmaxcbo/noise.hpp"
#include "minmaxcbo/objective.hpp"

namespace mmcbo {

enum class DiffusionMode { Isotropic, Anisotropic };

struct CboParams {
    double lambda = 1.0;
    double sigma = 0.5;
    double alpha = 50.0;
    double beta = 50.0;
    DiffusionMode diffusion = DiffusionMode::Anisotropic;
    double dt = 0.01;
    double horizon = 2.0;
    int n_particles = 100;
    std::optional<double> truncation_r;

    void validate() const {
        if (!(lambda > 0.0)) throw UsageError("CboParams: lambda must be positive");
        if (!(sigma >= 0.0)) throw UsageError("CboParams: sigma must be nonnegative");
        if (!(alpha >= 0.0) || !(beta >= 0.0))
            throw UsageError("CboParams: alpha and beta must be nonnegative");
        if (!(dt > 0.0)) throw UsageError("CboParams: dt must be positive");
        if (!(horizon > 0.0) || dt > horizon)
            throw UsageError("CboParams: need 0 < dt <= horizon");
        if (n_particles < 1) throw UsageError("CboParams: need at least one particle");
        if (truncation_r && !(*truncation_r > 0.0))
            throw UsageError("CboParams: truncation radius must be positive");
    }

    // Positivity of the decay-rate exponent 2*lambda - sigma^2.
    bool decay_rate_positive() const { return 2.0 * lambda - sigma * sigma > 0.0; }
    double decay_rate() const { return 0.5 * (2.0 * lambda - sigma * sigma); }
    int n_steps() const { return static_cast<int>(std::ceil(horizon / dt - 1e-12)); }
};

struct Ensemble {
    Points xs;
    Points ys;
    double t = 0.0;
};

// D(v) applied to an increment: componentwise for the anisotropic map
// diag(v), |v| * xi for the isotropic one.
inline void diffusion_apply(DiffusionMode mode, std::span<const double> v,
                            std::span<const double> xi, std::span<double> out) {
    if (v.size() != xi.size() || out.size() != v.size())
        throw UsageError("diffusion_apply: dimension mismatch");
    if (mode == DiffusionMode::Anisotropic) {
        for (std::size_t k = 0; k < v.size(); ++k) out[k] = v[k] * xi[k];
    } else {
        const double n = norm2(v);
        for (std::size_t k = 0; k < v.size(); ++k) out[k] = n * xi[k];
    }
}

inline Vec diffusion_apply(DiffusionMode mode, std::span<const double> v,
                           std::span<const double> xi) {
    Vec out(v.size());
    diffusion_apply(mode, v, xi, out);
    return out;
}

// Radial projection onto the closed ball of radius R.
inline Vec project_ball(std::span<const double> x, double radius) {
    if (!(radius > 0.0)) throw UsageError("project_ball: radius must be positive");
    Vec out(x.begin(), x.end());
    const double n = norm2(x);
    if (n > radius) {
        const double scale = radius / n;
        for (double& c : out) c *= scale;
    }
    return out;
}

// Pre-step consensus of the stepped system, exposed so couplers can reuse it.
struct StepInfo {
    Vec xhat;
};

namespace detail {

inline void check_ensemble(const Ensemble& ens, const Objective& obj, const char* who) {
    if (ens.xs.count() != ens.ys.count())
        throw UsageError(std::string(who) + ": agents must have equal particle counts");
    if (ens.xs.count() == 0) throw UsageError(std::string(who) + ": empty ensemble");
    if (ens.xs.dim() != obj.d1() || ens.ys.dim() != obj.d2())
        throw UsageError(std::string(who) + ": ensemble/objective dimension mismatch");
}

// One Euler-Maruyama update for a single agent's block of particles.
inline void agent_update(const Points& state, const Points& targets, const CboParams& p,
                         const NoiseChannel& noise, int step_index, NoiseTag tag,
                         Points& out) {
    const int n = state.count();
    const int d = state.dim();
    const double sqrt_dt = std::sqrt(p.dt);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
        const auto s = state.row(static_cast<int>(i));
        const auto tgt = targets.row(targets.count() == 1 ? 0 : static_cast<int>(i));
        auto o = out.row(static_cast<int>(i));
        double drift_norm = 0.0;
        if (p.diffusion == DiffusionMode::Isotropic) {
            for (int k = 0; k < d; ++k) {
                const double v = s[k] - tgt[k];
                drift_norm += v * v;
            }
            drift_norm = std::sqrt(drift_norm);
        }
        for (int k = 0; k < d; ++k) {
            const double v = s[k] - tgt[k];
            const double xi =
                sqrt_dt * noise.normal(static_cast<std::uint32_t>(i), step_index, tag,
                                       static_cast<std::uint32_t>(k));
            const double dw = p.diffusion == DiffusionMode::Anisotropic ? v * xi : drift_norm * xi;
            o[k] = s[k] - p.lambda * v * p.dt + p.sigma * dw;
        }
    });
}

inline void check_step_finite(const Ensemble& ens, int step_index) {
    if (!ens.xs.finite() || !ens.ys.finite())
        throw IntegrationError("integration failure at step " + std::to_string(step_index) +
                               ": non-finite state (dt may be too large for these parameters)");
}

}  // namespace detail

// One step of the self-interacting particle system. Consensus points are
// computed from the pre-step state; yhats are shared between the Y-drift and
// the X-consensus weights.
inline Ensemble step_cbo(const Ensemble& ens, const CboParams& params, const Objective& obj,
                         const NoiseChannel& noise, int step_index, StepInfo* info = nullptr,
                         ConsensusScratch* scratch = nullptr) {
    detail::check_ensemble(ens, obj, "step_cbo");
    const Points yhats = consensus_y_batch(ens.ys, ens.xs, params.beta, obj, scratch);
    const Vec xhat = consensus_x_with_yhats(ens.xs, yhats, params.alpha, obj);
    if (info) info->xhat = xhat;

    Ensemble next;
    next.xs = Points(ens.xs.count(), ens.xs.dim());
    next.ys = Points(ens.ys.count(), ens.ys.dim());
    Points xhat_pt(1, ens.xs.dim());
    xhat_pt.set_row(0, xhat);
    detail::agent_update(ens.xs, xhat_pt, params, noise, step_index, NoiseTag::AgentX, next.xs);
    detail::agent_update(ens.ys, yhats, params, noise, step_index, NoiseTag::AgentY, next.ys);
    next.t = ens.t + params.dt;
    detail::check_step_finite(next, step_index);
    return next;
}

// One step of the mean-field proxy: copies do not interact, the law is
// approximated by the reference measures. cached_ref_xhat, when given, must
// equal consensus_x(ref_x, ref_y) for the same parameters.
inline Ensemble step_mf_proxy(const Ensemble& copies, const EmpiricalMeasure& ref_x,
                              const EmpiricalMeasure& ref_y, const CboParams& params,
                              const Objective& obj, const NoiseChannel& noise, int step_index,
                              const Vec* cached_ref_xhat = nullptr,
                              ConsensusScratch* scratch = nullptr) {
    detail::check_ensemble(copies, obj, "step_mf_proxy");
    const Vec xhat = cached_ref_xhat
                         ? *cached_ref_xhat
                         : consensus_x(ref_x, ref_y, {params.alpha, params.beta}, obj, scratch);
    const Points yhats = consensus_y_batch(ref_y, copies.xs, params.beta, obj, scratch);

    Ensemble next;
    next.xs = Points(copies.xs.count(), copies.xs.dim());
    next.ys = Points(copies.ys.count(), copies.ys.dim());
    Points xhat_pt(1, copies.xs.dim());
    xhat_pt.set_row(0, xhat);
    detail::agent_update(copies.xs, xhat_pt, params, noise, step_index, NoiseTag::AgentX, next.xs);
    detail::agent_update(copies.ys, yhats, params, noise, step_index, NoiseTag::AgentY, next.ys);
    next.t = copies.t + params.dt;
    detail::check_step_finite(next, step_index);
    return next;
}

// Truncated variant: the x-argument of the Y-consensus is projected onto the
// ball of radius truncation_r before evaluation.
inline Ensemble step_truncated(const Ensemble& copies, const EmpiricalMeasure& ref_x,
                               const EmpiricalMeasure& ref_y, const CboParams& params,
                               const Objective& obj, const NoiseChannel& noise, int step_index,
                               const Vec* cached_ref_xhat = nullptr,
                               ConsensusScratch* scratch = nullptr) {
    if (!params.truncation_r) throw UsageError("step_truncated: truncation_r not set");
    detail::check_ensemble(copies, obj, "step_truncated");
    const double radius = *params.truncation_r;
    const Vec xhat = cached_ref_xhat
                         ? *cached_ref_xhat
                         : consensus_x(ref_x, ref_y, {params.alpha, params.beta}, obj, scratch);

    Points projected(copies.xs.count(), copies.xs.dim());
    for (int i = 0; i < copies.xs.count(); ++i)
        projected.set_row(i, project_ball(copies.xs.row(i), radius));
    const Points yhats = consensus_y_batch(ref_y, projected, params.beta, obj, scratch);

    Ensemble next;
    next.xs = Points(copies.xs.count(), copies.xs.dim());
    next.ys = Points(copies.ys.count(), copies.ys.dim());
    Points xhat_pt(1, copies.xs.dim());
    xhat_pt.set_row(0, xhat);
    detail::agent_update(copies.xs, xhat_pt, params, noise, step_index, NoiseTag::AgentX, next.xs);
    detail::agent_update(copies.ys, yhats, params, noise, step_index, NoiseTag::AgentY, next.ys);
    next.t = copies.t + params.dt;
    detail::check_step_finite(next, step_index);
    return next;
}

// ---------------------------------------------------------------------------
// Initial sampling and the simulation driver

struct InitSampler {
    enum class Kind { UniformBox, Gaussian };
    Kind kind = Kind::UniformBox;
    double center = 0.0;
    double scale = 1.0;

    double draw(const NoiseChannel& noise, std::uint32_t particle, NoiseTag tag,
                std::uint32_t component) const {
        if (kind == Kind::Gaussian)
            return center + scale * noise.normal(particle, kInitStep, tag, component);
        const double u = noise.uniform01(particle, kInitStep, tag, component);
        return center + scale * (2.0 * u - 1.0);
    }
};

inline Ensemble sample_ensemble(int n, const Objective& obj, const InitSampler& init_x,
                                const InitSampler& init_y, const NoiseChannel& noise) {
    Ensemble ens;
    ens.xs = Points(n, obj.d1());
    ens.ys = Points(n, obj.d2());
    for (int i = 0; i < n; ++i) {
        auto rx = ens.xs.row(i);
        for (int k = 0; k < obj.d1(); ++k)
            rx[k] = init_x.draw(noise, static_cast<std::uint32_t>(i), NoiseTag::AgentX,
                                static_cast<std::uint32_t>(k));
        auto ry = ens.ys.row(i);
        for (int k = 0; k < obj.d2(); ++k)
            ry[k] = init_y.draw(noise, static_cast<std::uint32_t>(i), NoiseTag::AgentY,
                                static_cast<std::uint32_t>(k));
    }
    return ens;
}

inline ErrorTriple error_v(const Ensemble& ens, const Saddle& saddle) {
    return error_v(ens.xs, ens.ys, saddle);
}

struct RecordPolicy {
    int stride = 1;
};

struct RecordedStep {
    int step = 0;          // 0 is the initial state
    double t = 0.0;
    double vx = 0.0, vy = 0.0, v = 0.0;  // zero when no saddle is known
    double xhat_norm = 0.0;              // consensus that produced this state; 0 on row 0
    double max_abs_x = 0.0, max_abs_y = 0.0;
    double m2x = 0.0, m2y = 0.0, m4x = 0.0, m4y = 0.0;
};

struct Trajectory {
    std::vector<RecordedStep> rows;
    Ensemble final_state;
};

// Records state snapshots every `stride` steps (always including the initial
// and final states). The observer, when set, sees every step.
inline Trajectory simulate(
    const InitSampler& init_x, const InitSampler& init_y, const CboParams& params,
    const Objective& obj, const NoiseChannel& noise, RecordPolicy record = {},
    const std::function<void(int, const Ensemble&)>& observer = {}) {
    params.validate();
    if (record.stride < 1) throw UsageError("simulate: stride must be >= 1");

    Ensemble ens = sample_ensemble(params.n_particles, obj, init_x, init_y, noise);
    if (!ens.xs.finite() || !ens.ys.finite())
        throw IntegrationError("simulate: non-finite initial state");

    const int n_steps = params.n_steps();
    Trajectory traj;
    traj.rows.reserve(static_cast<std::size_t>(n_steps / record.stride) + 2);

    const auto snapshot = [&](int step, const Ensemble& e, const Vec* xhat) {
        RecordedStep row;
        row.step = step;
        row.t = e.t;
        if (obj.known_saddle()) {
            const ErrorTriple err = error_v(e, *obj.known_saddle());
            row.vx = err.vx;
            row.vy = err.vy;
            row.v = err.v;
        }
        if (xhat) row.xhat_norm = norm2(*xhat);
        for (int i = 0; i < e.xs.count(); ++i) {
            row.max_abs_x = std::max(row.max_abs_x, norm2(e.xs.row(i)));
            row.max_abs_y = std::max(row.max_abs_y, norm2(e.ys.row(i)));
        }
        row.m2x = p_moment(e.xs, 2.0);
        row.m2y = p_moment(e.ys, 2.0);
        row.m4x = p_moment(e.xs, 4.0);
        row.m4y = p_moment(e.ys, 4.0);
        traj.rows.push_back(row);
    };

    if (observer) observer(0, ens);
    snapshot(0, ens, nullptr);

    ConsensusScratch scratch;
    StepInfo info;
    for (int k = 0; k < n_steps; ++k) {
        double pre_max_x = 0.0;
        for (int i = 0; i < ens.xs.count(); ++i)
            pre_max_x = std::max(pre_max_x, norm2(ens.xs.row(i)));
        ens = step_cbo(ens, params, obj, noise, k, &info, &scratch);
        // Consensus never leaves the atom hull of the pre-step state.
        if (norm2(info.xhat) > pre_max_x * (1.0 + 1e-12))
            throw InternalError("simulate: consensus escaped the particle hull");
        if (observer) observer(k + 1, ens);
        if ((k + 1) % record.stride == 0 || k + 1 == n_steps)
            snapshot(k + 1, ens, &info.xhat);
    }
    traj.final_state = std::move(ens);
    return traj;
}

}  // namespace mmcbo

#endif  // MINMAXCBO_DYNAMICS_HPP
