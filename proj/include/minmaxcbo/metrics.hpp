// Error functionals, moments, exact Wasserstein-p distances between
// equal-size uniform empirical measures (1D sorting and an O(N^3) assignment
// solver as independent routes), the propagation-of-chaos exponent, the
// log-log rate fit, and the consensus stability probes.

#ifndef MINMAXCBO_METRICS_HPP
#define MINMAXCBO_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "minmaxcbo/common.hpp"
#include "minmaxcbo/consensus.hpp"
#include "minmaxcbo/noise.hpp"
#include "minmaxcbo/objective.hpp"

namespace mmcbo {

struct ErrorTriple {
    double vx = 0.0;
    double vy = 0.0;
    double v = 0.0;
};

// Mean squared distance of each agent's particles to the known saddle.
inline ErrorTriple error_v(const Points& xs, const Points& ys, const Saddle& saddle) {
    ErrorTriple e;
    const int n = xs.count();
    for (int i = 0; i < n; ++i) {
        const double dx = dist2(xs.row(i), saddle.x);
        const double dy = dist2(ys.row(i), saddle.y);
        e.vx += dx * dx;
        e.vy += dy * dy;
    }
    e.vx /= static_cast<double>(n);
    e.vy /= static_cast<double>(n);
    e.v = e.vx + e.vy;
    return e;
}

inline double p_moment(const EmpiricalMeasure& mu, double p) {
    if (!(p >= 1.0)) throw UsageError("p_moment: p must be >= 1");
    double s = 0.0;
    for (int j = 0; j < mu.count(); ++j) s += std::pow(norm2(mu.row(j)), p);
    return s / static_cast<double>(mu.count());
}

// ---------------------------------------------------------------------------
// Exact assignment (Hungarian with potentials, O(n^3)); cost is row-major.

namespace detail {

inline double assignment_min_cost(const std::vector<double>& cost, int n) {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> match(n + 1, 0);  // match[col] = row (1-based)
    std::vector<int> way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        match[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = match[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur =
                    cost[static_cast<std::size_t>(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const int j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    double total = 0.0;
    for (int j = 1; j <= n; ++j)
        total += cost[static_cast<std::size_t>(match[j] - 1) * n + (j - 1)];
    return total;
}

}  // namespace detail

// Assignment route: valid in any dimension.
inline double wasserstein_assignment(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                     double p) {
    if (mu.count() != nu.count())
        throw UsageError("wasserstein_p: measures must have equal atom counts");
    if (mu.dim() != nu.dim())
        throw UsageError("wasserstein_p: measures must share one dimension");
    if (!(p >= 1.0)) throw UsageError("wasserstein_p: p must be >= 1");
    const int n = mu.count();
    std::vector<double> cost(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            cost[static_cast<std::size_t>(i) * n + j] = std::pow(dist2(mu.row(i), nu.row(j)), p);
    const double total = detail::assignment_min_cost(cost, n);
    return std::pow(total / static_cast<double>(n), 1.0 / p);
}

// Sorting route: optimal in one dimension for convex costs.
inline double wasserstein_sorted_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                    double p) {
    if (mu.count() != nu.count())
        throw UsageError("wasserstein_p: measures must have equal atom counts");
    if (mu.dim() != 1 || nu.dim() != 1)
        throw UsageError("wasserstein_sorted_1d: one-dimensional atoms required");
    if (!(p >= 1.0)) throw UsageError("wasserstein_p: p must be >= 1");
    std::vector<double> a(mu.data(), mu.data() + mu.count());
    std::vector<double> b(nu.data(), nu.data() + nu.count());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double total = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) total += std::pow(std::abs(a[i] - b[i]), p);
    return std::pow(total / static_cast<double>(a.size()), 1.0 / p);
}

inline double wasserstein_p(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p) {
    if (mu.dim() == 1 && nu.dim() == 1) return wasserstein_sorted_1d(mu, nu, p);
    return wasserstein_assignment(mu, nu, p);
}

// ---------------------------------------------------------------------------
// Rate machinery

// min{1/2, (q-p)/(2p^2), (q-(2+s))/(2(2+s)^2)}
inline double gamma_exponent(double q, double p, double s) {
    if (!(s >= 0.0)) throw UsageError("gamma_exponent: s must be >= 0");
    if (!(q >= 2.0 * (2.0 + s))) throw UsageError("gamma_exponent: need q >= 2(2+s)");
    if (!(p > 0.0 && p <= q / 2.0)) throw UsageError("gamma_exponent: need 0 < p <= q/2");
    const double a = (q - p) / (2.0 * p * p);
    const double b = (q - (2.0 + s)) / (2.0 * (2.0 + s) * (2.0 + s));
    return std::min({0.5, a, b});
}

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

inline RateFit fit_rate(std::span<const double> log_n, std::span<const double> log_err) {
    const std::size_t n = log_n.size();
    if (n < 2 || log_err.size() != n) throw UsageError("fit_rate: need >= 2 matching points");
    for (std::size_t i = 1; i < n; ++i)
        if (!(log_n[i] > log_n[i - 1]))
            throw UsageError("fit_rate: abscissae must be strictly increasing");
    const double mx = std::accumulate(log_n.begin(), log_n.end(), 0.0) / n;
    const double my = std::accumulate(log_err.begin(), log_err.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (log_n[i] - mx) * (log_n[i] - mx);
        sxy += (log_n[i] - mx) * (log_err[i] - my);
        syy += (log_err[i] - my) * (log_err[i] - my);
    }
    RateFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = log_err[i] - (fit.intercept + fit.slope * log_n[i]);
        ss_res += r * r;
    }
    fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    return fit;
}

// ---------------------------------------------------------------------------
// Stability probes: empirical versions of the consensus stability ratios.

enum class ProbeKind { YVar, YMeasure, XPair };

struct ProbeConfig {
    int n_atoms = 16;    // atoms per random measure
    double box = 2.0;    // atoms and probe points uniform in [-box, box]^d
    double alpha = 1.0;  // tilt exponents used by the probed consensus points
    double beta = 1.0;
};

struct ProbeReport {
    double max_ratio = 0.0;
    double q50 = 0.0;
    double q90 = 0.0;
    double q99 = 0.0;
    int counted = 0;
    int skipped = 0;               // zero-denominator trials
    std::vector<double> ratios;    // one entry per counted trial
};

namespace detail {

inline Points probe_measure(const NoiseStream& stream, std::uint32_t run, std::uint32_t block,
                            int n_atoms, int dim, double box) {
    Points pts(n_atoms, dim);
    for (int j = 0; j < n_atoms; ++j) {
        auto r = pts.row(j);
        for (int k = 0; k < dim; ++k) {
            const double u = stream.uniform01(run, block * 4096u + static_cast<std::uint32_t>(j),
                                              0, NoiseTag::Aux, static_cast<std::uint32_t>(k));
            r[k] = box * (2.0 * u - 1.0);
        }
    }
    return pts;
}

}  // namespace detail

inline ProbeReport stability_probe(ProbeKind kind, const Objective& obj,
                                   const ProbeConfig& cfg, int n_trials, std::uint64_t seed) {
    if (n_trials < 1) throw UsageError("stability_probe: need n_trials >= 1");
    const NoiseStream stream(seed);
    const double s = obj.growth_s();
    const double wp = std::max(2.0, s + 2.0);

    ProbeReport rep;
    rep.ratios.reserve(static_cast<std::size_t>(n_trials));
    std::vector<double> uv(static_cast<std::size_t>(obj.d1()));
    std::vector<double> vv(static_cast<std::size_t>(obj.d1()));

    for (int t = 0; t < n_trials; ++t) {
        const std::uint32_t run = static_cast<std::uint32_t>(t);
        double num = 0.0, den = 0.0;
        switch (kind) {
            case ProbeKind::YVar: {
                const Points mu = detail::probe_measure(stream, run, 0, cfg.n_atoms, obj.d2(), cfg.box);
                for (int k = 0; k < obj.d1(); ++k) {
                    uv[k] = cfg.box * (2.0 * stream.uniform01(run, 1, 1, NoiseTag::Aux,
                                                              static_cast<std::uint32_t>(k)) - 1.0);
                    vv[k] = cfg.box * (2.0 * stream.uniform01(run, 2, 1, NoiseTag::Aux,
                                                              static_cast<std::uint32_t>(k)) - 1.0);
                }
                const Vec yu = consensus_y(mu, uv, cfg.beta, obj);
                const Vec yv = consensus_y(mu, vv, cfg.beta, obj);
                num = dist2(yu, yv);
                den = std::pow(1.0 + norm2(uv) + norm2(vv), s) * dist2(uv, vv);
                break;
            }
            case ProbeKind::YMeasure: {
                const Points mu = detail::probe_measure(stream, run, 0, cfg.n_atoms, obj.d2(), cfg.box);
                const Points nu = detail::probe_measure(stream, run, 1, cfg.n_atoms, obj.d2(), cfg.box);
                for (int k = 0; k < obj.d1(); ++k)
                    uv[k] = cfg.box * (2.0 * stream.uniform01(run, 1, 1, NoiseTag::Aux,
                                                              static_cast<std::uint32_t>(k)) - 1.0);
                const Vec ymu = consensus_y(mu, uv, cfg.beta, obj);
                const Vec ynu = consensus_y(nu, uv, cfg.beta, obj);
                num = dist2(ymu, ynu);
                den = std::pow(1.0 + norm2(uv), s) * wasserstein_p(mu, nu, wp);
                break;
            }
            case ProbeKind::XPair: {
                const Points mux = detail::probe_measure(stream, run, 0, cfg.n_atoms, obj.d1(), cfg.box);
                const Points nux = detail::probe_measure(stream, run, 1, cfg.n_atoms, obj.d1(), cfg.box);
                const Points muy = detail::probe_measure(stream, run, 2, cfg.n_atoms, obj.d2(), cfg.box);
                const Points nuy = detail::probe_measure(stream, run, 3, cfg.n_atoms, obj.d2(), cfg.box);
                const ConsensusParams cp{cfg.alpha, cfg.beta};
                const Vec xm = consensus_x(mux, muy, cp, obj);
                const Vec xn = consensus_x(nux, nuy, cp, obj);
                num = dist2(xm, xn);
                den = wasserstein_p(mux, nux, wp) + wasserstein_p(muy, nuy, wp);
                break;
            }
        }
        if (den == 0.0) {
            ++rep.skipped;
            continue;
        }
        rep.ratios.push_back(num / den);
    }

    rep.counted = static_cast<int>(rep.ratios.size());
    if (rep.counted > 0) {
        std::vector<double> sorted = rep.ratios;
        std::sort(sorted.begin(), sorted.end());
        const auto quant = [&](double q) {
            const std::size_t idx = static_cast<std::size_t>(q * (sorted.size() - 1));
            return sorted[idx];
        };
        rep.max_ratio = sorted.back();
        rep.q50 = quant(0.50);
        rep.q90 = quant(0.90);
        rep.q99 = quant(0.99);
    }
    return rep;
}

}  // namespace mmcbo

#endif  // MINMAXCBO_METRICS_HPP
