// Weighted consensus points: exponentially tilted means of empirical
// measures, computed in the log domain with a max shift so that arbitrarily
// large tilt exponents stay finite. Reductions always run in atom index
// order; results are anchored at the first atom so a measure of coincident
// atoms returns that atom exactly.

#ifndef MINMAXCBO_CONSENSUS_HPP
#define MINMAXCBO_CONSENSUS_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "minmaxcbo/common.hpp"
#include "minmaxcbo/objective.hpp"

namespace mmcbo {

struct ConsensusParams {
    double alpha = 0.0;
    double beta = 0.0;
};

// Reusable work buffers for the batch paths.
struct ConsensusScratch {
    std::vector<double> values;
    std::vector<double> logw;
};

namespace detail {

// out = anchored softmax mean of atoms with the given log-weights.
inline void weighted_mean(const Points& atoms, std::span<const double> logw,
                          std::span<double> out) {
    const int n = atoms.count();
    const int d = atoms.dim();
    double shift = logw[0];
    for (int j = 1; j < n; ++j) shift = std::max(shift, logw[j]);

    const auto anchor = atoms.row(0);
    double wsum = 0.0;
    for (int k = 0; k < d; ++k) out[k] = 0.0;
    for (int j = 0; j < n; ++j) {
        const double w = std::exp(logw[j] - shift);
        wsum += w;
        const auto a = atoms.row(j);
        for (int k = 0; k < d; ++k) out[k] += w * (a[k] - anchor[k]);
    }
    if (!(wsum > 0.0) || !std::isfinite(wsum))
        throw InternalError("consensus: degenerate weight sum (non-finite objective values?)");
    for (int k = 0; k < d; ++k) out[k] = anchor[k] + out[k] / wsum;
    if (!all_finite(out)) throw InternalError("consensus: non-finite consensus point");
}

inline void check_measure(const EmpiricalMeasure& mu, int expected_dim, const char* who) {
    if (mu.empty()) throw UsageError(std::string(who) + ": empty measure");
    if (mu.dim() != expected_dim) throw UsageError(std::string(who) + ": atom dimension mismatch");
}

}  // namespace detail

// Y-consensus for every x in xs at once: one objective grid, then one
// softmax-mean per row. O(|xs| * |mu_y|) objective evaluations.
inline Points consensus_y_batch(const EmpiricalMeasure& mu_y, const Points& xs, double beta,
                                const Objective& obj, ConsensusScratch* scratch = nullptr) {
    if (xs.count() == 0) return Points(0, obj.d2());
    detail::check_measure(mu_y, obj.d2(), "consensus_y");
    if (xs.dim() != obj.d1()) throw UsageError("consensus_y: x dimension mismatch");

    const int nx = xs.count();
    const int ny = mu_y.count();
    ConsensusScratch local;
    ConsensusScratch& ws = scratch ? *scratch : local;
    ws.values.resize(static_cast<std::size_t>(nx) * ny);
    obj.eval_grid(xs, mu_y, ws.values.data());

    Points result(nx, obj.d2());
    parallel_for(static_cast<std::size_t>(nx), [&](std::size_t i) {
        double* vals = ws.values.data() + i * static_cast<std::size_t>(ny);
        for (int j = 0; j < ny; ++j) vals[j] = beta * vals[j];
        detail::weighted_mean(mu_y, {vals, static_cast<std::size_t>(ny)},
                              result.row(static_cast<int>(i)));
    });
    return result;
}

inline Vec consensus_y(const EmpiricalMeasure& mu_y, std::span<const double> x, double beta,
                       const Objective& obj) {
    Points xs(1, obj.d1());
    if (static_cast<int>(x.size()) != obj.d1())
        throw UsageError("consensus_y: x dimension mismatch");
    xs.set_row(0, x);
    const Points r = consensus_y_batch(mu_y, xs, beta, obj);
    const auto row = r.row(0);
    return Vec(row.begin(), row.end());
}

// X-consensus given precomputed inner Y-consensus points (one per x-atom).
inline Vec consensus_x_with_yhats(const EmpiricalMeasure& mu_x, const Points& yhats,
                                  double alpha, const Objective& obj) {
    detail::check_measure(mu_x, obj.d1(), "consensus_x");
    if (yhats.count() != mu_x.count())
        throw UsageError("consensus_x: one inner consensus point per atom required");
    const int n = mu_x.count();
    std::vector<double> logw(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        logw[i] = -alpha * obj.eval_unchecked(mu_x.row(i), yhats.row(i));
    Vec out(static_cast<std::size_t>(obj.d1()));
    detail::weighted_mean(mu_x, logw, out);
    return out;
}

inline Vec consensus_x(const EmpiricalMeasure& mu_x, const EmpiricalMeasure& mu_y,
                       ConsensusParams params, const Objective& obj,
                       ConsensusScratch* scratch = nullptr) {
    detail::check_measure(mu_x, obj.d1(), "consensus_x");
    detail::check_measure(mu_y, obj.d2(), "consensus_x");
    const Points yhats = consensus_y_batch(mu_y, mu_x, params.beta, obj, scratch);
    return consensus_x_with_yhats(mu_x, yhats, params.alpha, obj);
}

}  // namespace mmcbo

#endif  // MINMAXCBO_CONSENSUS_HPP
