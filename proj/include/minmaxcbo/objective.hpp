// Cost functions E(x, y) for the two-agent min-max dynamics: the evaluation
// interface, bounded benchmark problems with analytically known saddle
// points, the upper-envelope probe, and sampling-based assumption checks
// (boundedness and polynomial-growth Lipschitz continuity).

#ifndef MINMAXCBO_OBJECTIVE_HPP
#define MINMAXCBO_OBJECTIVE_HPP

#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "minmaxcbo/common.hpp"
#include "minmaxcbo/noise.hpp"

namespace mmcbo {

struct Saddle {
    Vec x;
    Vec y;
};

class Objective {
public:
    struct Impl {
        virtual ~Impl() = default;
        virtual double eval(std::span<const double> x, std::span<const double> y) const = 0;

        // values[i * ys.count() + j] = eval(xs.row(i), ys.row(j)).
        // Overrides must stay bitwise identical to eval().
        virtual void eval_grid(const Points& xs, const Points& ys, double* values) const {
            const int ny = ys.count();
            parallel_for(static_cast<std::size_t>(xs.count()), [&](std::size_t i) {
                double* out = values + i * static_cast<std::size_t>(ny);
                const auto xi = xs.row(static_cast<int>(i));
                for (int j = 0; j < ny; ++j) out[j] = eval(xi, ys.row(j));
            });
        }
    };

    Objective(int d1, int d2, double bound_c, double growth_s,
              std::shared_ptr<const Impl> impl, std::optional<Saddle> saddle = {})
        : d1_(d1), d2_(d2), bound_c_(bound_c), growth_s_(growth_s),
          impl_(std::move(impl)), saddle_(std::move(saddle)) {
        if (d1_ <= 0 || d2_ <= 0) throw UsageError("Objective: dimensions must be positive");
        if (!(bound_c_ > 0.0)) throw UsageError("Objective: bound_c must be positive");
        if (!(growth_s_ >= 0.0)) throw UsageError("Objective: growth_s must be nonnegative");
    }

    int d1() const { return d1_; }
    int d2() const { return d2_; }
    double bound_c() const { return bound_c_; }
    double growth_s() const { return growth_s_; }
    const std::optional<Saddle>& known_saddle() const { return saddle_; }

    double evaluate(std::span<const double> x, std::span<const double> y) const {
        if (static_cast<int>(x.size()) != d1_ || static_cast<int>(y.size()) != d2_)
            throw UsageError("Objective::evaluate: dimension mismatch");
        if (!all_finite(x) || !all_finite(y))
            throw UsageError("Objective::evaluate: non-finite input");
        return impl_->eval(x, y);
    }

    // Hot path; callers have validated dimensions.
    double eval_unchecked(std::span<const double> x, std::span<const double> y) const {
        return impl_->eval(x, y);
    }

    void eval_grid(const Points& xs, const Points& ys, double* values) const {
        if (xs.dim() != d1_ || ys.dim() != d2_)
            throw UsageError("Objective::eval_grid: dimension mismatch");
        impl_->eval_grid(xs, ys, values);
    }

private:
    int d1_, d2_;
    double bound_c_, growth_s_;
    std::shared_ptr<const Impl> impl_;
    std::optional<Saddle> saddle_;
};

// Ad-hoc objective from a callable; used by tests and custom setups.
inline Objective make_objective(int d1, int d2, double bound_c, double growth_s,
                                std::function<double(std::span<const double>, std::span<const double>)> fn,
                                std::optional<Saddle> saddle = {}) {
    struct FnImpl final : Objective::Impl {
        std::function<double(std::span<const double>, std::span<const double>)> fn;
        double eval(std::span<const double> x, std::span<const double> y) const override {
            return fn(x, y);
        }
    };
    auto impl = std::make_shared<FnImpl>();
    impl->fn = std::move(fn);
    return Objective(d1, d2, bound_c, growth_s, std::move(impl), std::move(saddle));
}

// ---------------------------------------------------------------------------
// Benchmarks

namespace bench {

// Ackley, arranged so that A(0) == 0 exactly and 0 <= A < 20 + e - 1/e.
inline double ackley(std::span<const double> v, std::span<const double> shift) {
    const double inv_d = 1.0 / static_cast<double>(v.size());
    double sq = 0.0, cs = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
        const double u = v[k] - shift[k];
        sq += u * u;
        cs += std::cos(2.0 * std::numbers::pi * u);
    }
    const double e1 = std::exp(1.0);
    return 20.0 * (1.0 - std::exp(-0.2 * std::sqrt(sq * inv_d))) + (e1 - std::exp(cs * inv_d));
}

inline double ackley_sup() { return 20.0 + std::exp(1.0) - std::exp(-1.0); }

// Per-coordinate saddle term on tanh-transformed inputs.
inline double tanh_term(double tx, double ty) {
    return tx * ty + 0.1 * (tx * tx - ty * ty);
}

struct SeparableAckley final : Objective::Impl {
    Vec shift_x, shift_y;

    double eval(std::span<const double> x, std::span<const double> y) const override {
        return ackley(x, shift_x) - ackley(y, shift_y);
    }

    void eval_grid(const Points& xs, const Points& ys, double* values) const override {
        std::vector<double> ax(xs.count()), ay(ys.count());
        for (int i = 0; i < xs.count(); ++i) ax[i] = ackley(xs.row(i), shift_x);
        for (int j = 0; j < ys.count(); ++j) ay[j] = ackley(ys.row(j), shift_y);
        const int ny = ys.count();
        parallel_for(static_cast<std::size_t>(xs.count()), [&](std::size_t i) {
            double* out = values + i * static_cast<std::size_t>(ny);
            for (int j = 0; j < ny; ++j) out[j] = ax[i] - ay[j];
        });
    }
};

struct BilinearTanh final : Objective::Impl {
    Vec shift_x, shift_y;

    double eval(std::span<const double> x, std::span<const double> y) const override {
        double s = 0.0;
        for (std::size_t k = 0; k < x.size(); ++k) {
            const double tx = std::tanh(x[k] - shift_x[k]);
            const double ty = std::tanh(y[k] - shift_y[k]);
            s += tanh_term(tx, ty);
        }
        return s;
    }

    void eval_grid(const Points& xs, const Points& ys, double* values) const override {
        const int d = static_cast<int>(shift_x.size());
        const int nx = xs.count(), ny = ys.count();
        std::vector<double> tx(static_cast<std::size_t>(nx) * d), ty(static_cast<std::size_t>(ny) * d);
        for (int i = 0; i < nx; ++i) {
            const auto r = xs.row(i);
            for (int k = 0; k < d; ++k) tx[static_cast<std::size_t>(i) * d + k] = std::tanh(r[k] - shift_x[k]);
        }
        for (int j = 0; j < ny; ++j) {
            const auto r = ys.row(j);
            for (int k = 0; k < d; ++k) ty[static_cast<std::size_t>(j) * d + k] = std::tanh(r[k] - shift_y[k]);
        }
        parallel_for(static_cast<std::size_t>(nx), [&](std::size_t i) {
            double* out = values + i * static_cast<std::size_t>(ny);
            const double* txi = tx.data() + i * static_cast<std::size_t>(d);
            for (int j = 0; j < ny; ++j) {
                const double* tyj = ty.data() + static_cast<std::size_t>(j) * d;
                double s = 0.0;
                for (int k = 0; k < d; ++k) s += tanh_term(txi[k], tyj[k]);
                out[j] = s;
            }
        });
    }
};

}  // namespace bench

inline Objective make_benchmark(std::string_view name, int d1, int d2,
                                std::optional<Saddle> shift = {}) {
    if (d1 <= 0 || d2 <= 0) throw UsageError("make_benchmark: dimensions must be positive");
    Vec sx(static_cast<std::size_t>(d1), 0.0), sy(static_cast<std::size_t>(d2), 0.0);
    if (shift) {
        if (static_cast<int>(shift->x.size()) != d1 || static_cast<int>(shift->y.size()) != d2)
            throw UsageError("make_benchmark: shift dimensions do not match (d1, d2)");
        sx = shift->x;
        sy = shift->y;
    }
    Saddle saddle{sx, sy};
    if (name == "separable-ackley") {
        auto impl = std::make_shared<bench::SeparableAckley>();
        impl->shift_x = std::move(sx);
        impl->shift_y = std::move(sy);
        return Objective(d1, d2, bench::ackley_sup(), 0.0, std::move(impl), std::move(saddle));
    }
    if (name == "bilinear-tanh") {
        if (d1 != d2) throw UsageError("make_benchmark: bilinear-tanh requires d1 == d2");
        auto impl = std::make_shared<bench::BilinearTanh>();
        impl->shift_x = std::move(sx);
        impl->shift_y = std::move(sy);
        return Objective(d1, d2, 1.1 * static_cast<double>(d1), 0.0, std::move(impl), std::move(saddle));
    }
    throw UsageError("make_benchmark: unknown benchmark '" + std::string(name) + "'");
}

inline const char* const kBenchmarkNames[] = {"separable-ackley", "bilinear-tanh"};

// Lower approximation of the upper envelope sup_y E(x, y) over a finite grid.
inline double envelope_estimate(const Objective& obj, std::span<const double> x,
                                const Points& y_grid) {
    if (y_grid.empty()) throw UsageError("envelope_estimate: empty grid");
    double best = obj.evaluate(x, y_grid.row(0));
    for (int j = 1; j < y_grid.count(); ++j)
        best = std::max(best, obj.evaluate(x, y_grid.row(j)));
    return best;
}

// ---------------------------------------------------------------------------
// Randomized falsification of the boundedness and Lipschitz-growth
// assumptions on a ball.

struct AssumptionReport {
    int n_samples = 0;
    double max_abs_value = 0.0;       // max |E| over samples; must be <= bound_c
    double max_lipschitz_ratio = 0.0; // max |E(z0)-E(z1)| / ((1+|z0|+|z1|)^s |z0-z1|)
    int skipped_pairs = 0;            // coincident sample pairs (zero denominator)
    bool bound_ok = false;
};

inline AssumptionReport verify_assumptions(const Objective& obj, int n_samples,
                                           double radius, std::uint64_t seed) {
    if (n_samples < 2) throw UsageError("verify_assumptions: need n_samples >= 2");
    if (!(radius > 0.0)) throw UsageError("verify_assumptions: radius must be positive");

    const NoiseStream stream(seed);
    const int d = obj.d1() + obj.d2();

    // Uniform in the d-ball: Gaussian direction, radius ~ r * U^(1/d).
    const auto sample = [&](int idx, Vec& z) {
        double nrm = 0.0;
        for (int k = 0; k < d; ++k) {
            z[k] = stream.normal(0, static_cast<std::uint32_t>(idx), 0, NoiseTag::Aux,
                                 static_cast<std::uint32_t>(k));
            nrm += z[k] * z[k];
        }
        nrm = std::sqrt(nrm);
        const double u = stream.uniform01(0, static_cast<std::uint32_t>(idx), 1, NoiseTag::Aux, 0);
        const double r = radius * std::pow(u, 1.0 / static_cast<double>(d));
        const double scale = nrm > 0.0 ? r / nrm : 0.0;
        for (int k = 0; k < d; ++k) z[k] *= scale;
    };

    AssumptionReport rep;
    rep.n_samples = n_samples;

    Vec z0(static_cast<std::size_t>(d)), z1(static_cast<std::size_t>(d));
    double prev_value = 0.0;
    for (int i = 0; i < n_samples; ++i) {
        sample(i, z0);
        const std::span<const double> x{z0.data(), static_cast<std::size_t>(obj.d1())};
        const std::span<const double> y{z0.data() + obj.d1(), static_cast<std::size_t>(obj.d2())};
        const double v = obj.evaluate(x, y);
        rep.max_abs_value = std::max(rep.max_abs_value, std::abs(v));
        if (i > 0) {
            // Lipschitz ratio against the previous sample.
            const double dz = dist2(z0, z1);
            if (dz == 0.0) {
                ++rep.skipped_pairs;
            } else {
                const double denom =
                    std::pow(1.0 + norm2(z1) + norm2(z0), obj.growth_s()) * dz;
                rep.max_lipschitz_ratio =
                    std::max(rep.max_lipschitz_ratio, std::abs(v - prev_value) / denom);
            }
        }
        z1 = z0;
        prev_value = v;
    }
    rep.bound_ok = rep.max_abs_value <= obj.bound_c();
    return rep;
}

}  // namespace mmcbo

#endif  // MINMAXCBO_OBJECTIVE_HPP
