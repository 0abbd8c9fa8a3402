#include <doctest.h>

#include <cmath>
#include <vector>

#include "minmaxcbo/consensus.hpp"
#include "minmaxcbo/noise.hpp"

using namespace mmcbo;

namespace {

// E(x, y) = y on the sampled domain (bounded far away to honor (A1)).
Objective y_identity_objective() {
    return make_objective(1, 1, 100.0, 0.0,
                          [](std::span<const double>, std::span<const double> y) { return y[0]; });
}

// E(x, y) = x, no y dependence.
Objective x_identity_objective() {
    return make_objective(1, 1, 100.0, 0.0,
                          [](std::span<const double> x, std::span<const double>) { return x[0]; });
}

Objective constant_objective(double c = 0.0) {
    return make_objective(1, 1, 1.0, 0.0,
                          [c](std::span<const double>, std::span<const double>) { return c; });
}

}  // namespace

TEST_CASE("single atom is its own consensus for any x and beta") {
    const auto obj = y_identity_objective();
    const Points mu = Points::from_scalars({0.37});
    for (double beta : {0.0, 1.0, 50.0}) {
        const Vec r = consensus_y(mu, Vec{2.0}, beta, obj);
        CHECK(r[0] == 0.37);  // exact, not approximate
    }
}

TEST_CASE("beta = 0 gives the arithmetic mean") {
    const auto obj = y_identity_objective();
    const Points mu = Points::from_scalars({0.0, 1.0, 5.0});
    const Vec r = consensus_y(mu, Vec{0.0}, 0.0, obj);
    CHECK(r[0] == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("hand-computed consensus_y: atoms {0,1}, E=y, beta=ln 2 -> 2/3") {
    const auto obj = y_identity_objective();
    const Points mu = Points::from_scalars({0.0, 1.0});
    const Vec r = consensus_y(mu, Vec{0.0}, std::log(2.0), obj);
    CHECK(r[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("hand-computed consensus_x: atoms {0,1}, E=x, alpha=ln 3 -> 1/4") {
    const auto obj = x_identity_objective();
    const Points mux = Points::from_scalars({0.0, 1.0});
    const Points muy = Points::from_scalars({0.0});
    const Vec r = consensus_x(mux, muy, {std::log(3.0), 1.0}, obj);
    CHECK(r[0] == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("all equal x-atoms collapse to that atom") {
    const auto obj = x_identity_objective();
    const Points mux = Points::from_scalars({0.8, 0.8, 0.8});
    const Points muy = Points::from_scalars({-1.0, 2.0});
    const Vec r = consensus_x(mux, muy, {3.0, 2.0}, obj);
    CHECK(r[0] == 0.8);  // anchored arithmetic makes this exact
}

TEST_CASE("alpha = 0 gives the x mean independent of mu_y") {
    const auto obj = x_identity_objective();
    const Points mux = Points::from_scalars({-1.0, 3.0});
    const Points muy_a = Points::from_scalars({0.0});
    const Points muy_b = Points::from_scalars({5.0, -5.0});
    const Vec ra = consensus_x(mux, muy_a, {0.0, 1.0}, obj);
    const Vec rb = consensus_x(mux, muy_b, {0.0, 1.0}, obj);
    CHECK(ra[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(ra[0] == rb[0]);
}

TEST_CASE("empty inputs are usage errors") {
    const auto obj = y_identity_objective();
    CHECK_THROWS_AS(consensus_y(Points(0, 1), Vec{0.0}, 1.0, obj), UsageError);
    CHECK_THROWS_AS(consensus_x(Points(0, 1), Points::from_scalars({1.0}), {1.0, 1.0}, obj),
                    UsageError);
}

TEST_CASE("batch equals elementwise calls bitwise") {
    const auto obj = make_benchmark("bilinear-tanh", 1, 1);
    const NoiseStream stream(21);
    Points mu(9, 1), xs(6, 1);
    for (int j = 0; j < 9; ++j) mu.row(j)[0] = stream.normal(0, j, 0, NoiseTag::Aux, 0);
    for (int i = 0; i < 6; ++i) xs.row(i)[0] = stream.normal(0, i, 1, NoiseTag::Aux, 0);

    const Points batch = consensus_y_batch(mu, xs, 3.0, obj);
    REQUIRE(batch.count() == 6);
    for (int i = 0; i < 6; ++i) {
        const Vec single = consensus_y(mu, xs.row(i), 3.0, obj);
        CHECK(batch.row(i)[0] == single[0]);
    }

    // Empty batch and singleton batch.
    CHECK(consensus_y_batch(mu, Points(0, 1), 3.0, obj).count() == 0);
    Points one(1, 1);
    one.row(0)[0] = 0.5;
    CHECK(consensus_y_batch(mu, one, 3.0, obj).row(0)[0] == consensus_y(mu, Vec{0.5}, 3.0, obj)[0]);
}

TEST_CASE("consensus stays in the convex hull (box form) and below the max norm") {
    const auto obj = make_benchmark("bilinear-tanh", 2, 2);
    const NoiseStream stream(31);
    Points mux(12, 2), muy(12, 2);
    for (int j = 0; j < 12; ++j)
        for (int k = 0; k < 2; ++k) {
            mux.row(j)[k] = 3.0 * stream.normal(0, j, 0, NoiseTag::Aux, k);
            muy.row(j)[k] = 3.0 * stream.normal(0, j, 1, NoiseTag::Aux, k);
        }
    for (double a : {0.0, 1.0, 100.0, 1e6}) {
        const Vec xh = consensus_x(mux, muy, {a, a}, obj);
        REQUIRE(all_finite(xh));
        double max_norm = 0.0;
        for (int j = 0; j < 12; ++j) max_norm = std::max(max_norm, norm2(mux.row(j)));
        CHECK(norm2(xh) <= max_norm * (1.0 + 1e-12));
        for (int k = 0; k < 2; ++k) {
            double lo = mux.row(0)[k], hi = lo;
            for (int j = 1; j < 12; ++j) {
                lo = std::min(lo, mux.row(j)[k]);
                hi = std::max(hi, mux.row(j)[k]);
            }
            CHECK(xh[k] >= lo - 1e-12);
            CHECK(xh[k] <= hi + 1e-12);
        }

        const Vec yh = consensus_y(muy, mux.row(3), a, obj);
        REQUIRE(all_finite(yh));
        double max_norm_y = 0.0;
        for (int j = 0; j < 12; ++j) max_norm_y = std::max(max_norm_y, norm2(muy.row(j)));
        CHECK(norm2(yh) <= max_norm_y * (1.0 + 1e-12));
    }
}

TEST_CASE("normalized weights respect the exp(-2 gamma c)/N floor") {
    const auto obj = make_benchmark("bilinear-tanh", 1, 1);
    const NoiseStream stream(77);
    const int n = 20;
    Points mu(n, 1);
    for (int j = 0; j < n; ++j) mu.row(j)[0] = 2.0 * stream.normal(0, j, 0, NoiseTag::Aux, 0);
    const Vec x{0.4};
    for (double beta : {0.5, 2.0, 10.0}) {
        // Recompute the normalized weights exactly as defined.
        std::vector<double> w(n);
        double m = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < n; ++j) {
            w[j] = beta * obj.evaluate(x, mu.row(j));
            m = std::max(m, w[j]);
        }
        double sum = 0.0;
        for (int j = 0; j < n; ++j) {
            w[j] = std::exp(w[j] - m);
            sum += w[j];
        }
        const double floor = std::exp(-2.0 * beta * obj.bound_c()) / n;
        for (int j = 0; j < n; ++j) CHECK(w[j] / sum >= floor * (1.0 - 1e-12));
    }
}

TEST_CASE("constant objective: consensus is the plain mean under any shift") {
    const auto obj = constant_objective(0.7);
    const Points mu = Points::from_scalars({1.0, 2.0, 6.0});
    const Vec r = consensus_y(mu, Vec{0.0}, 17.0, obj);
    CHECK(r[0] == doctest::Approx(3.0).epsilon(1e-15));
}

TEST_CASE("beta = 0 consensus commutes with affine maps of the atoms") {
    const auto obj = y_identity_objective();
    const Points mu = Points::from_scalars({-0.3, 0.9, 2.2, 4.4});
    const double a = 1.7, b = -0.9;
    Points mapped(4, 1);
    for (int j = 0; j < 4; ++j) mapped.row(j)[0] = a * mu.row(j)[0] + b;
    const double lhs = consensus_y(mapped, Vec{0.0}, 0.0, obj)[0];
    const double rhs = a * consensus_y(mu, Vec{0.0}, 0.0, obj)[0] + b;
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-13));
}

TEST_CASE("extreme exponents remain finite on benchmarks") {
    const auto obj = make_benchmark("separable-ackley", 1, 1);
    const NoiseStream stream(13);
    Points mu(50, 1);
    for (int j = 0; j < 50; ++j) mu.row(j)[0] = 4.0 * stream.normal(0, j, 0, NoiseTag::Aux, 0);
    const Vec r = consensus_y(mu, Vec{0.2}, 1e6, obj);
    REQUIRE(all_finite(r));
    double lo = mu.row(0)[0], hi = lo;
    for (int j = 1; j < 50; ++j) {
        lo = std::min(lo, mu.row(j)[0]);
        hi = std::max(hi, mu.row(j)[0]);
    }
    CHECK(r[0] >= lo - 1e-12);
    CHECK(r[0] <= hi + 1e-12);
}

TEST_CASE("non-finite objective values surface as internal errors") {
    const auto bad = make_objective(1, 1, 1.0, 0.0,
                                    [](std::span<const double>, std::span<const double>) {
                                        return std::numeric_limits<double>::quiet_NaN();
                                    });
    const Points mu = Points::from_scalars({0.0, 1.0});
    CHECK_THROWS_AS(consensus_y(mu, Vec{0.0}, 1.0, bad), InternalError);
}
