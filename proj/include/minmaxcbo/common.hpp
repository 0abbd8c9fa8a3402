// Shared basics: error categories, flat point storage, small vector helpers,
// and a deterministic parallel-for whose worker count never changes results.

#ifndef MINMAXCBO_COMMON_HPP
#define MINMAXCBO_COMMON_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace mmcbo {

using Vec = std::vector<double>;

// Caller broke a documented precondition.
struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// The integrator produced a non-finite state.
struct IntegrationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A condition that is impossible under the module contracts (e.g. weight
// overflow for a bounded cost function).
struct InternalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

inline double norm2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

inline double dist2(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        s += d * d;
    }
    return std::sqrt(s);
}

// Flat row-major storage for n points of one common dimension.
class Points {
public:
    Points() = default;
    Points(int count, int dim)
        : count_(count), dim_(dim),
          data_(static_cast<std::size_t>(count) * static_cast<std::size_t>(dim), 0.0) {}

    static Points from_rows(std::initializer_list<std::initializer_list<double>> rows) {
        Points p;
        for (const auto& r : rows) {
            if (p.count_ == 0) {
                p.dim_ = static_cast<int>(r.size());
            } else if (static_cast<int>(r.size()) != p.dim_) {
                throw UsageError("Points::from_rows: rows of unequal dimension");
            }
            p.data_.insert(p.data_.end(), r.begin(), r.end());
            ++p.count_;
        }
        return p;
    }

    static Points from_scalars(std::initializer_list<double> xs) {
        Points p;
        p.dim_ = 1;
        p.count_ = static_cast<int>(xs.size());
        p.data_.assign(xs.begin(), xs.end());
        return p;
    }

    int count() const { return count_; }
    int dim() const { return dim_; }
    bool empty() const { return count_ == 0; }

    std::span<double> row(int i) {
        return {data_.data() + static_cast<std::size_t>(i) * dim_, static_cast<std::size_t>(dim_)};
    }
    std::span<const double> row(int i) const {
        return {data_.data() + static_cast<std::size_t>(i) * dim_, static_cast<std::size_t>(dim_)};
    }

    void set_row(int i, std::span<const double> v) {
        std::copy(v.begin(), v.end(), data_.begin() + static_cast<std::size_t>(i) * dim_);
    }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::span<const double> flat() const { return {data_.data(), data_.size()}; }

    bool finite() const { return all_finite(flat()); }

    bool operator==(const Points& o) const {
        return count_ == o.count_ && dim_ == o.dim_ && data_ == o.data_;
    }

private:
    int count_ = 0;
    int dim_ = 0;
    std::vector<double> data_;
};

// Uniform-weight atom collection; the alias documents intent at call sites.
using EmpiricalMeasure = Points;

// ---------------------------------------------------------------------------
// Worker pool. MINMAX_CBO_WORKERS caps the thread count; results are
// identical for any count because every task writes only its own slot and
// all reductions run serially in index order.

namespace detail {
inline int initial_worker_count() {
    if (const char* env = std::getenv("MINMAX_CBO_WORKERS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

inline int& worker_count_ref() {
    static int n = initial_worker_count();
    return n;
}

inline bool& in_worker_flag() {
    thread_local bool nested = false;
    return nested;
}
}  // namespace detail

inline int worker_count() { return detail::worker_count_ref(); }
inline void set_worker_count(int n) { detail::worker_count_ref() = std::max(1, n); }

template <class F>
void parallel_for(std::size_t n, F&& f) {
    const int w = worker_count();
    if (w <= 1 || n < 2 || detail::in_worker_flag()) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(w), n);
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
        const std::size_t begin = n * t / threads;
        const std::size_t end = n * (t + 1) / threads;
        pool.emplace_back([begin, end, &f] {
            detail::in_worker_flag() = true;
            for (std::size_t i = begin; i < end; ++i) f(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace mmcbo

#endif  // MINMAXCBO_COMMON_HPP
