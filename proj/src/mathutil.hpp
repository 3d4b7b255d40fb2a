#ifndef PLCSEC_MATHUTIL_HPP
#define PLCSEC_MATHUTIL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace plcsec {

// Neumaier-compensated accumulator. Ensemble reductions must not depend on
// how work was split across threads, so every reduction in this project runs
// sequentially in index order through one of these.
class CompensatedSum {
public:
    void add(double x) {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double compensated_sum(std::span<const double> xs) {
    CompensatedSum s;
    for (double x : xs) s.add(x);
    return s.value();
}

inline double mean_of(std::span<const double> xs) {
    if (xs.empty()) throw std::invalid_argument("mean_of: empty input");
    return compensated_sum(xs) / static_cast<double>(xs.size());
}

// Sample standard deviation (n-1 denominator); 0 for a single element.
inline double sample_sd(std::span<const double> xs) {
    if (xs.empty()) throw std::invalid_argument("sample_sd: empty input");
    if (xs.size() == 1) return 0.0;
    double m = mean_of(xs);
    CompensatedSum s;
    for (double x : xs) s.add((x - m) * (x - m));
    return std::sqrt(s.value() / static_cast<double>(xs.size() - 1));
}

// Quantile by linear interpolation of order statistics; input need not be sorted.
inline double quantile(std::vector<double> xs, double p) {
    if (xs.empty()) throw std::invalid_argument("quantile: empty input");
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile: p outside [0,1]");
    std::sort(xs.begin(), xs.end());
    double h = p * static_cast<double>(xs.size() - 1);
    size_t lo = static_cast<size_t>(h);
    if (lo + 1 >= xs.size()) return xs.back();
    double frac = h - static_cast<double>(lo);
    return xs[lo] + frac * (xs[lo + 1] - xs[lo]);
}

inline uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

// Fixed-width significant-digit formatting used for all CSV numeric output.
inline std::string format_g(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
}

// Static block partition; workers write to disjoint index ranges, so results
// are identical for any thread count.
inline void parallel_for(size_t n, int threads, const std::function<void(size_t)>& body) {
    if (n == 0) return;
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads < 1) threads = 1;
    size_t t = std::min<size_t>(static_cast<size_t>(threads), n);
    if (t <= 1) {
        for (size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> workers;
    workers.reserve(t);
    std::exception_ptr first_error;
    std::mutex err_mutex;
    size_t chunk = (n + t - 1) / t;
    for (size_t w = 0; w < t; ++w) {
        size_t lo = w * chunk;
        size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        workers.emplace_back([&, lo, hi] {
            try {
                for (size_t i = lo; i < hi; ++i) body(i);
            } catch (...) {
                std::lock_guard<std::mutex> g(err_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& th : workers) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace plcsec

#endif
