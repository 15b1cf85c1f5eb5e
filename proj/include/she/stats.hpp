// Compensated accumulation and small statistics helpers for the Monte Carlo
// harness: replica moments, least-squares slope fits, binomial intervals.
#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace she {

// Neumaier compensated summation; merging is associative enough that replica
// order permutations move totals by less than 1e-12 relative.
class KahanSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    void merge(const KahanSum& o) {
        add(o.sum_);
        comp_ += o.comp_;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

struct MeanStderr {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::size_t count = 0;
};

inline MeanStderr mean_stderr(double sum, double sumsq, std::size_t n) {
    MeanStderr r;
    r.count = n;
    if (n == 0) return r;
    r.mean = sum / static_cast<double>(n);
    if (n > 1) {
        const double var = std::max(0.0, (sumsq - sum * r.mean) / static_cast<double>(n - 1));
        r.stderr_ = std::sqrt(var / static_cast<double>(n));
    }
    return r;
}

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    double r2 = 0.0;
    std::size_t points = 0;
};

inline LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("least_squares: size mismatch");
    const std::size_t n = x.size();
    LinearFit f;
    f.points = n;
    if (n < 2) throw std::invalid_argument("least_squares: need at least two points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("least_squares: degenerate abscissae");
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - (f.intercept + f.slope * x[i]);
        ssr += r * r;
    }
    f.r2 = (syy == 0.0) ? 1.0 : 1.0 - ssr / syy;
    if (n > 2) f.slope_stderr = std::sqrt(ssr / static_cast<double>(n - 2) / sxx);
    return f;
}

struct BinomialInterval {
    double fraction = 0.0;
    double low = 0.0;
    double high = 1.0;
};

// Wilson score interval at ~95%.
inline BinomialInterval wilson_interval(std::size_t successes, std::size_t trials) {
    BinomialInterval b;
    if (trials == 0) return b;
    const double z = 1.959963984540054;
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    b.fraction = p;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double centre = p + z2 / (2.0 * n);
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
    b.low = std::max(0.0, (centre - half) / denom);
    b.high = std::min(1.0, (centre + half) / denom);
    return b;
}

}  // namespace she
