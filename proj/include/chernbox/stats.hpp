#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace chernbox {

// Fixed-order pairwise summation: deterministic for a given value order and
// better conditioned than a running sum.
inline double pairwise_sum(const double* x, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += x[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

inline double pairwise_sum(const std::vector<double>& x) {
    return pairwise_sum(x.data(), x.size());
}

struct MeanStderr {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::size_t n = 0;
};

inline MeanStderr mean_stderr(const std::vector<double>& x) {
    MeanStderr out;
    out.n = x.size();
    if (x.empty()) return out;
    out.mean = pairwise_sum(x) / static_cast<double>(x.size());
    if (x.size() < 2) return out;
    std::vector<double> sq(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - out.mean;
        sq[i] = d * d;
    }
    const double var = pairwise_sum(sq) / static_cast<double>(x.size() - 1);
    out.stderr_ = std::sqrt(var / static_cast<double>(x.size()));
    return out;
}

struct LineFit {
    double intercept = 0.0;
    double slope = 0.0;
    double r2 = 0.0;
};

// Ordinary least squares y = intercept + slope * x.
inline LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("least_squares: need two or more paired points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0) throw std::invalid_argument("least_squares: degenerate abscissae");
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r2 = (syy == 0.0) ? 1.0 : (sxy * sxy) / (sxx * syy);
    return fit;
}

struct WilsonInterval {
    double lo = 0.0;
    double hi = 1.0;
};

// Wilson score interval for a binomial proportion.
inline WilsonInterval wilson_interval(int hits, int n, double z = 1.959963984540054) {
    if (n <= 0 || hits < 0 || hits > n)
        throw std::invalid_argument("wilson_interval: invalid counts");
    const double p = static_cast<double>(hits) / n;
    const double z2n = z * z / n;
    const double denom = 1.0 + z2n;
    const double center = p + 0.5 * z2n;
    const double spread = z * std::sqrt(p * (1.0 - p) / n + 0.25 * z2n / n);
    return {std::max(0.0, (center - spread) / denom), std::min(1.0, (center + spread) / denom)};
}

// Two-sided Kolmogorov-Smirnov statistic of samples against a CDF given as a
// callable; samples are sorted internally.
template <typename Cdf>
inline double ks_statistic(std::vector<double> samples, Cdf&& cdf) {
    if (samples.empty()) throw std::invalid_argument("ks_statistic: empty sample");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double dmax = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        dmax = std::max(dmax, std::abs((static_cast<double>(i) + 1.0) / n - f));
        dmax = std::max(dmax, std::abs(f - static_cast<double>(i) / n));
    }
    return dmax;
}

} // namespace chernbox
