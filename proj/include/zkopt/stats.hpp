#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include "zkopt/common.hpp"

namespace zkopt::stats {

inline double mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// Product-moment correlation. Requires equal sizes and nonzero variance
/// on both sides; callers validate.
inline double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
    const double mx = mean(xs), my = mean(ys);
    double cov = 0, vx = 0, vy = 0;
    for (size_t i = 0; i < xs.size(); i++) {
        const double dx = xs[i] - mx, dy = ys[i] - my;
        cov += dx * dy;
        vx += dx * dx;
        vy += dy * dy;
    }
    return cov / std::sqrt(vx * vy);
}

/// Ranks with ties averaged (1-based).
inline std::vector<double> ranks(const std::vector<double>& v) {
    const size_t n = v.size();
    std::vector<size_t> idx(n);
    std::iota(idx.begin(), idx.end(), size_t{0});
    std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return v[a] < v[b]; });
    std::vector<double> out(n);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && v[idx[j + 1]] == v[idx[i]])
            j++;
        const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (size_t k = i; k <= j; k++)
            out[idx[k]] = rank;
        i = j + 1;
    }
    return out;
}

inline double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
    return pearson(ranks(xs), ranks(ys));
}

struct LinearFit {
    double intercept = 0.0;
    double slope = 0.0;
};

/// Ordinary least squares y = intercept + slope*x.
/// Returns nullopt when x has zero variance.
inline std::optional<LinearFit> least_squares(const std::vector<double>& xs,
                                              const std::vector<double>& ys) {
    const double mx = mean(xs), my = mean(ys);
    double sxx = 0, sxy = 0;
    for (size_t i = 0; i < xs.size(); i++) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (sxx == 0.0)
        return std::nullopt;
    const double slope = sxy / sxx;
    return LinearFit{my - slope * mx, slope};
}

inline double variance(const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0;
    for (double x : v)
        s += (x - m) * (x - m);
    return s / static_cast<double>(v.size());
}

inline double stddev(const std::vector<double>& v) { return std::sqrt(variance(v)); }

} // namespace zkopt::stats
