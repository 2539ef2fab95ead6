#pragma once

// Test-side oracles, kept independent of the library's solution paths:
// fixed-step RK4 integration, micro-swap replay, and small statistics
// helpers shared across suites.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

namespace oracles {

// classic RK4 with n fixed steps; f(t, y) -> dy/dt, integrates t0 -> t1
inline std::vector<double> rk4(const std::function<std::vector<double>(
                                   double, const std::vector<double>&)>& f,
                               std::vector<double> y, double t0, double t1, std::size_t n) {
    const double h = (t1 - t0) / static_cast<double>(n);
    const std::size_t dim = y.size();
    std::vector<double> k1, k2, k3, k4, tmp(dim);
    for (std::size_t s = 0; s < n; ++s) {
        const double t = t0 + h * static_cast<double>(s);
        k1 = f(t, y);
        for (std::size_t i = 0; i < dim; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
        k2 = f(t + 0.5 * h, tmp);
        for (std::size_t i = 0; i < dim; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
        k3 = f(t + 0.5 * h, tmp);
        for (std::size_t i = 0; i < dim; ++i) tmp[i] = y[i] + h * k3[i];
        k4 = f(t + h, tmp);
        for (std::size_t i = 0; i < dim; ++i)
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return y;
}

// brute-force tick walk: split delta_y into n equal micro swaps; each micro
// swap is executed against the range depth at the prevailing rate, re-locating
// the range from scratch and honouring the depth change at a boundary
struct MicroSwapResult {
    double rate_after = 0.0;
    double delta_x = 0.0;
};

inline MicroSwapResult micro_swap_replay(const std::vector<double>& boundaries,
                                         const std::vector<double>& depths, double z0,
                                         double delta_y, std::size_t n_steps) {
    double rate = z0;
    double total_dx = 0.0;
    const double step = delta_y / static_cast<double>(n_steps);
    for (std::size_t s = 0; s < n_steps; ++s) {
        double rem = step;
        while (rem != 0.0) {
            std::size_t idx = 0;
            while (idx + 2 < boundaries.size() && rate >= boundaries[idx + 1]) ++idx;
            const double k = depths[idx];
            const double k2 = k * k;
            const double y = k / std::sqrt(rate);
            const double z_edge = rem > 0.0 ? boundaries[idx] : boundaries[idx + 1];
            const double y_edge = k / std::sqrt(z_edge);
            const double cap = y_edge - y;
            if ((rem > 0.0 && rem <= cap) || (rem < 0.0 && rem >= cap)) {
                total_dx += rem * k2 / (y * (y + rem));
                const double y_new = y + rem;
                rate = k2 / (y_new * y_new);
                rem = 0.0;
            } else {
                total_dx += cap * k2 / (y * y_edge);
                rem -= cap;
                // nudge off the shared edge so the relocation picks the next range
                rate = rem > 0.0 ? std::nextafter(z_edge, 0.0) : z_edge;
            }
        }
    }
    return {rate, total_dx};
}

inline double mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double sample_sd(const std::vector<double>& v) {
    const double m = mean(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

inline double standard_error(const std::vector<double>& v) {
    return sample_sd(v) / std::sqrt(static_cast<double>(v.size()));
}

inline double correlation(const std::vector<double>& a, const std::vector<double>& b) {
    const double ma = mean(a), mb = mean(b);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

inline std::vector<double> ranks(const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0; // tie-averaged
        for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
        i = j + 1;
    }
    return r;
}

inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    return correlation(ranks(a), ranks(b));
}

// least-squares slope of y over x
inline double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double mx = mean(x), my = mean(y);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    return sxy / sxx;
}

} // namespace oracles
