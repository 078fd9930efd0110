#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "oca/detail/linreg.hpp"
#include "oca/detail/polyfit.hpp"

namespace oca {

/// Detrended fluctuation function F(l) over a set of window scales.
struct FluctuationFunction {
    std::vector<std::int64_t> scales;
    std::vector<double> values;
    std::size_t series_length = 0;
    int detrend_order = 1;
    bool degenerate = false;   // F identically zero
};

/// Roughly log-uniform integer scale grid from l_min to n/4.
inline std::vector<std::int64_t> default_scales(std::size_t n, int per_decade = 20,
                                                std::int64_t l_min = 10) {
    const std::int64_t l_max = static_cast<std::int64_t>(n) / 4;
    std::vector<std::int64_t> scales;
    if (l_max < l_min) return scales;
    const double step = 1.0 / static_cast<double>(per_decade);
    for (double e = std::log10(static_cast<double>(l_min));; e += step) {
        const std::int64_t l = std::llround(std::pow(10.0, e));
        if (l > l_max) break;
        if (scales.empty() || l > scales.back()) scales.push_back(std::max(l, l_min));
    }
    return scales;
}

/// Cumulates the mean-subtracted series, splits it into non-overlapping
/// windows of length l taken from the front and from the back, removes the
/// least-squares polynomial of the given order per window, and reports the
/// root mean square of all residuals.
inline FluctuationFunction fluctuation_function(std::span<const double> series,
                                                std::span<const std::int64_t> scales,
                                                int order = 1) {
    const std::size_t n = series.size();
    if (order < 1 || order > 3)
        throw std::invalid_argument("fluctuation_function: detrend order must be 1..3");
    if (scales.empty())
        throw std::invalid_argument("fluctuation_function: no scales");
    for (std::size_t i = 0; i < scales.size(); ++i) {
        if (i > 0 && scales[i] <= scales[i - 1])
            throw std::invalid_argument("fluctuation_function: scales must be strictly increasing");
        if (scales[i] < order + 2)
            throw std::invalid_argument("fluctuation_function: scale below detrend order + 2");
    }
    if (static_cast<std::size_t>(scales.back()) * 4 > n)
        throw std::invalid_argument("fluctuation_function: series shorter than 4 * max scale");

    FluctuationFunction f;
    f.scales.assign(scales.begin(), scales.end());
    f.series_length = n;
    f.detrend_order = order;

    const auto [lo_it, hi_it] = std::minmax_element(series.begin(), series.end());
    if (*lo_it == *hi_it) { // constant input detrends to nothing
        f.values.assign(scales.size(), 0.0);
        f.degenerate = true;
        return f;
    }

    double mean = 0.0;
    for (double x : series) mean += x;
    mean /= static_cast<double>(n);
    // Profile anchored at zero (n + 1 points); time reversal then maps the
    // profile onto its own negated reflection, which makes the two-direction
    // windowing below reversal-exact.
    std::vector<double> profile(n + 1);
    profile[0] = 0.0;
    for (std::size_t i = 0; i < n; ++i) profile[i + 1] = profile[i] + (series[i] - mean);

    f.values.reserve(scales.size());
    for (const std::int64_t l : scales) {
        const std::size_t len = static_cast<std::size_t>(l);
        const std::size_t windows = n / len;
        double rss = 0.0;
        for (std::size_t w = 0; w < windows; ++w) {
            rss += detail::detrend_rss({profile.data() + w * len, len}, order);
            rss += detail::detrend_rss({profile.data() + (n + 1 - (w + 1) * len), len}, order);
        }
        f.values.push_back(std::sqrt(rss / (2.0 * static_cast<double>(windows * len))));
    }
    f.degenerate = std::all_of(f.values.begin(), f.values.end(),
                               [](double v) { return v == 0.0; });
    return f;
}

struct ScalingFit {
    double exponent = 0.0;       // H
    double std_error = 0.0;
    double intercept = 0.0;      // log F at log l = 0
    std::int64_t l_min = 0;
    std::int64_t l_max = 0;
    std::size_t n_scales = 0;
};

/// Log-log slope of F(l) over the scales falling inside [l_min, l_max].
inline ScalingFit hurst(const FluctuationFunction& f, std::int64_t l_min,
                        std::int64_t l_max) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < f.scales.size(); ++i) {
        if (f.scales[i] < l_min || f.scales[i] > l_max) continue;
        if (f.values[i] <= 0.0)
            throw std::domain_error("hurst: degenerate fluctuation function");
        lx.push_back(std::log(static_cast<double>(f.scales[i])));
        ly.push_back(std::log(f.values[i]));
    }
    if (lx.size() < 5)
        throw std::invalid_argument("hurst: need at least 5 scales in range");
    const auto fit = detail::linear_fit(lx, ly);
    ScalingFit out;
    out.exponent = fit.slope;
    out.std_error = fit.slope_std_error;
    out.intercept = fit.intercept;
    out.l_min = static_cast<std::int64_t>(std::llround(std::exp(lx.front())));
    out.l_max = static_cast<std::int64_t>(std::llround(std::exp(lx.back())));
    out.n_scales = lx.size();
    return out;
}

inline ScalingFit hurst(const FluctuationFunction& f) {
    if (f.scales.empty()) throw std::invalid_argument("hurst: empty fluctuation function");
    return hurst(f, f.scales.front(), f.scales.back());
}

struct CrossoverFit {
    double h_short = 0.0;            // slope below the crossover
    double h_long = 0.0;             // slope at and above it
    std::int64_t crossover_scale = 0;
    double total_residual = 0.0;     // summed squared log residuals of both fits
};

/// Two-regime power-law fit: grid search over split points, each side fitted
/// by an independent log-log regression, keeping the split with the smallest
/// total squared residual. Each side retains at least 5 scales.
inline CrossoverFit crossover_fit(const FluctuationFunction& f) {
    const std::size_t n = f.scales.size();
    if (n < 12)
        throw std::invalid_argument("crossover_fit: need at least 12 scales");
    std::vector<double> lx(n), ly(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (f.values[i] <= 0.0)
            throw std::domain_error("crossover_fit: degenerate fluctuation function");
        lx[i] = std::log(static_cast<double>(f.scales[i]));
        ly[i] = std::log(f.values[i]);
    }
    // Candidates closer in residual than fp noise on the data count as ties;
    // the smaller crossover wins.
    double mean_ly = 0.0;
    for (double y : ly) mean_ly += y;
    mean_ly /= static_cast<double>(n);
    double spread = 0.0;
    for (double y : ly) spread += (y - mean_ly) * (y - mean_ly);
    const double tie_eps = spread * 1e-12;

    bool found = false;
    CrossoverFit best;
    for (std::size_t split = 5; split + 5 <= n; ++split) {
        const auto left = detail::linear_fit({lx.data(), split}, {ly.data(), split});
        const auto right =
            detail::linear_fit({lx.data() + split, n - split}, {ly.data() + split, n - split});
        const double residual = left.rss + right.rss;
        if (!found || residual < best.total_residual - tie_eps) {
            found = true;
            best.h_short = left.slope;
            best.h_long = right.slope;
            best.crossover_scale = f.scales[split];
            best.total_residual = residual;
        }
    }
    return best;
}

struct DailyHurst {
    double mean_exponent = 0.0;        // H_D
    std::vector<double> per_day;
    std::size_t days_used = 0;
    std::size_t days_skipped = 0;
};

/// Single-regime Hurst exponent per day, averaged arithmetically. Days too
/// short (or degenerate) for the estimator are skipped and counted.
inline DailyHurst daily_hurst(std::span<const std::vector<double>> day_series,
                              int order = 1, int per_decade = 20, std::int64_t l_min = 10) {
    DailyHurst out;
    for (const auto& day : day_series) {
        const auto scales = default_scales(day.size(), per_decade, l_min);
        if (scales.size() < 5) {
            ++out.days_skipped;
            continue;
        }
        try {
            const auto f = fluctuation_function(day, scales, order);
            const auto fit = hurst(f);
            out.per_day.push_back(fit.exponent);
        } catch (const std::exception&) {
            ++out.days_skipped;
        }
    }
    out.days_used = out.per_day.size();
    if (out.days_used == 0)
        throw std::domain_error("daily_hurst: no day was long enough to estimate");
    double sum = 0.0;
    for (double h : out.per_day) sum += h;
    out.mean_exponent = sum / static_cast<double>(out.days_used);
    return out;
}

} // namespace oca
