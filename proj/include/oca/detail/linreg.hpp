#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>

namespace oca::detail {

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_std_error = 0.0;
    double rss = 0.0;
    std::size_t n = 0;
};

inline LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("linear_fit: need at least two (x, y) pairs");
    const std::size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        sxx += dx * dx;
        sxy += dx * (y[i] - my);
    }
    if (sxx <= 0.0)
        throw std::invalid_argument("linear_fit: abscissa values are all equal");
    LinearFit fit;
    fit.n = n;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - (fit.intercept + fit.slope * x[i]);
        fit.rss += r * r;
    }
    fit.slope_std_error =
        n > 2 ? std::sqrt(fit.rss / (static_cast<double>(n - 2) * sxx)) : 0.0;
    return fit;
}

} // namespace oca::detail
