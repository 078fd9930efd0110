#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>

namespace oca::detail {

// Residual sum of squares after removing the least-squares polynomial of the
// given order from y, sampled on an equispaced grid. The abscissa is mapped to
// [-1, 1] so the normal equations stay well conditioned for long windows.
inline double detrend_rss(std::span<const double> y, int order) {
    const std::size_t n = y.size();
    if (order < 0 || static_cast<std::size_t>(order) + 1 > n)
        throw std::invalid_argument("detrend_rss: window shorter than polynomial basis");
    const int dim = order + 1;
    std::array<double, 8> moments{}; // sums of t^0 .. t^(2*order)
    std::array<double, 4> rhs{};
    const double scale = n > 1 ? 2.0 / static_cast<double>(n - 1) : 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * scale - 1.0;
        double p = 1.0;
        for (int j = 0; j < 2 * dim - 1; ++j) {
            moments[static_cast<std::size_t>(j)] += p;
            if (j < dim) rhs[static_cast<std::size_t>(j)] += p * y[i];
            p *= t;
        }
    }

    // Solve the (dim x dim) normal equations by Gaussian elimination.
    std::array<std::array<double, 5>, 4> a{};
    for (int r = 0; r < dim; ++r) {
        for (int c = 0; c < dim; ++c)
            a[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] =
                moments[static_cast<std::size_t>(r + c)];
        a[static_cast<std::size_t>(r)][static_cast<std::size_t>(dim)] =
            rhs[static_cast<std::size_t>(r)];
    }
    for (int col = 0; col < dim; ++col) {
        int pivot = col;
        for (int r = col + 1; r < dim; ++r)
            if (std::fabs(a[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)]) >
                std::fabs(a[static_cast<std::size_t>(pivot)][static_cast<std::size_t>(col)]))
                pivot = r;
        std::swap(a[static_cast<std::size_t>(col)], a[static_cast<std::size_t>(pivot)]);
        const double d = a[static_cast<std::size_t>(col)][static_cast<std::size_t>(col)];
        if (d == 0.0)
            throw std::runtime_error("detrend_rss: singular normal equations");
        for (int r = col + 1; r < dim; ++r) {
            const double f =
                a[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)] / d;
            for (int c = col; c <= dim; ++c)
                a[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] -=
                    f * a[static_cast<std::size_t>(col)][static_cast<std::size_t>(c)];
        }
    }
    std::array<double, 4> coef{};
    for (int r = dim - 1; r >= 0; --r) {
        double s = a[static_cast<std::size_t>(r)][static_cast<std::size_t>(dim)];
        for (int c = r + 1; c < dim; ++c)
            s -= a[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] *
                 coef[static_cast<std::size_t>(c)];
        coef[static_cast<std::size_t>(r)] =
            s / a[static_cast<std::size_t>(r)][static_cast<std::size_t>(r)];
    }

    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * scale - 1.0;
        double fit = 0.0, p = 1.0;
        for (int j = 0; j < dim; ++j) {
            fit += coef[static_cast<std::size_t>(j)] * p;
            p *= t;
        }
        const double r = y[i] - fit;
        rss += r * r;
    }
    return rss;
}

} // namespace oca::detail
