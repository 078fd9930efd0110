#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "oca/detail/fft.hpp"
#include "oca/detail/rng.hpp"

namespace oca {

/// Fractional Gaussian noise with unit variance via circulant embedding of
/// the exact autocovariance (Davies-Harte). Deterministic given the seed.
inline std::vector<double> fractional_gaussian_noise(std::size_t n, double hurst,
                                                     std::uint64_t seed) {
    if (n == 0) throw std::invalid_argument("fractional_gaussian_noise: n must be >= 1");
    if (!(hurst > 0.0 && hurst < 1.0))
        throw std::invalid_argument("fractional_gaussian_noise: hurst must be in (0, 1)");

    const std::size_t m = detail::next_pow2(n);
    const std::size_t size = 2 * m;
    const double two_h = 2.0 * hurst;

    std::vector<double> gamma(m + 1);
    for (std::size_t k = 0; k <= m; ++k) {
        const double kd = static_cast<double>(k);
        gamma[k] = 0.5 * (std::pow(kd + 1.0, two_h) - 2.0 * std::pow(kd, two_h) +
                          std::pow(std::fabs(kd - 1.0), two_h));
    }

    std::vector<std::complex<double>> row(size);
    for (std::size_t k = 0; k <= m; ++k) row[k] = gamma[k];
    for (std::size_t k = m + 1; k < size; ++k) row[k] = gamma[size - k];
    detail::fft_pow2(row, false);

    std::vector<double> lambda(size);
    for (std::size_t k = 0; k < size; ++k) {
        double v = row[k].real();
        if (v < 0.0) {
            if (v < -1e-8) throw std::runtime_error("fractional_gaussian_noise: embedding failed");
            v = 0.0;
        }
        lambda[k] = v;
    }

    detail::Rng rng(seed);
    std::vector<std::complex<double>> spectrum(size);
    spectrum[0] = std::sqrt(lambda[0]) * rng.normal();
    spectrum[m] = std::sqrt(lambda[m]) * rng.normal();
    for (std::size_t k = 1; k < m; ++k) {
        const double a = rng.normal();
        const double b = rng.normal();
        const double s = std::sqrt(0.5 * lambda[k]);
        spectrum[k] = std::complex<double>(s * a, s * b);
        spectrum[size - k] = std::conj(spectrum[k]);
    }

    detail::fft_pow2(spectrum, false);
    const double norm = 1.0 / std::sqrt(static_cast<double>(size));
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = spectrum[i].real() * norm;
    return out;
}

/// Gaussian series with two spectral power-law regimes joined continuously:
/// short scales see h_short, long scales h_long, and the detrended
/// fluctuation function of the output crosses over near crossover_scale.
/// The break frequency carries a fixed calibration factor mapping spectral
/// breaks onto detrended-fluctuation crossover scales. Output is normalized
/// to unit sample variance.
inline std::vector<double> spliced_noise(std::size_t n, double h_short, double h_long,
                                         double crossover_scale, std::uint64_t seed) {
    constexpr double kDfaBreakCalibration = 1.4;
    if (n < 8) throw std::invalid_argument("spliced_noise: n too small");
    if (!(h_short > 0.0 && h_short < 1.0 && h_long > 0.0 && h_long < 1.0))
        throw std::invalid_argument("spliced_noise: exponents must be in (0, 1)");
    if (!(crossover_scale > 4.0 && crossover_scale < static_cast<double>(n)))
        throw std::invalid_argument("spliced_noise: crossover outside series range");

    const std::size_t m = detail::next_pow2(n);
    const double f_cross = kDfaBreakCalibration / crossover_scale;
    const double beta_short = 2.0 * h_short - 1.0;
    const double beta_long = 2.0 * h_long - 1.0;
    // continuity of the amplitude at the break frequency
    const double join = std::pow(f_cross, 0.5 * (beta_long - beta_short));

    detail::Rng rng(seed);
    std::vector<std::complex<double>> spectrum(m);
    for (std::size_t k = 1; k <= m / 2; ++k) {
        const double f = static_cast<double>(k) / static_cast<double>(m);
        const double amp = f >= f_cross ? std::pow(f, -0.5 * beta_short)
                                        : join * std::pow(f, -0.5 * beta_long);
        const double a = rng.normal();
        const double b = rng.normal();
        if (k == m / 2) {
            spectrum[k] = amp * a;
        } else {
            spectrum[k] = std::complex<double>(amp * a, amp * b) * std::sqrt(0.5);
            spectrum[m - k] = std::conj(spectrum[k]);
        }
    }
    detail::fft_pow2(spectrum, true);

    std::vector<double> out(n);
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = spectrum[i].real();
        mean += out[i];
    }
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        out[i] -= mean;
        var += out[i] * out[i];
    }
    var /= static_cast<double>(n);
    const double scale = var > 0.0 ? 1.0 / std::sqrt(var) : 1.0;
    for (auto& x : out) x *= scale;
    return out;
}

} // namespace oca
