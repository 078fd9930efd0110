#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "oca/detail/pchip.hpp"
#include "oca/detail/quadrature.hpp"
#include "oca/detail/rng.hpp"

namespace oca {

enum class Family : std::uint8_t { Weibull, QExponential, QGamma, QWeibull };

inline const char* to_string(Family f) {
    switch (f) {
        case Family::Weibull: return "weibull";
        case Family::QExponential: return "qexponential";
        case Family::QGamma: return "qgamma";
        default: return "qweibull";
    }
}

/// Parameters of one density family. beta is unused for the q-exponential
/// and q for the plain Weibull.
struct DistParams {
    Family family = Family::Weibull;
    double theta = 1.0;
    double beta = 1.0;
    double q = 1.5;

    void validate() const {
        if (!(theta > 0.0)) throw std::invalid_argument("DistParams: theta must be > 0");
        switch (family) {
            case Family::Weibull:
                if (!(beta > 0.0)) throw std::invalid_argument("DistParams: beta must be > 0");
                break;
            case Family::QExponential:
                if (!(q > 1.0)) throw std::invalid_argument("DistParams: q must be > 1");
                break;
            case Family::QGamma:
                if (!(beta > 0.0)) throw std::invalid_argument("DistParams: beta must be > 0");
                if (!(q > 1.0)) throw std::invalid_argument("DistParams: q must be > 1");
                if (!(beta + 1.0 < 1.0 / (q - 1.0)))
                    throw std::invalid_argument("DistParams: q-Gamma tail not integrable");
                break;
            case Family::QWeibull:
                if (!(beta > 0.0)) throw std::invalid_argument("DistParams: beta must be > 0");
                if (!(q > 1.0 && q < 2.0))
                    throw std::invalid_argument("DistParams: q must be in (1, 2)");
                break;
        }
    }
};

/// Normalization constant of the q-Gamma density, evaluated by adaptive
/// quadrature of the unnormalized integrand over [0, inf).
inline double qgamma_norm(double theta, double beta, double q) {
    DistParams check{Family::QGamma, theta, beta, q};
    check.validate();
    const auto integrand = [&](double v) {
        if (v <= 0.0) return 0.0;
        const double r = v / theta;
        return std::exp(beta * std::log(r) - std::log1p((q - 1.0) * r) / (q - 1.0));
    };
    const auto result = detail::integrate_to_infinity(integrand, 0.0, theta, 1e-11);
    if (!result.converged || !(result.value > 0.0))
        throw std::runtime_error("qgamma_norm: quadrature failed to converge");
    return result.value;
}

/// Same constant through the Euler Beta identity; used as an independent
/// cross-check of the quadrature route.
inline double qgamma_norm_closed_form(double theta, double beta, double q) {
    DistParams check{Family::QGamma, theta, beta, q};
    check.validate();
    const double a = beta + 1.0;
    const double b = 1.0 / (q - 1.0) - beta - 1.0;
    const double log_beta_fn = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
    return theta * std::exp(log_beta_fn - a * std::log(q - 1.0));
}

/// Density evaluator with the q-Gamma normalization computed once.
class DensityModel {
public:
    explicit DensityModel(const DistParams& p) : params_(p) {
        params_.validate();
        if (params_.family == Family::QGamma)
            z_ = qgamma_norm(params_.theta, params_.beta, params_.q);
    }

    const DistParams& params() const { return params_; }

    // Evaluations run in log space so the power-law tails underflow to zero
    // instead of producing inf * 0.
    double operator()(double v) const {
        if (v < 0.0) throw std::invalid_argument("DensityModel: v must be >= 0");
        const double theta = params_.theta;
        const double beta = params_.beta;
        const double q = params_.q;
        switch (params_.family) {
            case Family::Weibull: {
                if (v == 0.0)
                    return beta > 1.0 ? 0.0
                                      : (beta == 1.0 ? 1.0 / theta
                                                     : std::numeric_limits<double>::infinity());
                const double lr = std::log(v / theta);
                const double blr = beta * lr;
                const double rb = blr > 700.0 ? std::numeric_limits<double>::infinity()
                                              : std::exp(blr);
                return std::exp(std::log(beta / theta) + (beta - 1.0) * lr - rb);
            }
            case Family::QExponential: {
                const double base = 1.0 + (q - 1.0) * v / theta;
                return std::exp(q / (1.0 - q) * std::log(base)) / theta;
            }
            case Family::QGamma: {
                if (v == 0.0) return 0.0;
                const double lr = std::log(v / theta);
                const double tail = std::log1p((q - 1.0) * (v / theta));
                return std::exp(beta * lr - tail / (q - 1.0) - std::log(z_));
            }
            case Family::QWeibull: {
                if (v == 0.0)
                    return beta > 1.0 ? 0.0
                                      : (beta == 1.0 ? (2.0 - q) / theta
                                                     : std::numeric_limits<double>::infinity());
                const double lr = std::log(v / theta);
                const double blr = beta * lr;
                const double tail = blr > 700.0 ? std::log(q - 1.0) + blr
                                                : std::log1p((q - 1.0) * std::exp(blr));
                return std::exp(std::log((2.0 - q) * beta / theta) + (beta - 1.0) * lr -
                                tail / (q - 1.0));
            }
        }
        return 0.0;
    }

private:
    DistParams params_;
    double z_ = 1.0;
};

inline double pdf_eval(const DistParams& p, double v) { return DensityModel(p)(v); }

/// Density histogram on logarithmically spaced bins; empty bins are omitted.
struct EmpiricalPdf {
    std::vector<double> centers;    // geometric bin centers, increasing
    std::vector<double> densities;
    std::vector<double> widths;
    std::size_t sample_count = 0;
    std::uint64_t id = 0;           // identity tag, set from the binned data
};

struct BinSpec {
    double per_decade = 40.0;
    std::optional<double> lo;   // defaults to the sample minimum
    std::optional<double> hi;   // defaults to the sample maximum
};

namespace detail {

inline void hash_bytes(std::uint64_t& h, const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
}

} // namespace detail

inline EmpiricalPdf empirical_pdf(std::span<const double> samples, const BinSpec& spec = {}) {
    if (samples.size() < 100)
        throw std::invalid_argument("empirical_pdf: need at least 100 samples");
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (double v : samples) {
        if (!(v > 0.0)) throw std::invalid_argument("empirical_pdf: samples must be > 0");
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (spec.lo) lo = *spec.lo;
    if (spec.hi) hi = *spec.hi;
    if (!(lo > 0.0) || hi < lo)
        throw std::invalid_argument("empirical_pdf: invalid bin range");

    std::vector<double> edges;
    if (lo == hi) {
        edges = {lo * (1.0 - 5e-10), lo * (1.0 + 5e-10)};
    } else {
        const double decades = std::log10(hi / lo);
        const std::size_t nbins =
            std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(decades * spec.per_decade)));
        edges.resize(nbins + 1);
        for (std::size_t j = 0; j <= nbins; ++j)
            edges[j] = lo * std::pow(hi / lo, static_cast<double>(j) / static_cast<double>(nbins));
        edges.front() = lo;
        edges.back() = hi;
    }
    const std::size_t nbins = edges.size() - 1;
    std::vector<std::int64_t> counts(nbins, 0);
    const double log_lo = std::log(edges.front());
    const double log_span = std::log(edges.back()) - log_lo;
    for (double v : samples) {
        if (v < edges.front() || v > edges.back()) continue;
        std::size_t j =
            log_span > 0.0
                ? static_cast<std::size_t>(std::min<double>(
                      static_cast<double>(nbins) - 1.0,
                      std::max(0.0, (std::log(v) - log_lo) / log_span * static_cast<double>(nbins))))
                : 0;
        // guard against edge rounding
        while (j > 0 && v < edges[j]) --j;
        while (j + 1 < nbins && v >= edges[j + 1]) ++j;
        ++counts[j];
    }

    EmpiricalPdf pdf;
    pdf.sample_count = samples.size();
    const double total = static_cast<double>(samples.size());
    double mass = 0.0;
    for (std::size_t j = 0; j < nbins; ++j) {
        if (counts[j] == 0) continue;
        const double width = edges[j + 1] - edges[j];
        pdf.centers.push_back(std::sqrt(edges[j] * edges[j + 1]));
        pdf.widths.push_back(width);
        pdf.densities.push_back(static_cast<double>(counts[j]) / (total * width));
        mass += static_cast<double>(counts[j]) / total;
    }
    if (mass < 0.95 || mass > 1.05)
        throw std::domain_error("empirical_pdf: bin range drops too much sample mass");

    std::uint64_t h = 0xcbf29ce484222325ULL;
    detail::hash_bytes(h, &pdf.sample_count, sizeof(pdf.sample_count));
    detail::hash_bytes(h, pdf.centers.data(), pdf.centers.size() * sizeof(double));
    detail::hash_bytes(h, pdf.densities.data(), pdf.densities.size() * sizeof(double));
    pdf.id = h;
    return pdf;
}

struct FitResult {
    DistParams params;
    double sse = 0.0;
    bool converged = false;
    int iterations = 0;
    std::uint64_t epdf_id = 0;
};

struct FitOptions {
    int max_iterations = 200;
    bool weighted = false;       // scale residuals by 1/density
    double gradient_tol = 1e-5;  // converged when |grad|_inf <= tol * (1 + sse)
};

namespace detail {

// Unconstrained parameterization per family: log theta, log beta, and a
// logistic map for q onto its open interval.
struct FitProblem {
    Family family;
    const EmpiricalPdf* epdf;
    bool weighted;

    int dim() const {
        return family == Family::Weibull || family == Family::QExponential ? 2 : 3;
    }
    double q_span() const { return family == Family::QExponential ? 2.0 : 1.0; }

    DistParams decode(std::span<const double> u) const {
        DistParams p;
        p.family = family;
        p.theta = std::exp(u[0]);
        switch (family) {
            case Family::Weibull:
                p.beta = std::exp(u[1]);
                break;
            case Family::QExponential:
                p.q = 1.0 + q_span() / (1.0 + std::exp(-u[1]));
                break;
            default:
                p.beta = std::exp(u[1]);
                p.q = 1.0 + q_span() / (1.0 + std::exp(-u[2]));
                break;
        }
        return p;
    }

    std::vector<double> encode(const DistParams& p) const {
        const auto logit = [](double x) {
            const double c = std::clamp(x, 1e-9, 1.0 - 1e-9);
            return std::log(c / (1.0 - c));
        };
        switch (family) {
            case Family::Weibull: return {std::log(p.theta), std::log(p.beta)};
            case Family::QExponential:
                return {std::log(p.theta), logit((p.q - 1.0) / q_span())};
            default:
                return {std::log(p.theta), std::log(p.beta), logit((p.q - 1.0) / q_span())};
        }
    }

    // Residuals model(v_k) - f_k; non-normalizable q-Gamma corners get a
    // smooth penalty so the optimizer backs away.
    bool residuals(std::span<const double> u, std::vector<double>& out) const {
        const DistParams p = decode(u);
        const std::size_t k = epdf->centers.size();
        out.resize(k);
        if (p.family == Family::QGamma) {
            const double slack = 1.0 / (p.q - 1.0) - (p.beta + 1.0);
            if (slack <= 1e-6) {
                const double pen = 1e3 * (1.0 + std::fabs(slack - 1e-6));
                std::fill(out.begin(), out.end(), pen);
                return false;
            }
        }
        try {
            const DensityModel model(p);
            for (std::size_t i = 0; i < k; ++i) {
                double r = model(epdf->centers[i]) - epdf->densities[i];
                if (weighted) r /= epdf->densities[i];
                if (!std::isfinite(r)) return false;
                out[i] = r;
            }
        } catch (const std::exception&) {
            std::fill(out.begin(), out.end(), 1e6);
            return false;
        }
        return true;
    }
};

inline double sse_of(std::span<const double> r) {
    double s = 0.0;
    for (double x : r) s += x * x;
    return s;
}

// Small dense solve for the damped normal equations.
inline bool solve_damped(const std::array<std::array<double, 3>, 3>& a,
                         const std::array<double, 3>& b, double lambda, int dim,
                         std::array<double, 3>& x) {
    std::array<std::array<double, 4>, 3> m{};
    for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) m[i][j] = a[i][j];
        m[i][i] += lambda * std::max(a[i][i], 1e-12);
        m[i][dim] = -b[i];
    }
    for (int c = 0; c < dim; ++c) {
        int piv = c;
        for (int r = c + 1; r < dim; ++r)
            if (std::fabs(m[r][c]) > std::fabs(m[piv][c])) piv = r;
        std::swap(m[c], m[piv]);
        if (m[c][c] == 0.0) return false;
        for (int r = c + 1; r < dim; ++r) {
            const double f = m[r][c] / m[c][c];
            for (int j = c; j <= dim; ++j) m[r][j] -= f * m[c][j];
        }
    }
    for (int r = dim - 1; r >= 0; --r) {
        double s = m[r][dim];
        for (int j = r + 1; j < dim; ++j) s -= m[r][j] * x[j];
        x[r] = s / m[r][r];
    }
    return true;
}

struct LmRun {
    std::vector<double> u;
    double sse = std::numeric_limits<double>::infinity();
    bool converged = false;
    int iterations = 0;
    bool valid = false;
};

inline LmRun lm_minimize(const FitProblem& prob, std::vector<double> u,
                         const FitOptions& opts) {
    const int dim = prob.dim();
    LmRun run;
    std::vector<double> r, r_try, rp, rm;
    if (!prob.residuals(u, r)) return run;
    double sse = sse_of(r);
    if (!std::isfinite(sse)) return run;
    run.valid = true;

    double lambda = 1e-3;
    int stall = 0;
    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        run.iterations = iter + 1;
        // central-difference Jacobian
        const std::size_t k = r.size();
        std::vector<std::array<double, 3>> jac(k);
        bool ok = true;
        for (int j = 0; j < dim && ok; ++j) {
            const double h = 1e-6 * (1.0 + std::fabs(u[j]));
            auto up = u, um = u;
            up[j] += h;
            um[j] -= h;
            ok = prob.residuals(up, rp) && prob.residuals(um, rm);
            if (!ok) break;
            for (std::size_t i = 0; i < k; ++i) jac[i][j] = (rp[i] - rm[i]) / (2.0 * h);
        }
        if (!ok) break;

        std::array<std::array<double, 3>, 3> a{};
        std::array<double, 3> g{};
        for (std::size_t i = 0; i < k; ++i)
            for (int c = 0; c < dim; ++c) {
                g[c] += jac[i][c] * r[i];
                for (int c2 = 0; c2 < dim; ++c2) a[c][c2] += jac[i][c] * jac[i][c2];
            }
        double gmax = 0.0;
        for (int c = 0; c < dim; ++c) gmax = std::max(gmax, std::fabs(g[c]));
        if (gmax <= opts.gradient_tol * (1.0 + sse)) {
            run.converged = true;
            break;
        }

        bool accepted = false;
        for (int inner = 0; inner < 16; ++inner) {
            std::array<double, 3> delta{};
            if (!solve_damped(a, g, lambda, dim, delta)) {
                lambda *= 10.0;
                continue;
            }
            auto u_try = u;
            for (int c = 0; c < dim; ++c) u_try[c] += delta[c];
            if (prob.residuals(u_try, r_try)) {
                const double sse_try = sse_of(r_try);
                if (std::isfinite(sse_try) && sse_try < sse) {
                    const double rel = (sse - sse_try) / std::max(sse, 1e-300);
                    u = std::move(u_try);
                    r = r_try;
                    sse = sse_try;
                    lambda = std::max(lambda * 0.25, 1e-12);
                    accepted = true;
                    stall = rel < 1e-12 ? stall + 1 : 0;
                    break;
                }
            }
            lambda = std::min(lambda * 4.0, 1e14);
        }
        if (!accepted || stall >= 3) break;
    }
    run.u = std::move(u);
    run.sse = sse;
    return run;
}

inline std::vector<DistParams> fit_starts(Family family) {
    std::vector<DistParams> starts;
    const auto qg_clamp = [](double q, double beta) {
        return std::min(q, 1.0 + 0.9 / (beta + 1.0));
    };
    switch (family) {
        case Family::Weibull:
            for (double theta : {0.01, 0.1, 1.0, 10.0})
                for (double beta : {0.3, 2.0})
                    starts.push_back({family, theta, beta, 1.5});
            break;
        case Family::QExponential:
            for (double theta : {0.01, 0.1, 1.0, 10.0})
                for (double q : {1.2, 1.6})
                    starts.push_back({family, theta, 1.0, q});
            break;
        case Family::QGamma:
            for (double theta : {0.05, 1.0})
                for (double beta : {0.3, 2.0})
                    for (double q : {1.2, 1.6})
                        starts.push_back({family, theta, beta, qg_clamp(q, beta)});
            break;
        case Family::QWeibull:
            for (double theta : {0.05, 1.0})
                for (double beta : {0.3, 2.0})
                    for (double q : {1.2, 1.6})
                        starts.push_back({family, theta, beta, q});
            break;
    }
    return starts;
}

} // namespace detail

/// Least-squares fit of one family against an empirical density, multi-start
/// damped Gauss-Newton over occupied bins. The returned SSE never exceeds the
/// SSE at any start point.
inline FitResult fit(const EmpiricalPdf& epdf, Family family,
                     std::optional<DistParams> init = std::nullopt,
                     const FitOptions& opts = {}) {
    if (epdf.centers.empty())
        throw std::invalid_argument("fit: empirical density has no occupied bins");
    detail::FitProblem prob{family, &epdf, opts.weighted};

    std::vector<DistParams> starts;
    if (init) {
        if (init->family != family) throw std::invalid_argument("fit: init family mismatch");
        init->validate();
        starts.push_back(*init);
    }
    for (const auto& s : detail::fit_starts(family)) starts.push_back(s);

    detail::LmRun best;
    bool any = false;
    for (const auto& start : starts) {
        auto run = detail::lm_minimize(prob, prob.encode(start), opts);
        if (!run.valid) continue;
        if (!any || run.sse < best.sse) {
            any = true;
            best = std::move(run);
        }
    }
    if (!any)
        throw std::runtime_error("fit: every start diverged for family " +
                                 std::string(to_string(family)));
    FitResult result;
    result.params = prob.decode(best.u);
    result.sse = best.sse;
    result.converged = best.converged;
    result.iterations = best.iterations;
    result.epdf_id = epdf.id;
    return result;
}

/// Ascending by SSE, stable under ties. All fits must target the same
/// empirical density.
inline std::vector<FitResult> rank(std::vector<FitResult> fits) {
    if (fits.size() < 2)
        throw std::invalid_argument("rank: need at least two fits");
    for (const auto& f : fits)
        if (f.epdf_id != fits.front().epdf_id)
            throw std::invalid_argument("rank: fits target different empirical densities");
    std::stable_sort(fits.begin(), fits.end(),
                     [](const FitResult& a, const FitResult& b) { return a.sse < b.sse; });
    return fits;
}

/// I.i.d. draws by numerical inverse-CDF: cumulative quadrature on a log
/// grid, monotone cubic interpolation of log v against the CDF. Deterministic
/// given the seed.
inline std::vector<double> sample(const DistParams& p, std::size_t n, std::uint64_t seed) {
    p.validate();
    if (n < 1) throw std::invalid_argument("sample: n must be >= 1");
    const DensityModel model(p);
    const auto density = [&](double v) { return model(v); };

    // Quantile range covering all but ~1e-9 of mass on each side.
    double v_lo = p.theta;
    for (int i = 0; i < 300; ++i) {
        const double head = detail::integrate_adaptive(density, 0.0, v_lo, 1e-8, 1e-14).value;
        if (head <= 1e-9 || v_lo < 1e-250) break;
        v_lo *= 0.1;
    }
    double v_hi = p.theta;
    for (int i = 0; i < 300; ++i) {
        const double tail =
            detail::integrate_to_infinity(density, v_hi, p.theta, 1e-8, 1e-14).value;
        if (tail <= 1e-9 || v_hi > 1e250) break;
        v_hi *= 10.0;
    }

    const double decades = std::log10(v_hi / v_lo);
    const std::size_t segments =
        std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(decades * 64.0)), 16, 6144);
    std::vector<double> grid(segments + 1), cum(segments + 1);
    for (std::size_t j = 0; j <= segments; ++j)
        grid[j] = v_lo * std::pow(v_hi / v_lo, static_cast<double>(j) / static_cast<double>(segments));
    cum[0] = detail::integrate_adaptive(density, 0.0, v_lo, 1e-10, 1e-16).value;
    for (std::size_t j = 0; j < segments; ++j)
        cum[j + 1] = cum[j] + detail::gk15(density, grid[j], grid[j + 1]).first;
    const double total =
        cum[segments] + detail::integrate_to_infinity(density, v_hi, p.theta, 1e-10, 1e-16).value;
    if (!(total > 0.0)) throw std::runtime_error("sample: zero probability mass");

    std::vector<double> us, logvs;
    us.reserve(cum.size());
    logvs.reserve(cum.size());
    for (std::size_t j = 0; j < cum.size(); ++j) {
        const double u = cum[j] / total;
        if (!us.empty() && !(u > us.back() + 1e-16)) continue;
        us.push_back(u);
        logvs.push_back(std::log(grid[j]));
    }
    if (us.size() < 2) throw std::runtime_error("sample: degenerate quantile grid");
    const detail::Pchip quantile(std::move(us), std::move(logvs));

    detail::Rng rng(seed);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(quantile(rng.uniform_open()));
    return out;
}

} // namespace oca
