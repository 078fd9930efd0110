#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <stdexcept>
#include <utility>
#include <vector>

namespace oca::detail {

// Gauss-Kronrod 7-15 panel. Nodes/weights for [-1, 1]; rows are
// {abscissa, Gauss weight, Kronrod weight}, Gauss weight 0 on Kronrod-only
// nodes. Nonzero abscissae are used symmetrically.
inline std::pair<double, double> gk15(const auto& f, double a, double b) {
    static constexpr double nw[8][3] = {
        {0.000000000000000, 0.417959183673469, 0.209482141084728},
        {0.405845151377397, 0.381830050505119, 0.190350578064785},
        {0.741531185599394, 0.279705391489277, 0.140653259715525},
        {0.949107912342759, 0.129484966168870, 0.063092092629979},
        {0.207784955007898, 0.0, 0.204432940075298},
        {0.586087235467691, 0.0, 0.169004726639267},
        {0.864864423359769, 0.0, 0.104790010322250},
        {0.991455371120813, 0.0, 0.022935322010529}};
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double f0 = f(mid);
    double g7 = nw[0][1] * f0;
    double k15 = nw[0][2] * f0;
    for (int i = 1; i < 8; ++i) {
        const double dx = half * nw[i][0];
        const double fi = f(mid + dx) + f(mid - dx);
        g7 += nw[i][1] * fi;
        k15 += nw[i][2] * fi;
    }
    g7 *= half;
    k15 *= half;
    // Conservative error estimate; the Kronrod refinement usually does better.
    const double err = std::fabs(k15 - g7);
    return {k15, err};
}

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
    bool converged = false;
};

// Adaptive bisection driven by the largest-error interval first.
template <class F>
QuadResult integrate_adaptive(const F& f, double a, double b, double rel_tol = 1e-10,
                              double abs_tol = 0.0, std::size_t max_intervals = 4000) {
    struct Interval {
        double a, b, value, error;
        bool operator<(const Interval& o) const { return error < o.error; }
    };
    std::priority_queue<Interval> queue;
    auto [v0, e0] = gk15(f, a, b);
    queue.push({a, b, v0, e0});
    double total = v0;
    double total_err = e0;
    std::size_t n = 1;
    while (n < max_intervals) {
        const double goal = std::max(abs_tol, rel_tol * std::fabs(total));
        if (total_err <= goal) break;
        Interval top = queue.top();
        if (!(top.error > 0.0) || !std::isfinite(top.error)) break;
        queue.pop();
        const double mid = 0.5 * (top.a + top.b);
        if (mid <= top.a || mid >= top.b) { // interval at floating resolution
            queue.push({top.a, top.b, top.value, 0.0});
            total_err -= top.error;
            continue;
        }
        auto [vl, el] = gk15(f, top.a, mid);
        auto [vr, er] = gk15(f, mid, top.b);
        total += vl + vr - top.value;
        total_err += el + er - top.error;
        queue.push({top.a, mid, vl, el});
        queue.push({mid, top.b, vr, er});
        ++n;
    }
    QuadResult out;
    out.value = total;
    out.error = total_err;
    out.converged = total_err <= std::max(abs_tol, rel_tol * std::fabs(total)) + 1e-300;
    return out;
}

// Integral of f over [lo, infinity), mapped through v = lo + scale*(e^s - 1)
// with s = u/(1-u). The double-exponential stretch keeps slowly decaying
// power-law tails well behaved near u = 1.
template <class F>
QuadResult integrate_to_infinity(const F& f, double lo, double scale, double rel_tol = 1e-10,
                                 double abs_tol = 0.0) {
    if (!(scale > 0.0)) throw std::invalid_argument("integrate_to_infinity: scale must be > 0");
    auto g = [&](double u) {
        const double om = 1.0 - u;
        if (om <= 0.0) return 0.0;
        const double s = u / om;
        if (s > 690.0) return 0.0; // v beyond double range, mass below underflow
        const double em = std::expm1(s);
        if (em <= 0.0) return 0.0;
        const double v = lo + scale * em;
        const double fv = f(v);
        if (fv == 0.0) return 0.0;
        return fv * scale * (em + 1.0) / (om * om);
    };
    return integrate_adaptive(g, 0.0, 1.0, rel_tol, abs_tol);
}

} // namespace oca::detail
