#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace oca {

using Ticks = std::int64_t;   // 1 tick = 0.01 currency units
using Shares = std::int64_t;
using Date = std::int32_t;    // packed YYYYMMDD

enum class Side : std::uint8_t { Buy, Sell };
enum class Action : std::uint8_t { Submit, Cancel };

inline const char* to_string(Side s) { return s == Side::Buy ? "Buy" : "Sell"; }
inline const char* to_string(Action a) { return a == Action::Submit ? "Submit" : "Cancel"; }

struct Fraction {
    std::int64_t num = 1;
    std::int64_t den = 10;
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

/// One submitted or canceled order in the opening call. Times are in
/// centiseconds since midnight; a Cancel names the Submit it removes via
/// order_ref.
struct OrderEvent {
    std::string stock_id;
    Date date = 0;
    std::int64_t time_cs = 0;
    Action action = Action::Submit;
    std::int64_t order_ref = 0;
    Side side = Side::Buy;
    Ticks price = 0;
    Shares size = 0;

    bool operator==(const OrderEvent&) const = default;
};

/// Per-(stock, day) pricing context: previous close, tick size and the
/// daily price-limit band.
struct DayContext {
    Ticks prev_close = 0;
    Ticks tick = 1;
    Fraction limit_fraction{1, 10};

    // Band bounds in ticks, rounded half-up.
    Ticks lower_limit() const {
        const std::int64_t a = prev_close * (limit_fraction.den - limit_fraction.num);
        return (2 * a + limit_fraction.den) / (2 * limit_fraction.den);
    }
    Ticks upper_limit() const {
        const std::int64_t a = prev_close * (limit_fraction.den + limit_fraction.num);
        return (2 * a + limit_fraction.den) / (2 * limit_fraction.den);
    }
    bool in_band(Ticks price) const { return price >= lower_limit() && price <= upper_limit(); }
};

/// Signed distance of an order price from the previous close, relative to the
/// previous close. Positive values mean the trader priced aggressively
/// (above the close for buys, below it for sells).
inline double relative_price(const OrderEvent& e, const DayContext& ctx) {
    if (e.action != Action::Submit)
        throw std::invalid_argument("relative_price: event is not a Submit");
    if (ctx.prev_close <= 0)
        throw std::invalid_argument("relative_price: prev_close must be positive");
    const double pc = static_cast<double>(ctx.prev_close);
    const double p = static_cast<double>(e.price);
    return e.side == Side::Buy ? (p - pc) / pc : (pc - p) / pc;
}

struct FlowStats {
    std::int64_t sell_count = 0;       // N_s
    std::int64_t buy_count = 0;        // N_b
    double count_ratio = 0.0;          // R_N = N_s / N_b
    double mean_size_sell = 0.0;
    double mean_size_buy = 0.0;
    double size_ratio = 0.0;           // R_s
    std::int64_t cancel_count = 0;     // N_c
    std::int64_t mean_daily_orders = 0;
};

/// Descriptive statistics of one stock's order flow. Submits are counted per
/// side regardless of later cancellation; cancels are reported separately.
inline FlowStats flow_stats(std::span<const OrderEvent> events, std::int64_t days) {
    if (days < 1)
        throw std::invalid_argument("flow_stats: days must be >= 1");
    FlowStats s;
    Shares sell_size = 0, buy_size = 0;
    const std::string* stock = events.empty() ? nullptr : &events.front().stock_id;
    for (const auto& e : events) {
        if (e.stock_id != *stock)
            throw std::invalid_argument("flow_stats: events span multiple stocks");
        if (e.action == Action::Cancel) {
            ++s.cancel_count;
            continue;
        }
        if (e.side == Side::Sell) {
            ++s.sell_count;
            sell_size += e.size;
        } else {
            ++s.buy_count;
            buy_size += e.size;
        }
    }
    if (s.buy_count == 0)
        throw std::domain_error("flow_stats: no buy orders, count ratio undefined");
    s.count_ratio = static_cast<double>(s.sell_count) / static_cast<double>(s.buy_count);
    s.mean_size_buy = static_cast<double>(buy_size) / static_cast<double>(s.buy_count);
    s.mean_size_sell =
        s.sell_count > 0 ? static_cast<double>(sell_size) / static_cast<double>(s.sell_count) : 0.0;
    s.size_ratio = s.mean_size_buy > 0.0 ? s.mean_size_sell / s.mean_size_buy : 0.0;
    s.mean_daily_orders = std::llround(
        static_cast<double>(s.sell_count + s.buy_count) / static_cast<double>(days));
    return s;
}

/// Exact occurrence counts of Submit sizes within [lo, hi]. Only occupied
/// sizes are stored; absent sizes count zero.
struct SizeHistogram {
    Shares lo = 1;
    Shares hi = 0;
    std::map<Shares, std::int64_t> counts;

    bool empty() const { return counts.empty(); }
    std::int64_t total() const {
        std::int64_t t = 0;
        for (const auto& [sz, c] : counts) t += c;
        return t;
    }
    std::int64_t count_at(Shares s) const {
        const auto it = counts.find(s);
        return it == counts.end() ? 0 : it->second;
    }
};

inline SizeHistogram size_histogram(std::span<const OrderEvent> events, Shares lo, Shares hi) {
    if (lo < 1)
        throw std::invalid_argument("size_histogram: range lower bound must be >= 1");
    if (hi < lo)
        throw std::invalid_argument("size_histogram: empty range");
    SizeHistogram h;
    h.lo = lo;
    h.hi = hi;
    for (const auto& e : events) {
        if (e.action != Action::Submit) continue;
        if (e.size < lo || e.size > hi) continue;
        ++h.counts[e.size];
    }
    return h;
}

struct SpikeEntry {
    int c = 0;
    Shares size = 0;
    std::int64_t count = 0;
    std::optional<double> ratio;   // count vs. mean of nearby non-multiple sizes
    bool spike = false;
};

struct SpikeReport {
    int k = 0;
    double threshold = 2.0;
    std::vector<SpikeEntry> entries;

    bool any_spike() const {
        return std::any_of(entries.begin(), entries.end(),
                           [](const SpikeEntry& e) { return e.spike; });
    }
};

/// Round-size preference detector: for each c in 1..10 compares the count at
/// s = c*10^k against the mean count over the 2m nearest sizes that are not
/// multiples of 10^k.
inline SpikeReport clustering_spikes(const SizeHistogram& h, int k, int neighbors_per_side = 5,
                                     double threshold = 2.0) {
    if (h.empty())
        throw std::invalid_argument("clustering_spikes: histogram is empty");
    if (k < 1 || k > 17)
        throw std::invalid_argument("clustering_spikes: k out of range");
    Shares base = 1;
    for (int i = 0; i < k; ++i) base *= 10;

    SpikeReport report;
    report.k = k;
    report.threshold = threshold;
    for (int c = 1; c <= 10; ++c) {
        SpikeEntry entry;
        entry.c = c;
        entry.size = static_cast<Shares>(c) * base;
        if (entry.size < h.lo || entry.size > h.hi) {
            report.entries.push_back(entry);
            continue;
        }
        entry.count = h.count_at(entry.size);

        std::int64_t neighbor_sum = 0;
        int collected = 0;
        const int want = 2 * neighbors_per_side;
        for (Shares step = 1; collected < want; ++step) {
            const Shares below = entry.size - step;
            const Shares above = entry.size + step;
            const bool below_ok = below >= h.lo && below % base != 0;
            const bool above_ok = above <= h.hi && above % base != 0;
            if (below < h.lo && above > h.hi) break;
            if (below_ok && collected < want) {
                neighbor_sum += h.count_at(below);
                ++collected;
            }
            if (above_ok && collected < want) {
                neighbor_sum += h.count_at(above);
                ++collected;
            }
        }
        if (collected > 0) {
            const double mean =
                static_cast<double>(neighbor_sum) / static_cast<double>(collected);
            if (mean > 0.0)
                entry.ratio = static_cast<double>(entry.count) / mean;
            else if (entry.count > 0)
                entry.ratio = std::numeric_limits<double>::infinity();
        }
        entry.spike = entry.ratio.has_value() && *entry.ratio > threshold;
        report.entries.push_back(entry);
    }
    return report;
}

/// Submit sizes divided by their mean, in event order. The output has sample
/// mean 1 by construction.
inline std::vector<double> normalize_sizes(std::span<const OrderEvent> events) {
    Shares total = 0;
    std::int64_t n = 0;
    for (const auto& e : events) {
        if (e.action != Action::Submit) continue;
        total += e.size;
        ++n;
    }
    if (n == 0)
        throw std::invalid_argument("normalize_sizes: no Submit events");
    const double mean = static_cast<double>(total) / static_cast<double>(n);
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(n));
    for (const auto& e : events)
        if (e.action == Action::Submit)
            out.push_back(static_cast<double>(e.size) / mean);
    return out;
}

} // namespace oca
