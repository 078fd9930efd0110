#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "oca/orderflow.hpp"

namespace oca {

struct EffectiveOrder {
    std::int64_t order_ref = 0;
    Side side = Side::Buy;
    Ticks price = 0;
    Shares remaining = 0;
    std::int64_t time_cs = 0;
};

/// One (stock, day) batch after cancels have been applied and out-of-band
/// submits rejected.
struct AuctionBatch {
    std::string stock_id;
    Date date = 0;
    DayContext ctx;
    std::vector<EffectiveOrder> orders;
    std::int64_t rejected_count = 0;
    Shares rejected_volume = 0;
    Shares canceled_volume = 0;
    std::vector<std::string> warnings;
};

/// Applies cancels and the price-limit band to a time-sorted event stream.
/// Cancels that reference an unknown (or already canceled / rejected) order
/// are skipped with a warning; a cancel zeroes the full remaining size.
inline AuctionBatch build_batch(std::span<const OrderEvent> events, const DayContext& ctx) {
    AuctionBatch batch;
    batch.ctx = ctx;
    if (!events.empty()) {
        batch.stock_id = events.front().stock_id;
        batch.date = events.front().date;
    }
    std::int64_t prev_time = std::numeric_limits<std::int64_t>::min();
    std::unordered_map<std::int64_t, std::size_t> by_ref;
    for (const auto& e : events) {
        if (e.time_cs < prev_time)
            throw std::invalid_argument("build_batch: events not sorted by time");
        prev_time = e.time_cs;
        if (e.action == Action::Submit) {
            if (!ctx.in_band(e.price)) {
                ++batch.rejected_count;
                batch.rejected_volume += e.size;
                continue;
            }
            by_ref[e.order_ref] = batch.orders.size();
            batch.orders.push_back({e.order_ref, e.side, e.price, e.size, e.time_cs});
        } else {
            const auto it = by_ref.find(e.order_ref);
            if (it == by_ref.end() || batch.orders[it->second].remaining == 0) {
                batch.warnings.push_back("cancel of unknown order #" +
                                         std::to_string(e.order_ref) + " skipped");
                continue;
            }
            batch.canceled_volume += batch.orders[it->second].remaining;
            batch.orders[it->second].remaining = 0;
        }
    }
    std::erase_if(batch.orders, [](const EffectiveOrder& o) { return o.remaining == 0; });
    return batch;
}

struct ClearingResult {
    std::optional<Ticks> clearing_price;
    Shares executed_volume = 0;
    std::map<std::int64_t, Shares> fills;   // order_ref -> filled size, only > 0
    Shares imbalance = 0;                   // |demand - supply| at the clearing price
};

/// Single-price batch clearing. The price maximizes executable volume over
/// every tick in the limit band; ties fall to minimum imbalance, then
/// minimum distance from the previous close, then the lower price. Fills are
/// allocated by price priority, then time, then order_ref; the marginal order
/// may be split.
inline ClearingResult clear(const AuctionBatch& batch) {
    ClearingResult result;
    if (batch.orders.empty()) return result;

    std::vector<const EffectiveOrder*> buys, sells;
    for (const auto& o : batch.orders)
        (o.side == Side::Buy ? buys : sells).push_back(&o);
    if (buys.empty() || sells.empty()) return result;

    // Demand is non-increasing in price, supply non-decreasing; prefix sums
    // over price-sorted orders give both curves in O(log) per candidate.
    std::sort(buys.begin(), buys.end(),
              [](const EffectiveOrder* a, const EffectiveOrder* b) { return a->price < b->price; });
    std::sort(sells.begin(), sells.end(),
              [](const EffectiveOrder* a, const EffectiveOrder* b) { return a->price < b->price; });
    std::vector<Ticks> buy_prices, sell_prices;
    std::vector<Shares> buy_suffix(buys.size() + 1, 0), sell_prefix(sells.size() + 1, 0);
    for (const auto* o : buys) buy_prices.push_back(o->price);
    for (const auto* o : sells) sell_prices.push_back(o->price);
    for (std::size_t i = buys.size(); i-- > 0;)
        buy_suffix[i] = buy_suffix[i + 1] + buys[i]->remaining;
    for (std::size_t i = 0; i < sells.size(); ++i)
        sell_prefix[i + 1] = sell_prefix[i] + sells[i]->remaining;

    const auto demand_at = [&](Ticks p) {
        const auto it = std::lower_bound(buy_prices.begin(), buy_prices.end(), p);
        return buy_suffix[static_cast<std::size_t>(it - buy_prices.begin())];
    };
    const auto supply_at = [&](Ticks p) {
        const auto it = std::upper_bound(sell_prices.begin(), sell_prices.end(), p);
        return sell_prefix[static_cast<std::size_t>(it - sell_prices.begin())];
    };

    const Ticks lo = batch.ctx.lower_limit();
    const Ticks hi = batch.ctx.upper_limit();
    const Ticks step = batch.ctx.tick > 0 ? batch.ctx.tick : 1;

    bool found = false;
    Ticks best_price = 0;
    Shares best_volume = 0, best_imbalance = 0;
    for (Ticks p = lo; p <= hi; p += step) {
        const Shares d = demand_at(p);
        const Shares s = supply_at(p);
        const Shares volume = std::min(d, s);
        const Shares imbalance = d > s ? d - s : s - d;
        const Ticks dist = p > batch.ctx.prev_close ? p - batch.ctx.prev_close
                                                    : batch.ctx.prev_close - p;
        const Ticks best_dist = best_price > batch.ctx.prev_close
                                    ? best_price - batch.ctx.prev_close
                                    : batch.ctx.prev_close - best_price;
        if (!found || volume > best_volume ||
            (volume == best_volume &&
             (imbalance < best_imbalance ||
              (imbalance == best_imbalance && dist < best_dist)))) {
            found = true;
            best_price = p;
            best_volume = volume;
            best_imbalance = imbalance;
        }
    }
    if (!found || best_volume == 0) return result;

    result.clearing_price = best_price;
    result.executed_volume = best_volume;
    result.imbalance = best_imbalance;

    const auto allocate = [&](std::vector<const EffectiveOrder*>& side_orders, bool is_buy) {
        std::sort(side_orders.begin(), side_orders.end(),
                  [is_buy](const EffectiveOrder* a, const EffectiveOrder* b) {
                      if (a->price != b->price)
                          return is_buy ? a->price > b->price : a->price < b->price;
                      if (a->time_cs != b->time_cs) return a->time_cs < b->time_cs;
                      return a->order_ref < b->order_ref;
                  });
        Shares left = best_volume;
        for (const auto* o : side_orders) {
            if (left == 0) break;
            if (is_buy ? o->price < best_price : o->price > best_price) break;
            const Shares filled = std::min(left, o->remaining);
            if (filled > 0) result.fills[o->order_ref] = filled;
            left -= filled;
        }
    };
    allocate(buys, true);
    allocate(sells, false);
    return result;
}

/// Price level: distance from the best quote in ticks, plus one. Level 1 is
/// the best bid (ask) itself.
inline std::int64_t price_level(Ticks price, Side side, Ticks best, Ticks tick) {
    if (tick <= 0)
        throw std::invalid_argument("price_level: tick must be positive");
    if (side == Side::Buy) {
        if (price > best)
            throw std::invalid_argument("price_level: buy price above best bid");
        return (best - price) / tick + 1;
    }
    if (price < best)
        throw std::invalid_argument("price_level: sell price below best ask");
    return (price - best) / tick + 1;
}

struct LevelStat {
    Shares volume = 0;
    std::int64_t order_count = 0;
};

/// Residual book after clearing: per-side aggregates keyed by price level.
struct LobSnapshot {
    std::optional<Ticks> best_bid;
    std::optional<Ticks> best_ask;
    Ticks tick = 1;
    std::map<std::int64_t, LevelStat> buy_levels;
    std::map<std::int64_t, LevelStat> sell_levels;
};

/// Places every unfilled remainder at its limit price and keys levels by
/// distance from the post-auction best quotes.
inline LobSnapshot residual_book(const AuctionBatch& batch, const ClearingResult& result) {
    LobSnapshot book;
    book.tick = batch.ctx.tick > 0 ? batch.ctx.tick : 1;

    std::vector<std::pair<const EffectiveOrder*, Shares>> residual;
    for (const auto& o : batch.orders) {
        const auto it = result.fills.find(o.order_ref);
        const Shares filled = it == result.fills.end() ? 0 : it->second;
        if (filled < 0 || filled > o.remaining)
            throw std::invalid_argument("residual_book: result does not match batch");
        const Shares left = o.remaining - filled;
        if (left > 0) residual.emplace_back(&o, left);
    }
    for (const auto& [o, left] : residual) {
        if (o->side == Side::Buy) {
            if (!book.best_bid || o->price > *book.best_bid) book.best_bid = o->price;
        } else {
            if (!book.best_ask || o->price < *book.best_ask) book.best_ask = o->price;
        }
    }
    for (const auto& [o, left] : residual) {
        const Ticks best = o->side == Side::Buy ? *book.best_bid : *book.best_ask;
        const std::int64_t level = price_level(o->price, o->side, best, book.tick);
        auto& stat = (o->side == Side::Buy ? book.buy_levels : book.sell_levels)[level];
        stat.volume += left;
        stat.order_count += 1;
    }
    return book;
}

} // namespace oca
