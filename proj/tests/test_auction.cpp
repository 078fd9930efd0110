#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "oca/auction.hpp"

using namespace oca;

namespace {

OrderEvent make_event(Action action, Side side, Ticks price, Shares size, std::int64_t ref,
                      std::int64_t time_cs) {
    OrderEvent e;
    e.stock_id = "000001";
    e.date = 20030102;
    e.time_cs = time_cs;
    e.action = action;
    e.order_ref = ref;
    e.side = side;
    e.price = price;
    e.size = size;
    return e;
}

// Independent reference: scan every tick in the band, recomputing demand and
// supply from scratch, and apply the documented tie-break chain literally.
struct OraclePick {
    bool found = false;
    Ticks price = 0;
    Shares volume = 0;
    Shares imbalance = 0;
};

OraclePick oracle_clear(const AuctionBatch& batch) {
    OraclePick best;
    for (Ticks p = batch.ctx.lower_limit(); p <= batch.ctx.upper_limit(); p += batch.ctx.tick) {
        Shares demand = 0, supply = 0;
        for (const auto& o : batch.orders) {
            if (o.side == Side::Buy && o.price >= p) demand += o.remaining;
            if (o.side == Side::Sell && o.price <= p) supply += o.remaining;
        }
        const Shares volume = std::min(demand, supply);
        const Shares imbalance = std::llabs(demand - supply);
        bool better = false;
        if (!best.found) {
            better = true;
        } else if (volume != best.volume) {
            better = volume > best.volume;
        } else if (imbalance != best.imbalance) {
            better = imbalance < best.imbalance;
        } else {
            const Ticks da = std::llabs(p - batch.ctx.prev_close);
            const Ticks db = std::llabs(best.price - batch.ctx.prev_close);
            if (da != db) better = da < db;
            // equal distance, lower price: ascending scan already kept the lower one
        }
        if (better) {
            best.found = true;
            best.price = p;
            best.volume = volume;
            best.imbalance = imbalance;
        }
    }
    if (best.volume == 0) best.found = false;
    return best;
}

AuctionBatch random_batch(std::mt19937_64& rng, int max_orders = 20) {
    DayContext ctx;
    ctx.prev_close = 900 + static_cast<Ticks>(rng() % 200);
    const int n = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(max_orders));
    std::vector<OrderEvent> events;
    for (int i = 0; i < n; ++i) {
        const Side side = rng() % 2 ? Side::Buy : Side::Sell;
        const Ticks lo = ctx.lower_limit();
        const Ticks hi = ctx.upper_limit();
        const Ticks price = lo + static_cast<Ticks>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
        const Shares size = 100 * (1 + static_cast<Shares>(rng() % 5));
        // deliberately collide times to exercise the order_ref tie-break
        const std::int64_t time = 3330000 + static_cast<std::int64_t>(rng() % 50);
        events.push_back(make_event(Action::Submit, side, price, size, i + 1, time));
    }
    std::sort(events.begin(), events.end(),
              [](const OrderEvent& a, const OrderEvent& b) { return a.time_cs < b.time_cs; });
    return build_batch(events, ctx);
}

} // namespace

TEST(BuildBatch, CancelRemovesOrder) {
    DayContext ctx{1000};
    std::vector<OrderEvent> events{
        make_event(Action::Submit, Side::Buy, 1000, 100, 1, 3330000),
        make_event(Action::Cancel, Side::Buy, 1000, 100, 1, 3330100),
    };
    const auto batch = build_batch(events, ctx);
    EXPECT_TRUE(batch.orders.empty());
    EXPECT_EQ(batch.canceled_volume, 100);
}

TEST(BuildBatch, KeepsSubmits) {
    DayContext ctx{1000};
    std::vector<OrderEvent> events{
        make_event(Action::Submit, Side::Buy, 1000, 100, 1, 3330000),
        make_event(Action::Submit, Side::Sell, 1010, 200, 2, 3330100),
    };
    const auto batch = build_batch(events, ctx);
    EXPECT_EQ(batch.orders.size(), 2u);
    EXPECT_EQ(batch.rejected_count, 0);
}

TEST(BuildBatch, RejectsOutOfBandSubmit) {
    DayContext ctx{1000};
    std::vector<OrderEvent> events{
        make_event(Action::Submit, Side::Buy, 1101, 100, 1, 3330000),
    };
    const auto batch = build_batch(events, ctx);
    EXPECT_TRUE(batch.orders.empty());
    EXPECT_EQ(batch.rejected_count, 1);
    EXPECT_EQ(batch.rejected_volume, 100);
}

TEST(BuildBatch, UnknownCancelIsWarned) {
    DayContext ctx{1000};
    std::vector<OrderEvent> events{
        make_event(Action::Cancel, Side::Buy, 1000, 100, 77, 3330000),
    };
    const auto batch = build_batch(events, ctx);
    EXPECT_TRUE(batch.orders.empty());
    ASSERT_EQ(batch.warnings.size(), 1u);
}

TEST(BuildBatch, UnsortedEventsRejected) {
    DayContext ctx{1000};
    std::vector<OrderEvent> events{
        make_event(Action::Submit, Side::Buy, 1000, 100, 1, 3330100),
        make_event(Action::Submit, Side::Buy, 1000, 100, 2, 3330000),
    };
    EXPECT_THROW(build_batch(events, ctx), std::invalid_argument);
}

// Every price in [990, 1000] clears the full 100 shares with zero imbalance;
// the previous close of 995 decides. Frozen from the exhaustive scan.
TEST(Clear, TieBrokenByDistanceFromPrevClose) {
    DayContext ctx{995};
    std::vector<OrderEvent> events{
        make_event(Action::Submit, Side::Buy, 1000, 100, 1, 3330000),
        make_event(Action::Submit, Side::Sell, 990, 100, 2, 3330100),
    };
    const auto batch = build_batch(events, ctx);
    const auto result = clear(batch);
    ASSERT_TRUE(result.clearing_price.has_value());
    EXPECT_EQ(*result.clearing_price, 995);
    EXPECT_EQ(result.executed_volume, 100);
    EXPECT_EQ(result.imbalance, 0);
    EXPECT_EQ(result.fills.at(1), 100);
    EXPECT_EQ(result.fills.at(2), 100);
}

TEST(Clear, NoCrossMeansNoPrice) {
    DayContext ctx{995};
    std::vector<OrderEvent> events{
        make_event(Action::Submit, Side::Buy, 990, 100, 1, 3330000),
        make_event(Action::Submit, Side::Sell, 1000, 100, 2, 3330100),
    };
    const auto batch = build_batch(events, ctx);
    const auto result = clear(batch);
    EXPECT_FALSE(result.clearing_price.has_value());
    EXPECT_EQ(result.executed_volume, 0);
    EXPECT_TRUE(result.fills.empty());
}

TEST(Clear, EmptyBatch) {
    DayContext ctx{1000};
    const auto result = clear(build_batch({}, ctx));
    EXPECT_FALSE(result.clearing_price.has_value());
}

TEST(Clear, TimePriorityAtTheMargin) {
    DayContext ctx{1000};
    std::vector<OrderEvent> events{
        make_event(Action::Submit, Side::Buy, 1000, 100, 1, 3330000),
        make_event(Action::Submit, Side::Buy, 1000, 100, 2, 3330050),
        make_event(Action::Submit, Side::Sell, 1000, 150, 3, 3330100),
    };
    const auto batch = build_batch(events, ctx);
    const auto result = clear(batch);
    ASSERT_TRUE(result.clearing_price.has_value());
    EXPECT_EQ(*result.clearing_price, 1000);
    EXPECT_EQ(result.executed_volume, 150);
    EXPECT_EQ(result.fills.at(1), 100);   // earlier order fills first
    EXPECT_EQ(result.fills.at(2), 50);    // marginal order split
    EXPECT_EQ(result.fills.at(3), 150);
}

TEST(Clear, MatchesExhaustiveOracle) {
    std::mt19937_64 rng(20030102);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto batch = random_batch(rng);
        const auto result = clear(batch);
        const auto expected = oracle_clear(batch);
        ASSERT_EQ(result.clearing_price.has_value(), expected.found) << "trial " << trial;
        if (!expected.found) continue;
        EXPECT_EQ(*result.clearing_price, expected.price) << "trial " << trial;
        EXPECT_EQ(result.executed_volume, expected.volume) << "trial " << trial;
        EXPECT_EQ(result.imbalance, expected.imbalance) << "trial " << trial;

        Shares buy_fill = 0, sell_fill = 0;
        for (const auto& o : batch.orders) {
            const auto it = result.fills.find(o.order_ref);
            if (it == result.fills.end()) continue;
            ASSERT_GE(it->second, 0);
            ASSERT_LE(it->second, o.remaining);
            (o.side == Side::Buy ? buy_fill : sell_fill) += it->second;
        }
        EXPECT_EQ(buy_fill, result.executed_volume);
        EXPECT_EQ(sell_fill, result.executed_volume);
    }
}

TEST(Clear, DeterministicAcrossCalls) {
    std::mt19937_64 rng(5);
    const auto batch = random_batch(rng);
    const auto a = clear(batch);
    const auto b = clear(batch);
    EXPECT_EQ(a.clearing_price, b.clearing_price);
    EXPECT_EQ(a.executed_volume, b.executed_volume);
    EXPECT_EQ(a.fills, b.fills);
    EXPECT_EQ(a.imbalance, b.imbalance);
}

TEST(Clear, AddingBuyAtClearingPriceNeverReducesVolume) {
    std::mt19937_64 rng(99);
    int checked = 0;
    for (int trial = 0; trial < 300 && checked < 100; ++trial) {
        auto batch = random_batch(rng);
        const auto before = clear(batch);
        if (!before.clearing_price) continue;
        ++checked;
        batch.orders.push_back({9999, Side::Buy, *before.clearing_price, 200, 3390000});
        const auto after = clear(batch);
        ASSERT_TRUE(after.clearing_price.has_value());
        EXPECT_GE(after.executed_volume, before.executed_volume);
    }
    EXPECT_GT(checked, 0);
}

TEST(PriceLevel, BestQuoteIsLevelOne) {
    EXPECT_EQ(price_level(1000, Side::Buy, 1000, 1), 1);
    EXPECT_EQ(price_level(1000, Side::Sell, 1000, 1), 1);
}

TEST(PriceLevel, DistanceFromBest) {
    EXPECT_EQ(price_level(995, Side::Buy, 1000, 1), 6);
    EXPECT_EQ(price_level(1007, Side::Sell, 1000, 1), 8);
}

TEST(PriceLevel, WrongSideOfBestIsAnError) {
    EXPECT_THROW(price_level(1001, Side::Buy, 1000, 1), std::invalid_argument);
    EXPECT_THROW(price_level(999, Side::Sell, 1000, 1), std::invalid_argument);
}

TEST(ResidualBook, NoCrossLeavesBothSides) {
    DayContext ctx{995};
    std::vector<OrderEvent> events{
        make_event(Action::Submit, Side::Buy, 990, 100, 1, 3330000),
        make_event(Action::Submit, Side::Sell, 1000, 100, 2, 3330100),
    };
    const auto batch = build_batch(events, ctx);
    const auto book = residual_book(batch, clear(batch));
    ASSERT_TRUE(book.best_bid.has_value());
    ASSERT_TRUE(book.best_ask.has_value());
    EXPECT_EQ(*book.best_bid, 990);
    EXPECT_EQ(*book.best_ask, 1000);
    EXPECT_EQ(book.buy_levels.at(1).volume, 100);
    EXPECT_EQ(book.buy_levels.at(1).order_count, 1);
    EXPECT_EQ(book.sell_levels.at(1).volume, 100);
}

TEST(ResidualBook, FullyCrossedBatchLeavesEmptyBook) {
    DayContext ctx{1000};
    std::vector<OrderEvent> events{
        make_event(Action::Submit, Side::Buy, 1000, 100, 1, 3330000),
        make_event(Action::Submit, Side::Sell, 1000, 100, 2, 3330100),
    };
    const auto batch = build_batch(events, ctx);
    const auto book = residual_book(batch, clear(batch));
    EXPECT_FALSE(book.best_bid.has_value());
    EXPECT_FALSE(book.best_ask.has_value());
    EXPECT_TRUE(book.buy_levels.empty());
    EXPECT_TRUE(book.sell_levels.empty());
}

TEST(ResidualBook, VolumeConservationOnRandomBatches) {
    std::mt19937_64 rng(12345);
    for (int trial = 0; trial < 200; ++trial) {
        const auto batch = random_batch(rng);
        const auto result = clear(batch);
        const auto book = residual_book(batch, result);

        Shares residual_buy = 0, residual_sell = 0;
        for (const auto& [lvl, st] : book.buy_levels) residual_buy += st.volume;
        for (const auto& [lvl, st] : book.sell_levels) residual_sell += st.volume;
        Shares batch_buy = 0, batch_sell = 0;
        for (const auto& o : batch.orders)
            (o.side == Side::Buy ? batch_buy : batch_sell) += o.remaining;
        EXPECT_EQ(residual_buy + result.executed_volume, batch_buy);
        EXPECT_EQ(residual_sell + result.executed_volume, batch_sell);

        if (book.best_bid && book.best_ask) EXPECT_LT(*book.best_bid, *book.best_ask);
        for (const auto& [lvl, st] : book.buy_levels) {
            EXPECT_GE(lvl, 1);
            EXPECT_GT(st.volume, 0);
        }
    }
}
