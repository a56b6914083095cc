#pragma once

#include <list>
#include <map>
#include <optional>
#include <unordered_map>
#include <vector>

#include "simlob/lob/snapshot.hpp"
#include "simlob/lob/types.hpp"

namespace simlob::lob {

// Single-instrument limit order book with price-time priority.
//
// Prices are integer ticks and must be multiples of tick_size. The book is a
// serial state machine: one writer, no internal locking.
class OrderBook {
public:
    struct LimitResult {
        std::vector<Trade> trades;
        OrderId order_id = 0;
        Volume resting = 0;  // volume left on the book after matching
    };

    explicit OrderBook(Price tick_size = 1);

    // Matches against the opposite side best-price-first, oldest-first within a
    // level; the remainder rests. Throws ValidationError on bad price/volume.
    LimitResult submit_limit(Side side, Price price, Volume volume, AgentId owner = 0);

    // Executes against the single best opposite level only. Unfilled volume is
    // discarded; an empty opposite side makes this a no-op.
    std::vector<Trade> submit_market(Side side, Volume volume, AgentId owner = 0);

    // Removes the whole remaining order. False if the id is not resting.
    bool cancel(OrderId id);

    // Missing levels step one tick outward from the last occupied price. An
    // empty side starts one tick beyond the opposite best; when both sides are
    // empty each starts from the last best price its side had (0 for a book
    // that never held an order).
    LobSnapshot snapshot(std::size_t depth = kDefaultDepth) const;

    std::optional<Price> best_bid() const;
    std::optional<Price> best_ask() const;
    // Most recent best prices seen after any operation, empty until a side first fills.
    std::optional<Price> last_best_bid() const { return last_bid_; }
    std::optional<Price> last_best_ask() const { return last_ask_; }

    Volume volume_at(Side side, Price price) const;
    std::size_t level_count(Side side) const;

    // Random access over resting orders. Order of ids is deterministic but
    // unspecified (swap-remove on fill/cancel).
    std::size_t resting_count() const { return live_.size(); }
    OrderId resting_at(std::size_t i) const { return live_.at(i); }
    const Order* find(OrderId id) const;

    Price tick_size() const { return tick_size_; }
    Step time() const { return time_; }
    void set_time(Step t) { time_ = t; }
    std::uint64_t next_seq() const { return next_seq_; }

private:
    using Queue = std::list<Order>;
    struct Locator {
        Side side;
        Price price;
        Queue::iterator it;
        std::size_t live_index;
    };
    struct PriceLevel {
        Queue orders;
        Volume total = 0;
    };
    using BidMap = std::map<Price, PriceLevel, std::greater<Price>>;
    using AskMap = std::map<Price, PriceLevel, std::less<Price>>;

    template <class Map>
    Volume fill_level(Map& book, typename Map::iterator level, Volume want, OrderId taker,
                      std::vector<Trade>& trades);
    void rest(const Order& order);
    void forget(OrderId id);
    OrderId allocate_id() { return next_id_++; }
    void remember_bests();

    Price tick_size_;
    BidMap bids_;
    AskMap asks_;
    std::unordered_map<OrderId, Locator> index_;
    std::vector<OrderId> live_;
    OrderId next_id_ = 1;
    std::uint64_t next_seq_ = 0;
    Step time_ = 0;
    std::optional<Price> last_bid_;
    std::optional<Price> last_ask_;
};

} // namespace simlob::lob
