#include "simlob/lob/order_book.hpp"

#include <string>

#include "simlob/error.hpp"

namespace simlob::lob {

OrderBook::OrderBook(Price tick_size) : tick_size_(tick_size) {
    if (tick_size <= 0) throw ValidationError("tick_size must be positive");
}

OrderBook::LimitResult OrderBook::submit_limit(Side side, Price price, Volume volume,
                                               AgentId owner) {
    if (price <= 0) throw ValidationError("limit price must be positive, got " + std::to_string(price));
    if (volume <= 0) throw ValidationError("limit volume must be positive, got " + std::to_string(volume));
    if (price % tick_size_ != 0) {
        throw ValidationError("limit price " + std::to_string(price) + " is not a multiple of tick size " +
                              std::to_string(tick_size_));
    }

    LimitResult result;
    result.order_id = allocate_id();
    const std::uint64_t seq = next_seq_++;
    Volume remaining = volume;

    if (side == Side::bid) {
        while (remaining > 0 && !asks_.empty() && asks_.begin()->first <= price) {
            remaining -= fill_level(asks_, asks_.begin(), remaining, result.order_id, result.trades);
        }
    } else {
        while (remaining > 0 && !bids_.empty() && bids_.begin()->first >= price) {
            remaining -= fill_level(bids_, bids_.begin(), remaining, result.order_id, result.trades);
        }
    }

    if (remaining > 0) {
        rest(Order{result.order_id, side, price, remaining, seq, owner});
    }
    result.resting = remaining;
    remember_bests();
    return result;
}

std::vector<Trade> OrderBook::submit_market(Side side, Volume volume, AgentId /*owner*/) {
    if (volume <= 0) throw ValidationError("market volume must be positive, got " + std::to_string(volume));
    std::vector<Trade> trades;
    const OrderId id = allocate_id();
    ++next_seq_;
    if (side == Side::bid) {
        if (!asks_.empty()) fill_level(asks_, asks_.begin(), volume, id, trades);
    } else {
        if (!bids_.empty()) fill_level(bids_, bids_.begin(), volume, id, trades);
    }
    remember_bests();
    return trades;
}

template <class Map>
Volume OrderBook::fill_level(Map& book, typename Map::iterator level, Volume want, OrderId taker,
                             std::vector<Trade>& trades) {
    Volume filled = 0;
    PriceLevel& pl = level->second;
    while (filled < want && !pl.orders.empty()) {
        Order& maker = pl.orders.front();
        const Volume qty = std::min(maker.volume, want - filled);
        trades.push_back(Trade{level->first, qty, maker.id, taker, time_});
        maker.volume -= qty;
        pl.total -= qty;
        filled += qty;
        if (maker.volume == 0) {
            forget(maker.id);
            pl.orders.pop_front();
        }
    }
    if (pl.orders.empty()) book.erase(level);
    return filled;
}

void OrderBook::rest(const Order& order) {
    auto place = [&](auto& book) {
        PriceLevel& pl = book[order.price];
        pl.orders.push_back(order);
        pl.total += order.volume;
        index_.emplace(order.id, Locator{order.side, order.price, std::prev(pl.orders.end()), live_.size()});
        live_.push_back(order.id);
    };
    if (order.side == Side::bid) {
        place(bids_);
    } else {
        place(asks_);
    }
}

void OrderBook::remember_bests() {
    if (!bids_.empty()) last_bid_ = bids_.begin()->first;
    if (!asks_.empty()) last_ask_ = asks_.begin()->first;
}

void OrderBook::forget(OrderId id) {
    auto it = index_.find(id);
    const std::size_t slot = it->second.live_index;
    const OrderId moved = live_.back();
    live_[slot] = moved;
    live_.pop_back();
    if (moved != id) index_.at(moved).live_index = slot;
    index_.erase(it);
}

bool OrderBook::cancel(OrderId id) {
    auto it = index_.find(id);
    if (it == index_.end()) return false;
    const Locator loc = it->second;
    auto drop = [&](auto& book) {
        auto level = book.find(loc.price);
        level->second.total -= loc.it->volume;
        level->second.orders.erase(loc.it);
        if (level->second.orders.empty()) book.erase(level);
    };
    if (loc.side == Side::bid) {
        drop(bids_);
    } else {
        drop(asks_);
    }
    forget(id);
    remember_bests();
    return true;
}

LobSnapshot OrderBook::snapshot(std::size_t depth) const {
    LobSnapshot snap;
    snap.time = time_;
    snap.levels.resize(depth);
    if (depth == 0) return snap;

    // Where padding starts on a side with no orders at all.
    Price bid_start = 0, ask_start = 0;
    if (bids_.empty() && asks_.empty()) {
        if (last_bid_) bid_start = *last_bid_;
        else if (last_ask_) bid_start = *last_ask_ - tick_size_;
        if (last_ask_) ask_start = *last_ask_;
        else if (last_bid_) ask_start = *last_bid_ + tick_size_;
        if ((last_bid_ || last_ask_) && ask_start <= bid_start) ask_start = bid_start + tick_size_;
    } else {
        if (!asks_.empty()) bid_start = asks_.begin()->first - tick_size_;
        if (!bids_.empty()) ask_start = bids_.begin()->first + tick_size_;
    }
    const bool never_filled = !last_bid_ && !last_ask_;

    std::size_t i = 0;
    for (auto it = bids_.begin(); it != bids_.end() && i < depth; ++it, ++i) {
        snap.levels[i].bid_price = it->first;
        snap.levels[i].bid_volume = it->second.total;
    }
    Price next = i > 0 ? snap.levels[i - 1].bid_price - tick_size_ : bid_start;
    for (; i < depth; ++i) {
        snap.levels[i].bid_price = never_filled ? 0 : next;
        next -= tick_size_;
    }

    i = 0;
    for (auto it = asks_.begin(); it != asks_.end() && i < depth; ++it, ++i) {
        snap.levels[i].ask_price = it->first;
        snap.levels[i].ask_volume = it->second.total;
    }
    next = i > 0 ? snap.levels[i - 1].ask_price + tick_size_ : ask_start;
    for (; i < depth; ++i) {
        snap.levels[i].ask_price = never_filled ? 0 : next;
        next += tick_size_;
    }
    return snap;
}

std::optional<Price> OrderBook::best_bid() const {
    if (bids_.empty()) return std::nullopt;
    return bids_.begin()->first;
}

std::optional<Price> OrderBook::best_ask() const {
    if (asks_.empty()) return std::nullopt;
    return asks_.begin()->first;
}

Volume OrderBook::volume_at(Side side, Price price) const {
    if (side == Side::bid) {
        auto it = bids_.find(price);
        return it == bids_.end() ? 0 : it->second.total;
    }
    auto it = asks_.find(price);
    return it == asks_.end() ? 0 : it->second.total;
}

std::size_t OrderBook::level_count(Side side) const {
    return side == Side::bid ? bids_.size() : asks_.size();
}

const Order* OrderBook::find(OrderId id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return nullptr;
    return &*it->second.it;
}

} // namespace simlob::lob
