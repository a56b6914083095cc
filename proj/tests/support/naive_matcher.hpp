#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <vector>

#include "simlob/lob/snapshot.hpp"
#include "simlob/lob/types.hpp"

namespace simlob::testing {

// Deliberately simple reference book: one flat vector of resting orders,
// every query is a linear scan.
class NaiveMatcher {
public:
    explicit NaiveMatcher(lob::Price tick) : tick_(tick) {}

    std::vector<lob::Trade> limit(lob::Side side, lob::Price price, lob::Volume volume, lob::OrderId& id_out) {
        const lob::OrderId id = next_id_++;
        id_out = id;
        const std::uint64_t seq = seq_++;
        std::vector<lob::Trade> trades;
        lob::Volume left = volume;
        while (left > 0) {
            const auto maker = best_maker(lob::opposite(side));
            if (!maker) break;
            const lob::Price p = orders_[*maker].price;
            if (side == lob::Side::bid ? p > price : p < price) break;
            left -= take(*maker, left, id, trades);
        }
        if (left > 0) orders_.push_back(lob::Order{id, side, price, left, seq, 0});
        remember();
        return trades;
    }

    std::vector<lob::Trade> market(lob::Side side, lob::Volume volume) {
        const lob::OrderId id = next_id_++;
        ++seq_;
        std::vector<lob::Trade> trades;
        const auto first = best_maker(lob::opposite(side));
        if (first) {
            const lob::Price level = orders_[*first].price;
            lob::Volume left = volume;
            while (left > 0) {
                const auto maker = best_maker(lob::opposite(side));
                if (!maker || orders_[*maker].price != level) break;
                left -= take(*maker, left, id, trades);
            }
        }
        remember();
        return trades;
    }

    bool cancel(lob::OrderId id) {
        for (std::size_t i = 0; i < orders_.size(); ++i) {
            if (orders_[i].id == id) {
                orders_.erase(orders_.begin() + static_cast<std::ptrdiff_t>(i));
                remember();
                return true;
            }
        }
        return false;
    }

    lob::LobSnapshot snapshot(std::size_t depth) const {
        std::map<lob::Price, lob::Volume, std::greater<>> bids;
        std::map<lob::Price, lob::Volume> asks;
        for (const auto& o : orders_) {
            if (o.side == lob::Side::bid) bids[o.price] += o.volume;
            else asks[o.price] += o.volume;
        }
        lob::LobSnapshot s;
        s.levels.resize(depth);
        std::vector<std::pair<lob::Price, lob::Volume>> b(bids.begin(), bids.end()), a(asks.begin(), asks.end());

        lob::Price bid_anchor = 0, ask_anchor = 0;
        if (b.empty() && a.empty()) {
            bid_anchor = last_bid_ ? *last_bid_ : (last_ask_ ? *last_ask_ - tick_ : 0);
            ask_anchor = last_ask_ ? *last_ask_ : (last_bid_ ? *last_bid_ + tick_ : 0);
            if ((last_bid_ || last_ask_) && ask_anchor <= bid_anchor) ask_anchor = bid_anchor + tick_;
        } else {
            if (!a.empty()) bid_anchor = a.front().first - tick_;
            if (!b.empty()) ask_anchor = b.front().first + tick_;
        }
        const bool blank = !last_bid_ && !last_ask_;
        for (std::size_t i = 0; i < depth; ++i) {
            if (i < b.size()) {
                s.levels[i].bid_price = b[i].first;
                s.levels[i].bid_volume = b[i].second;
            } else {
                const lob::Price from = b.empty() ? bid_anchor + tick_ : b.back().first;
                const auto k = static_cast<lob::Price>(i - b.size() + 1);
                s.levels[i].bid_price = blank ? 0 : from - k * tick_;
            }
            if (i < a.size()) {
                s.levels[i].ask_price = a[i].first;
                s.levels[i].ask_volume = a[i].second;
            } else {
                const lob::Price from = a.empty() ? ask_anchor - tick_ : a.back().first;
                const auto k = static_cast<lob::Price>(i - a.size() + 1);
                s.levels[i].ask_price = blank ? 0 : from + k * tick_;
            }
        }
        return s;
    }

    std::size_t resting() const { return orders_.size(); }

private:
    std::optional<std::size_t> best_maker(lob::Side side) const {
        std::optional<std::size_t> best;
        for (std::size_t i = 0; i < orders_.size(); ++i) {
            const auto& o = orders_[i];
            if (o.side != side) continue;
            if (!best) {
                best = i;
                continue;
            }
            const auto& c = orders_[*best];
            const bool better_price = side == lob::Side::bid ? o.price > c.price : o.price < c.price;
            if (better_price || (o.price == c.price && o.arrival_seq < c.arrival_seq)) best = i;
        }
        return best;
    }

    lob::Volume take(std::size_t maker, lob::Volume want, lob::OrderId taker, std::vector<lob::Trade>& trades) {
        auto& o = orders_[maker];
        const lob::Volume q = std::min(o.volume, want);
        trades.push_back(lob::Trade{o.price, q, o.id, taker, 0});
        o.volume -= q;
        if (o.volume == 0) orders_.erase(orders_.begin() + static_cast<std::ptrdiff_t>(maker));
        return q;
    }

    void remember() {
        if (auto b = best_maker(lob::Side::bid)) last_bid_ = orders_[*b].price;
        if (auto a = best_maker(lob::Side::ask)) last_ask_ = orders_[*a].price;
    }

    lob::Price tick_;
    std::vector<lob::Order> orders_;
    lob::OrderId next_id_ = 1;
    std::uint64_t seq_ = 0;
    std::optional<lob::Price> last_bid_, last_ask_;
};

} // namespace simlob::testing
