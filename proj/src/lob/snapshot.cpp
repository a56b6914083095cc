#include "simlob/lob/snapshot.hpp"

#include <optional>
#include <string>

namespace simlob::lob {

std::vector<double> LobSnapshot::flatten() const {
    std::vector<double> row;
    row.reserve(levels.size() * kFieldsPerLevel);
    for (const Level& l : levels) {
        row.push_back(static_cast<double>(l.bid_price));
        row.push_back(static_cast<double>(l.bid_volume));
        row.push_back(static_cast<double>(l.ask_price));
        row.push_back(static_cast<double>(l.ask_volume));
    }
    return row;
}

double mid_price(const LobSnapshot& snap) {
    if (snap.levels.empty() || !snap.levels[0].bid_occupied() || !snap.levels[0].ask_occupied()) {
        throw EmptySideError("mid-price undefined: a best level is empty at t=" + std::to_string(snap.time));
    }
    return 0.5 * static_cast<double>(snap.levels[0].ask_price + snap.levels[0].bid_price);
}

bool satisfies_precedence(const LobSnapshot& snap) {
    std::optional<Price> prev_bid;
    std::optional<Price> prev_ask;
    std::optional<Price> top_bid;
    std::optional<Price> low_ask;
    for (const Level& l : snap.levels) {
        if (l.bid_volume < 0 || l.ask_volume < 0) return false;
        if (l.bid_occupied()) {
            if (prev_bid && !(l.bid_price < *prev_bid)) return false;
            prev_bid = l.bid_price;
            if (!top_bid) top_bid = l.bid_price;
        }
        if (l.ask_occupied()) {
            if (prev_ask && !(l.ask_price > *prev_ask)) return false;
            prev_ask = l.ask_price;
            if (!low_ask) low_ask = l.ask_price;
        }
    }
    return !(top_bid && low_ask && *low_ask <= *top_bid);
}

std::vector<double> mid_price_series(std::span<const LobSnapshot> snaps) {
    std::vector<double> mids(snaps.size());
    std::optional<double> last;
    std::size_t first_valid = snaps.size();
    for (std::size_t t = 0; t < snaps.size(); ++t) {
        const Level* best = snaps[t].levels.empty() ? nullptr : &snaps[t].levels[0];
        if (best && best->bid_occupied() && best->ask_occupied()) {
            last = 0.5 * static_cast<double>(best->ask_price + best->bid_price);
            if (first_valid == snaps.size()) first_valid = t;
        }
        if (last) mids[t] = *last;
    }
    if (first_valid == snaps.size()) {
        if (snaps.empty()) return mids;
        throw EmptySideError("mid-price undefined on every snapshot of the series");
    }
    for (std::size_t t = 0; t < first_valid; ++t) mids[t] = mids[first_valid];
    return mids;
}

} // namespace simlob::lob
