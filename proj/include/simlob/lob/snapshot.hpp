#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "simlob/error.hpp"
#include "simlob/lob/types.hpp"

namespace simlob::lob {

class EmptySideError : public ContractError {
public:
    using ContractError::ContractError;
};

inline constexpr std::size_t kDefaultDepth = 10;
inline constexpr std::size_t kFieldsPerLevel = 4;

// One level of the aggregated book. A side is unoccupied at this level when its
// volume is zero; its price is then a padding value (see OrderBook::snapshot).
struct Level {
    Price bid_price = 0;
    Volume bid_volume = 0;
    Price ask_price = 0;
    Volume ask_volume = 0;

    bool bid_occupied() const { return bid_volume > 0; }
    bool ask_occupied() const { return ask_volume > 0; }

    friend bool operator==(const Level&, const Level&) = default;
};

struct LobSnapshot {
    Step time = 0;
    std::vector<Level> levels;

    std::size_t depth() const { return levels.size(); }

    // Row of depth*4 values in column order p_b, v_b, p_a, v_a per level.
    std::vector<double> flatten() const;

    friend bool operator==(const LobSnapshot&, const LobSnapshot&) = default;
};

// (p_a_1 + p_b_1) / 2. Throws EmptySideError if either best level is unoccupied.
double mid_price(const LobSnapshot& snap);

// Occupied ask prices strictly increase, occupied bid prices strictly decrease,
// every occupied ask is above every occupied bid, and occupied volumes are positive.
bool satisfies_precedence(const LobSnapshot& snap);

// Mid-price per snapshot; degenerate snapshots take the previous valid mid
// (leading degenerate ones take the first valid mid). Throws if none is valid.
std::vector<double> mid_price_series(std::span<const LobSnapshot> snaps);

} // namespace simlob::lob
