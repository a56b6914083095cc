#pragma once

#include <cstdint>

namespace simlob::lob {

using Price = std::int64_t;   // integer ticks
using Volume = std::int64_t;  // shares
using OrderId = std::uint64_t;
using AgentId = std::uint32_t;
using Step = std::int64_t;

enum class Side : std::uint8_t { bid, ask };

constexpr Side opposite(Side s) { return s == Side::bid ? Side::ask : Side::bid; }

constexpr const char* to_string(Side s) { return s == Side::bid ? "bid" : "ask"; }

struct Order {
    OrderId id = 0;
    Side side = Side::bid;
    Price price = 0;
    Volume volume = 0;
    std::uint64_t arrival_seq = 0;
    AgentId owner = 0;
};

struct Trade {
    Price price = 0;
    Volume volume = 0;
    OrderId maker_id = 0;
    OrderId taker_id = 0;
    Step time = 0;

    friend bool operator==(const Trade&, const Trade&) = default;
};

} // namespace simlob::lob
