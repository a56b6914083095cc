#include "simlob/data/segment.hpp"

#include <bit>
#include <cstring>

#include <zlib.h>

#include "simlob/error.hpp"

namespace simlob::data {

Segment make_segment(std::span<const lob::LobSnapshot> window, SegmentSource source) {
    Segment seg;
    seg.tau = window.size();
    seg.source = source;
    seg.values.reserve(window.size() * kFeatures);
    for (const auto& snap : window) {
        if (snap.depth() * lob::kFieldsPerLevel != kFeatures) {
            throw ContractError("segment: snapshots must have depth 10");
        }
        for (const auto& l : snap.levels) {
            seg.values.push_back(static_cast<double>(l.bid_price));
            seg.values.push_back(static_cast<double>(l.bid_volume));
            seg.values.push_back(static_cast<double>(l.ask_price));
            seg.values.push_back(static_cast<double>(l.ask_volume));
        }
    }
    return seg;
}

std::vector<Segment> segment_series(std::span<const lob::LobSnapshot> snaps, std::size_t tau, std::size_t stride,
                                    std::size_t tuple_id) {
    if (tau == 0) throw ContractError("segment_series: tau must be positive");
    if (stride == 0) stride = tau;
    std::vector<Segment> out;
    for (std::size_t start = 0; start + tau <= snaps.size(); start += stride) {
        out.push_back(make_segment(snaps.subspan(start, tau), SegmentSource{tuple_id, start}));
    }
    return out;
}

std::uint32_t segment_checksum(const Segment& seg) {
    uLong crc = crc32(0L, Z_NULL, 0);
    unsigned char buf[8];
    for (double v : seg.values) {
        const auto bits = std::bit_cast<std::uint64_t>(v);
        for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xFF);
        crc = crc32(crc, buf, 8);
    }
    return static_cast<std::uint32_t>(crc);
}

} // namespace simlob::data
