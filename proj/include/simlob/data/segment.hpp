#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "simlob/lob/snapshot.hpp"

namespace simlob::data {

inline constexpr std::size_t kFeatures = lob::kDefaultDepth * lob::kFieldsPerLevel;  // 40
inline constexpr std::size_t kDefaultTau = 100;

// Columns follow p_b, v_b, p_a, v_a per level, so even columns are prices.
constexpr bool is_price_column(std::size_t col) { return col % 2 == 0; }

struct SegmentSource {
    std::size_t tuple_id = 0;
    std::size_t offset = 0;  // index of the first snapshot in the source series
};

// tau x 40 row-major matrix of one window.
struct Segment {
    std::size_t tau = 0;
    std::vector<double> values;
    SegmentSource source;

    double at(std::size_t t, std::size_t col) const { return values[t * kFeatures + col]; }
    double& at(std::size_t t, std::size_t col) { return values[t * kFeatures + col]; }
};

// Consecutive windows of `tau` snapshots starting every `stride` steps
// (stride 0 means stride = tau). A trailing partial window is dropped.
std::vector<Segment> segment_series(std::span<const lob::LobSnapshot> snaps, std::size_t tau = kDefaultTau,
                                    std::size_t stride = 0, std::size_t tuple_id = 0);

Segment make_segment(std::span<const lob::LobSnapshot> window, SegmentSource source = {});

// CRC-32 of the segment's values as little-endian IEEE doubles.
std::uint32_t segment_checksum(const Segment& seg);

} // namespace simlob::data
