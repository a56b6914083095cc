#pragma once

#include <span>

#include "simlob/data/segment.hpp"

namespace simlob::data {

// Two global affine maps: one shared by every price column, one by every
// volume column. A shared monotone map keeps level ordering intact.
struct NormStats {
    double price_center = 0.0;
    double price_scale = 1.0;
    double volume_center = 0.0;
    double volume_scale = 1.0;

    friend bool operator==(const NormStats&, const NormStats&) = default;
};

// Mean and standard deviation of all price entries and of all volume entries.
// A zero-variance class gets scale 1 and a logged warning.
NormStats fit_normalizer(std::span<const Segment> training);

Segment apply_normalizer(const Segment& seg, const NormStats& stats);
Segment invert_normalizer(const Segment& seg, const NormStats& stats);

inline double normalize_price(double p, const NormStats& s) { return (p - s.price_center) / s.price_scale; }

} // namespace simlob::data
