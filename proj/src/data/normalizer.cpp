#include "simlob/data/normalizer.hpp"

#include <cmath>

#include <spdlog/spdlog.h>

#include "simlob/error.hpp"

namespace simlob::data {

NormStats fit_normalizer(std::span<const Segment> training) {
    if (training.empty()) throw ContractError("fit_normalizer: empty training set");
    double sum[2] = {0.0, 0.0};
    double count[2] = {0.0, 0.0};
    for (const Segment& s : training) {
        for (std::size_t i = 0; i < s.values.size(); ++i) {
            const int cls = is_price_column(i % kFeatures) ? 0 : 1;
            sum[cls] += s.values[i];
            count[cls] += 1.0;
        }
    }
    const double mean[2] = {sum[0] / count[0], sum[1] / count[1]};
    double sq[2] = {0.0, 0.0};
    for (const Segment& s : training) {
        for (std::size_t i = 0; i < s.values.size(); ++i) {
            const int cls = is_price_column(i % kFeatures) ? 0 : 1;
            const double d = s.values[i] - mean[cls];
            sq[cls] += d * d;
        }
    }
    double scale[2];
    for (int c = 0; c < 2; ++c) {
        scale[c] = std::sqrt(sq[c] / count[c]);
        if (!(scale[c] > 0.0) || !std::isfinite(scale[c])) {
            spdlog::warn("fit_normalizer: zero variance in {} columns, using scale 1", c == 0 ? "price" : "volume");
            scale[c] = 1.0;
        }
    }
    return NormStats{mean[0], scale[0], mean[1], scale[1]};
}

Segment apply_normalizer(const Segment& seg, const NormStats& st) {
    Segment out = seg;
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        if (is_price_column(i % kFeatures)) {
            out.values[i] = (out.values[i] - st.price_center) / st.price_scale;
        } else {
            out.values[i] = (out.values[i] - st.volume_center) / st.volume_scale;
        }
    }
    return out;
}

Segment invert_normalizer(const Segment& seg, const NormStats& st) {
    Segment out = seg;
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        if (is_price_column(i % kFeatures)) {
            out.values[i] = out.values[i] * st.price_scale + st.price_center;
        } else {
            out.values[i] = out.values[i] * st.volume_scale + st.volume_center;
        }
    }
    return out;
}

} // namespace simlob::data
