#include "simlob/analytics/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "simlob/error.hpp"
#include "simlob/parallel.hpp"

namespace simlob::analytics {

Histogram histogram(std::span<const double> values, std::size_t bins) {
    if (values.empty() || bins == 0) throw ValidationError("histogram: empty input or zero bins");
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    double lo = *lo_it, hi = *hi_it;
    if (hi <= lo) {
        lo -= 0.5;
        hi += 0.5;
    }
    Histogram h;
    h.edges.resize(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
    h.counts.assign(bins, 0);
    for (double v : values) {
        auto k = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins));
        ++h.counts[std::min(k, bins - 1)];
    }
    return h;
}

double quantile(std::vector<double> values, double level) {
    if (values.empty()) throw ValidationError("quantile: empty input");
    if (!(level >= 0.0 && level <= 1.0)) throw ValidationError("quantile: level outside [0, 1]");
    std::sort(values.begin(), values.end());
    const double pos = level * static_cast<double>(values.size() - 1);
    const auto i = static_cast<std::size_t>(std::floor(pos));
    const std::size_t j = std::min(i + 1, values.size() - 1);
    return values[i] + (pos - static_cast<double>(i)) * (values[j] - values[i]);
}

ErrorDistribution summarize_errors(std::vector<double> errors, std::size_t bins) {
    if (errors.empty()) throw ValidationError("error distribution: no samples");
    ErrorDistribution d;
    d.errors = std::move(errors);
    const double n = static_cast<double>(d.errors.size());
    d.mean = std::accumulate(d.errors.begin(), d.errors.end(), 0.0) / n;
    double var = 0.0;
    for (double e : d.errors) var += (e - d.mean) * (e - d.mean);
    d.std = std::sqrt(var / n);
    d.histogram = histogram(d.errors, bins);
    const auto peak = static_cast<std::size_t>(
        std::max_element(d.histogram.counts.begin(), d.histogram.counts.end()) - d.histogram.counts.begin());
    d.mode = 0.5 * (d.histogram.edges[peak] + d.histogram.edges[peak + 1]);
    d.quantile_levels = {0.0, 0.05, 0.25, 0.5, 0.75, 0.95, 1.0};
    std::vector<double> sorted = d.errors;
    std::sort(sorted.begin(), sorted.end());
    for (double q : d.quantile_levels) d.quantiles.push_back(quantile(sorted, q));
    return d;
}

ErrorDistribution error_distribution(const ReconstructFn& reconstruct, std::span<const data::Segment> segments,
                                     std::size_t workers, std::size_t bins, std::size_t chunk) {
    if (segments.empty()) throw ValidationError("error_distribution: no segments");
    chunk = std::max<std::size_t>(chunk, 1);
    std::vector<double> errors(segments.size());
    const std::size_t n_chunks = (segments.size() + chunk - 1) / chunk;
    parallel_for(n_chunks, workers, [&](std::size_t c) {
        const std::size_t lo = c * chunk;
        const auto part = segments.subspan(lo, std::min(chunk, segments.size() - lo));
        const auto rec = reconstruct(part);
        if (rec.size() != part.size()) throw ContractError("error_distribution: reconstruction count mismatch");
        for (std::size_t i = 0; i < part.size(); ++i) {
            const auto& x = part[i].values;
            const auto& y = rec[i].values;
            if (x.size() != y.size()) throw ContractError("error_distribution: reconstruction shape mismatch");
            double s = 0.0;
            for (std::size_t k = 0; k < x.size(); ++k) s += (x[k] - y[k]) * (x[k] - y[k]);
            errors[lo + i] = s / static_cast<double>(x.size());
        }
    });
    return summarize_errors(std::move(errors), bins);
}

void write_errors_csv(std::ostream& out, const ErrorDistribution& d) {
    out.precision(12);
    out << "index,err_r\n";
    for (std::size_t i = 0; i < d.errors.size(); ++i) out << i << ',' << d.errors[i] << '\n';
}

void write_summary_csv(std::ostream& out, const ErrorDistribution& d) {
    out.precision(12);
    out << "statistic,value\n";
    out << "count," << d.errors.size() << '\n';
    out << "mean," << d.mean << '\n';
    out << "std," << d.std << '\n';
    out << "mode," << d.mode << '\n';
    for (std::size_t i = 0; i < d.quantiles.size(); ++i) out << 'q' << d.quantile_levels[i] << ',' << d.quantiles[i] << '\n';
}

void write_histogram_csv(std::ostream& out, const ErrorDistribution& d) {
    out.precision(12);
    out << "bin_lo,bin_hi,count\n";
    for (std::size_t i = 0; i < d.histogram.counts.size(); ++i) {
        out << d.histogram.edges[i] << ',' << d.histogram.edges[i + 1] << ',' << d.histogram.counts[i] << '\n';
    }
}

} // namespace simlob::analytics
