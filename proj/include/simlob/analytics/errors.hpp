#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "simlob/data/segment.hpp"

namespace simlob::analytics {

struct Histogram {
    std::vector<double> edges; // bins + 1
    std::vector<std::size_t> counts;
};

struct ErrorDistribution {
    std::vector<double> errors;
    double mean = 0.0;
    double std = 0.0; // population
    double mode = 0.0; // centre of the fullest histogram bin
    std::vector<double> quantile_levels;
    std::vector<double> quantiles; // linear interpolation between order statistics
    Histogram histogram;
};

Histogram histogram(std::span<const double> values, std::size_t bins);
double quantile(std::vector<double> values, double level);

ErrorDistribution summarize_errors(std::vector<double> errors, std::size_t bins = 50);

// Maps a batch of normalized segments to their reconstructions.
using ReconstructFn = std::function<std::vector<data::Segment>(std::span<const data::Segment>)>;

// Err_r of every segment under `reconstruct`, evaluated in chunks across workers.
ErrorDistribution error_distribution(const ReconstructFn& reconstruct, std::span<const data::Segment> segments,
                                     std::size_t workers = 1, std::size_t bins = 50, std::size_t chunk = 32);

void write_errors_csv(std::ostream& out, const ErrorDistribution& d);
void write_summary_csv(std::ostream& out, const ErrorDistribution& d);
void write_histogram_csv(std::ostream& out, const ErrorDistribution& d);

} // namespace simlob::analytics
