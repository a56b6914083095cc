#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "simlob/data/segment.hpp"
#include "simlob/model/simlob.hpp"

namespace simlob::model {

struct EpochStats {
    std::size_t epoch = 0; // 1-based
    double train_error = 0.0;
    double test_error = 0.0;
    double seconds = 0.0;
};

struct TrainOptions {
    std::size_t epochs = 200;
    std::size_t batch = 128;
    double lr = 1e-4;
    std::uint64_t seed = 1;
    // Each batch is split into this many micro-batches whose gradients are
    // averaged in a fixed order, so results do not depend on `workers`.
    std::size_t micro_batches = 1;
    std::size_t workers = 1;
    bool restore_best = true;
    std::optional<std::filesystem::path> checkpoint; // best-on-test weights are written here
    std::function<void(const EpochStats&)> on_epoch;
};

struct TrainHistory {
    double initial_test_error = 0.0;
    std::vector<EpochStats> epochs;
    std::size_t best_epoch = 0; // 0 means the initial weights were never beaten
    double best_test_error = 0.0;
};

// Trains in place on normalized segments with batch-mean Err_r and Adam.
// Throws NumericError naming the epoch and batch when the loss stops being finite.
TrainHistory train(SimLobModel<float>& model, std::span<const data::Segment> train_set,
                   std::span<const data::Segment> test_set, const TrainOptions& options);

// Mean Err_r of model reconstructions over a set of normalized segments.
template <typename T>
double mean_reconstruction_error(const SimLobModel<T>& model, std::span<const data::Segment> segments,
                                 std::size_t workers = 1, std::size_t chunk = 32);

// Err_r of the predictor that outputs each segment's overall mean in every entry.
double segment_mean_baseline(std::span<const data::Segment> segments);
// Err_r of a predictor that outputs per-column means estimated on `fit`.
double column_mean_baseline(std::span<const data::Segment> fit, std::span<const data::Segment> eval);

} // namespace simlob::model
