#pragma once

#include <span>
#include <vector>

#include "simlob/data/normalizer.hpp"
#include "simlob/data/segment.hpp"
#include "simlob/lob/snapshot.hpp"
#include "simlob/model/simlob.hpp"

namespace simlob::calib {

// ceil(T / tau).
std::size_t window_count(std::size_t length, std::size_t tau);

// Squared mid-price differences (normalized price units) summed over all
// ceil(T/tau) windows, the last one possibly short, divided by ceil(T/tau).
double objective_midprice(std::span<const lob::LobSnapshot> target, std::span<const lob::LobSnapshot> simulated,
                          const data::NormStats& norm, std::size_t tau = data::kDefaultTau);
double objective_midprice(std::span<const double> target_mid, std::span<const double> simulated_mid,
                          const data::NormStats& norm, std::size_t tau = data::kDefaultTau);

// Full windows only: normalized tau x 40 segments of a series.
std::vector<data::Segment> normalized_windows(std::span<const lob::LobSnapshot> series, const data::NormStats& norm,
                                              std::size_t tau = data::kDefaultTau);

// Mean Err_r between positionally paired full windows.
double objective_rawlob(std::span<const lob::LobSnapshot> target, std::span<const lob::LobSnapshot> simulated,
                        const data::NormStats& norm, std::size_t tau = data::kDefaultTau);

// Encoded full windows of a series, normalized with the model's stats.
std::vector<std::vector<double>> encode_series(const model::SimLobModel<float>& model,
                                               std::span<const lob::LobSnapshot> series);

// Sum over paired windows of squared latent differences, divided by the number of windows.
double objective_latent(std::span<const std::vector<double>> target_latents,
                        std::span<const std::vector<double>> simulated_latents);
double objective_latent(std::span<const lob::LobSnapshot> target, std::span<const lob::LobSnapshot> simulated,
                        const model::SimLobModel<float>& model);

} // namespace simlob::calib
