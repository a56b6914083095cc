#include "simlob/calib/objectives.hpp"

#include "simlob/error.hpp"

namespace simlob::calib {
namespace {

void check_lengths(std::size_t a, std::size_t b, std::size_t tau, const char* what) {
    if (tau == 0) throw ValidationError(std::string(what) + ": tau must be positive");
    if (a != b) {
        throw ValidationError(std::string(what) + ": length mismatch (" + std::to_string(a) + " vs " +
                              std::to_string(b) + ")");
    }
    if (a < tau) throw ValidationError(std::string(what) + ": series shorter than tau");
}

} // namespace

std::size_t window_count(std::size_t length, std::size_t tau) {
    if (tau == 0) throw ValidationError("window_count: tau must be positive");
    return (length + tau - 1) / tau;
}

double objective_midprice(std::span<const double> target_mid, std::span<const double> simulated_mid,
                          const data::NormStats& norm, std::size_t tau) {
    check_lengths(target_mid.size(), simulated_mid.size(), tau, "objective_midprice");
    const std::size_t windows = window_count(target_mid.size(), tau);
    double s1 = 0.0;
    for (std::size_t w = 0; w < windows; ++w) {
        const std::size_t end = std::min(target_mid.size(), (w + 1) * tau);
        for (std::size_t t = w * tau; t < end; ++t) {
            const double d = data::normalize_price(target_mid[t], norm) - data::normalize_price(simulated_mid[t], norm);
            s1 += d * d;
        }
    }
    return s1 / static_cast<double>(windows);
}

double objective_midprice(std::span<const lob::LobSnapshot> target, std::span<const lob::LobSnapshot> simulated,
                          const data::NormStats& norm, std::size_t tau) {
    check_lengths(target.size(), simulated.size(), tau, "objective_midprice");
    return objective_midprice(lob::mid_price_series(target), lob::mid_price_series(simulated), norm, tau);
}

std::vector<data::Segment> normalized_windows(std::span<const lob::LobSnapshot> series, const data::NormStats& norm,
                                              std::size_t tau) {
    std::vector<data::Segment> out = data::segment_series(series, tau);
    for (auto& s : out) s = data::apply_normalizer(s, norm);
    return out;
}

double objective_rawlob(std::span<const lob::LobSnapshot> target, std::span<const lob::LobSnapshot> simulated,
                        const data::NormStats& norm, std::size_t tau) {
    check_lengths(target.size(), simulated.size(), tau, "objective_rawlob");
    const auto a = normalized_windows(target, norm, tau);
    const auto b = normalized_windows(simulated, norm, tau);
    double total = 0.0;
    for (std::size_t w = 0; w < a.size(); ++w) total += model::reconstruction_error(a[w], b[w]);
    return total / static_cast<double>(a.size());
}

std::vector<std::vector<double>> encode_series(const model::SimLobModel<float>& model,
                                               std::span<const lob::LobSnapshot> series) {
    const std::size_t tau = model.config().tau;
    if (series.size() < tau) throw ValidationError("encode_series: series shorter than tau");
    const auto windows = normalized_windows(series, model.norm(), tau);
    return model.encode_batch(windows);
}

double objective_latent(std::span<const std::vector<double>> target_latents,
                        std::span<const std::vector<double>> simulated_latents) {
    if (target_latents.size() != simulated_latents.size() || target_latents.empty()) {
        throw ValidationError("objective_latent: window count mismatch");
    }
    double s2 = 0.0;
    for (std::size_t w = 0; w < target_latents.size(); ++w) {
        const auto& a = target_latents[w];
        const auto& b = simulated_latents[w];
        if (a.size() != b.size()) throw ValidationError("objective_latent: latent length mismatch");
        for (std::size_t k = 0; k < a.size(); ++k) s2 += (a[k] - b[k]) * (a[k] - b[k]);
    }
    return s2 / static_cast<double>(target_latents.size());
}

double objective_latent(std::span<const lob::LobSnapshot> target, std::span<const lob::LobSnapshot> simulated,
                        const model::SimLobModel<float>& model) {
    check_lengths(target.size(), simulated.size(), model.config().tau, "objective_latent");
    return objective_latent(encode_series(model, target), encode_series(model, simulated));
}

} // namespace simlob::calib
