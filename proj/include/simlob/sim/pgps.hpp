#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "simlob/lob/order_book.hpp"
#include "simlob/lob/snapshot.hpp"
#include "simlob/sim/rng.hpp"

namespace simlob::sim {

using lob::Price;
using lob::Side;
using lob::Volume;

// Calibratable PGPS parameters.
struct PgpsParams {
    double lambda0 = 100.5;
    double c_lambda = 10.5;
    double delta_s = 0.00175;
    double alpha = 0.25;
    double mu = 0.045;
    double delta = 0.0275;

    friend bool operator==(const PgpsParams&, const PgpsParams&) = default;
};

inline constexpr std::size_t kParamCount = 6;
using ParamVector = std::array<double, kParamCount>;

// Vector order used by the calibrator: w = [delta, lambda0, c_lambda, delta_s, alpha, mu].
inline constexpr std::array<const char*, kParamCount> kParamNames{
    "delta", "lambda0", "c_lambda", "delta_s", "alpha", "mu"};

ParamVector to_vector(const PgpsParams& p);
PgpsParams from_vector(const ParamVector& w);

struct ParamBounds {
    ParamVector lower;
    ParamVector upper;

    bool contains(const ParamVector& w) const;
    ParamVector midpoint() const;
};

// Sampling / calibration box.
const ParamBounds& table_bounds();

// Throws ContractError unless rates are positive and probabilities lie in [0, 1].
void validate(const PgpsParams& p);

std::string to_string(const PgpsParams& p);

// Where a new limit order's price is measured from.
//   opposite_best: bid = p_a1 - offset - 1, ask = p_b1 + offset + 1 (never crosses,
//                  may improve the spread).
//   own_best:      bid = p_b1 - offset - 1, ask = p_a1 + offset + 1 (always behind
//                  the current best).
enum class LimitAnchor { opposite_best, own_best };

struct SimConfig {
    std::size_t n_providers = 125;
    std::size_t n_takers = 125;
    std::size_t horizon = 3600;
    std::uint64_t seed = 1;
    Price p0 = 10000;
    std::size_t warmup = 100;
    Volume order_volume = 100;
    Price tick_size = 1;
    std::size_t qvar_iters = 100000;
    std::uint64_t qvar_seed = 0x51D0B5EEDULL;
    LimitAnchor anchor = LimitAnchor::opposite_best;

    void validate() const;
};

struct TakerSideState {
    double q_taker = 0.5;
    double q_var = 0.0;
};

// Monte Carlo mean of (q - 0.5)^2 over `iters` steps of the q walk started at 0.5.
double precompute_q_variance(double delta_s, std::size_t iters = 100000, std::uint64_t seed = 0x51D0B5EEDULL);

// Memoized precompute_q_variance; safe to call from many threads.
double cached_q_variance(double delta_s, std::size_t iters, std::uint64_t seed);

// One step of the mean-reverting walk given a uniform draw in (0, 1). With
// probability 0.5 + |q - 0.5| the step goes toward 0.5; at 0.5 both directions
// are equally likely. The result is clamped to [0, 1].
double step_q(double q, double delta_s, double u);

TakerSideState step_q_taker(TakerSideState state, double delta_s, CounterRng& rng);

// lambda0 * (1 + |q - 0.5| / sqrt(q_var) * c_lambda)
double lambda_t(const PgpsParams& params, const TakerSideState& state);

// floor(-lambda * log u)
std::int64_t price_offset(double lambda, double u);

struct LimitQuote {
    Price price = 0;
    Volume volume = 0;
};

// Price for a new limit order from the reference best prices; clamped to >= one tick.
Price limit_price(Side side, Price best_bid, Price best_ask, std::int64_t offset, Price tick,
                  LimitAnchor anchor);

// Reference prices fall back to the last seen best (initially p0 -/+ one tick)
// when a side is empty.
struct ReferencePrices {
    Price bid = 0;
    Price ask = 0;
};

LimitQuote draw_limit_order(Side side, const ReferencePrices& refs, const PgpsParams& params,
                            const TakerSideState& state, CounterRng& rng, const SimConfig& config);

struct SimStats {
    std::size_t limit_orders = 0;
    std::size_t market_orders = 0;
    std::size_t cancels = 0;
    std::size_t trades = 0;
    Volume traded_volume = 0;
    double q_mean = 0.0;
};

struct SimResult {
    std::vector<lob::LobSnapshot> snapshots;
    SimStats stats;
};

// Runs warmup + horizon steps and returns one snapshot per post-warmup step.
SimResult run_simulation(const PgpsParams& params, const SimConfig& config);

inline std::vector<lob::LobSnapshot> simulate(const PgpsParams& params, const SimConfig& config) {
    return run_simulation(params, config).snapshots;
}

// Stream ids for the counter RNG.
inline constexpr std::uint64_t kProviderStream = 0;
inline constexpr std::uint64_t kTakerStream = 1u << 20;
inline constexpr std::uint64_t kWalkStream = 1u << 21;

} // namespace simlob::sim
