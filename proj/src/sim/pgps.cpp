#include "simlob/sim/pgps.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>
#include <tuple>

#include "simlob/error.hpp"

namespace simlob::sim {

ParamVector to_vector(const PgpsParams& p) {
    return {p.delta, p.lambda0, p.c_lambda, p.delta_s, p.alpha, p.mu};
}

PgpsParams from_vector(const ParamVector& w) {
    PgpsParams p;
    p.delta = w[0];
    p.lambda0 = w[1];
    p.c_lambda = w[2];
    p.delta_s = w[3];
    p.alpha = w[4];
    p.mu = w[5];
    return p;
}

bool ParamBounds::contains(const ParamVector& w) const {
    for (std::size_t i = 0; i < kParamCount; ++i) {
        if (!(w[i] >= lower[i] && w[i] <= upper[i])) return false;
    }
    return true;
}

ParamVector ParamBounds::midpoint() const {
    ParamVector m{};
    for (std::size_t i = 0; i < kParamCount; ++i) m[i] = 0.5 * (lower[i] + upper[i]);
    return m;
}

const ParamBounds& table_bounds() {
    //                             delta  lambda0 c_lambda delta_s  alpha  mu
    static const ParamBounds kBounds{{0.005, 1.0, 1.0, 0.0005, 0.05, 0.005},
                                     {0.05, 200.0, 20.0, 0.003, 0.45, 0.085}};
    return kBounds;
}

void validate(const PgpsParams& p) {
    auto prob = [](double v, const char* name) {
        if (!(v >= 0.0 && v <= 1.0)) throw ContractError(std::string(name) + " must lie in [0, 1]");
    };
    if (!(p.lambda0 > 0.0) || !std::isfinite(p.lambda0)) throw ContractError("lambda0 must be positive");
    if (!(p.c_lambda >= 0.0) || !std::isfinite(p.c_lambda)) throw ContractError("c_lambda must be non-negative");
    if (!(p.delta_s > 0.0 && p.delta_s < 0.5)) throw ContractError("delta_s must lie in (0, 0.5)");
    prob(p.alpha, "alpha");
    prob(p.mu, "mu");
    prob(p.delta, "delta");
}

std::string to_string(const PgpsParams& p) {
    std::ostringstream os;
    os.precision(17);
    os << "lambda0=" << p.lambda0 << " c_lambda=" << p.c_lambda << " delta_s=" << p.delta_s
       << " alpha=" << p.alpha << " mu=" << p.mu << " delta=" << p.delta;
    return os.str();
}

void SimConfig::validate() const {
    if (horizon == 0) throw ContractError("horizon must be positive");
    if (p0 <= 0) throw ContractError("p0 must be positive");
    if (order_volume <= 0) throw ContractError("order_volume must be positive");
    if (tick_size <= 0) throw ContractError("tick_size must be positive");
    if (p0 % tick_size != 0) throw ContractError("p0 must be a multiple of tick_size");
    if (p0 - tick_size <= 0) throw ContractError("p0 must exceed one tick");
    if (qvar_iters == 0) throw ContractError("qvar_iters must be positive");
    if (n_providers >= kTakerStream || n_takers >= kTakerStream) throw ContractError("too many agents");
}

double step_q(double q, double delta_s, double u) {
    const double dist = std::abs(q - 0.5);
    double next;
    if (dist < 0.5 * delta_s) {
        next = u < 0.5 ? 0.5 + delta_s : 0.5 - delta_s;
    } else {
        const double toward = q > 0.5 ? -delta_s : delta_s;
        next = u < 0.5 + dist ? q + toward : q - toward;
    }
    return std::clamp(next, 0.0, 1.0);
}

TakerSideState step_q_taker(TakerSideState state, double delta_s, CounterRng& rng) {
    state.q_taker = step_q(state.q_taker, delta_s, rng.uniform());
    return state;
}

double precompute_q_variance(double delta_s, std::size_t iters, std::uint64_t seed) {
    if (!(delta_s > 0.0)) throw ContractError("delta_s must be positive");
    if (iters == 0) throw ContractError("iters must be positive");
    CounterRng rng(seed, kWalkStream, 0);
    double q = 0.5;
    double acc = 0.0;
    for (std::size_t i = 0; i < iters; ++i) {
        q = step_q(q, delta_s, rng.uniform());
        acc += (q - 0.5) * (q - 0.5);
    }
    return acc / static_cast<double>(iters);
}

double cached_q_variance(double delta_s, std::size_t iters, std::uint64_t seed) {
    static std::mutex mutex;
    static std::map<std::tuple<double, std::size_t, std::uint64_t>, double> cache;
    const auto key = std::make_tuple(delta_s, iters, seed);
    {
        std::lock_guard lock(mutex);
        if (auto it = cache.find(key); it != cache.end()) return it->second;
    }
    const double value = precompute_q_variance(delta_s, iters, seed);
    std::lock_guard lock(mutex);
    cache.emplace(key, value);
    return value;
}

double lambda_t(const PgpsParams& params, const TakerSideState& state) {
    if (!(state.q_var > 0.0)) throw ContractError("q_var must be positive");
    return params.lambda0 * (1.0 + std::abs(state.q_taker - 0.5) / std::sqrt(state.q_var) * params.c_lambda);
}

std::int64_t price_offset(double lambda, double u) {
    return static_cast<std::int64_t>(std::floor(-lambda * std::log(u)));
}

Price limit_price(Side side, Price best_bid, Price best_ask, std::int64_t offset, Price tick,
                  LimitAnchor anchor) {
    const Price step = (offset + 1) * tick;
    Price price;
    if (anchor == LimitAnchor::opposite_best) {
        price = side == Side::bid ? best_ask - step : best_bid + step;
    } else {
        price = side == Side::bid ? best_bid - step : best_ask + step;
    }
    return std::max(price, tick);
}

LimitQuote draw_limit_order(Side side, const ReferencePrices& refs, const PgpsParams& params,
                            const TakerSideState& state, CounterRng& rng, const SimConfig& config) {
    const double lambda = lambda_t(params, state);
    const std::int64_t offset = price_offset(lambda, rng.uniform());
    return {limit_price(side, refs.bid, refs.ask, offset, config.tick_size, config.anchor), config.order_volume};
}

SimResult run_simulation(const PgpsParams& params, const SimConfig& config) {
    validate(params);
    config.validate();

    constexpr lob::AgentId kSeeder = 0xFFFFFFFFu;
    lob::OrderBook book(config.tick_size);
    book.submit_limit(Side::bid, config.p0 - config.tick_size, config.order_volume, kSeeder);
    book.submit_limit(Side::ask, config.p0 + config.tick_size, config.order_volume, kSeeder);

    ReferencePrices refs{config.p0 - config.tick_size, config.p0 + config.tick_size};
    TakerSideState state{0.5, cached_q_variance(params.delta_s, config.qvar_iters, config.qvar_seed)};

    SimResult result;
    result.snapshots.reserve(config.horizon);
    SimStats& stats = result.stats;
    double q_sum = 0.0;

    const std::size_t total = config.warmup + config.horizon;
    for (std::size_t step = 0; step < total; ++step) {
        book.set_time(static_cast<lob::Step>(step));

        for (std::size_t i = 0; i < config.n_providers; ++i) {
            CounterRng rng(config.seed, kProviderStream + i, step);
            if (!rng.bernoulli(params.alpha)) continue;
            const Side side = rng.below(2) == 0 ? Side::bid : Side::ask;
            if (auto b = book.best_bid()) refs.bid = *b;
            if (auto a = book.best_ask()) refs.ask = *a;
            const LimitQuote quote = draw_limit_order(side, refs, params, state, rng, config);
            auto res = book.submit_limit(side, quote.price, quote.volume, static_cast<lob::AgentId>(i));
            ++stats.limit_orders;
            stats.trades += res.trades.size();
            for (const auto& t : res.trades) stats.traded_volume += t.volume;
        }

        for (std::size_t j = 0; j < config.n_takers; ++j) {
            CounterRng rng(config.seed, kTakerStream + j, step);
            if (rng.bernoulli(params.mu)) {
                const Side side = rng.uniform() < state.q_taker ? Side::bid : Side::ask;
                auto trades = book.submit_market(side, config.order_volume,
                                                 static_cast<lob::AgentId>(config.n_providers + j));
                ++stats.market_orders;
                stats.trades += trades.size();
                for (const auto& t : trades) stats.traded_volume += t.volume;
            }
            if (rng.bernoulli(params.delta) && book.resting_count() > 0) {
                book.cancel(book.resting_at(rng.below(book.resting_count())));
                ++stats.cancels;
            }
        }

        CounterRng walk(config.seed, kWalkStream, step);
        state = step_q_taker(state, params.delta_s, walk);
        q_sum += state.q_taker;

        if (auto b = book.best_bid()) refs.bid = *b;
        if (auto a = book.best_ask()) refs.ask = *a;

        if (step >= config.warmup) {
            lob::LobSnapshot snap = book.snapshot(lob::kDefaultDepth);
            snap.time = static_cast<lob::Step>(step - config.warmup);
            result.snapshots.push_back(std::move(snap));
        }
    }
    stats.q_mean = q_sum / static_cast<double>(total);
    return result;
}

} // namespace simlob::sim
