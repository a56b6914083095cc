#include "simlob/calib/pso.hpp"

#include <cmath>
#include <limits>

#include <spdlog/spdlog.h>

#include "simlob/error.hpp"
#include "simlob/parallel.hpp"
#include "simlob/sim/rng.hpp"

namespace simlob::calib {
namespace {

constexpr std::uint64_t kInitStream = 0x9501;
constexpr std::uint64_t kMoveStream = 0x9502;

} // namespace

PsoResult pso_minimize(const PsoObjective& f, const std::vector<double>& lower, const std::vector<double>& upper,
                       const PsoOptions& opt) {
    const std::size_t dim = lower.size();
    if (dim == 0 || upper.size() != dim) throw ValidationError("pso: bounds must be non-empty and equally sized");
    for (std::size_t k = 0; k < dim; ++k) {
        if (!(lower[k] <= upper[k])) throw ValidationError("pso: lower bound exceeds upper bound");
    }
    if (opt.population == 0) throw ValidationError("pso: population must be positive");
    const std::size_t pop = opt.population;
    constexpr double inf = std::numeric_limits<double>::infinity();

    std::vector<std::vector<double>> x(pop, std::vector<double>(dim)), v(pop, std::vector<double>(dim, 0.0));
    for (std::size_t i = 0; i < pop; ++i) {
        sim::CounterRng rng(opt.seed, kInitStream, i);
        for (std::size_t k = 0; k < dim; ++k) x[i][k] = lower[k] + rng.uniform() * (upper[k] - lower[k]);
    }

    PsoResult res;
    std::vector<double> value(pop);
    auto evaluate = [&](std::size_t round) {
        parallel_for(pop, opt.workers, [&](std::size_t i) {
            const std::size_t index = round * pop + i;
            double y = inf;
            try {
                y = f(x[i], index);
            } catch (const std::exception& e) {
                spdlog::warn("pso: evaluation {} failed: {}", index, e.what());
            }
            value[i] = std::isnan(y) ? inf : y;
        });
        res.evaluations += pop;
        if (opt.record_positions) res.positions.insert(res.positions.end(), x.begin(), x.end());
    };

    evaluate(0);
    std::vector<std::vector<double>> pbest = x;
    std::vector<double> pbest_value = value;
    res.best_value = inf;
    res.best_position = x[0];
    for (std::size_t i = 0; i < pop; ++i) {
        if (value[i] < res.best_value) {
            res.best_value = value[i];
            res.best_position = x[i];
        }
    }
    res.trace.push_back(res.best_value);

    for (std::size_t it = 1; it <= opt.iterations; ++it) {
        for (std::size_t i = 0; i < pop; ++i) {
            sim::CounterRng rng(opt.seed, kMoveStream + (static_cast<std::uint64_t>(it) << 20), i);
            for (std::size_t k = 0; k < dim; ++k) {
                const double r1 = rng.uniform(), r2 = rng.uniform();
                v[i][k] = opt.inertia * v[i][k] + opt.c1 * r1 * (pbest[i][k] - x[i][k]) +
                          opt.c2 * r2 * (res.best_position[k] - x[i][k]);
                x[i][k] += v[i][k];
                if (x[i][k] < lower[k]) {
                    x[i][k] = lower[k];
                    v[i][k] = 0.0;
                } else if (x[i][k] > upper[k]) {
                    x[i][k] = upper[k];
                    v[i][k] = 0.0;
                }
            }
        }
        evaluate(it);
        for (std::size_t i = 0; i < pop; ++i) {
            if (value[i] < pbest_value[i]) {
                pbest_value[i] = value[i];
                pbest[i] = x[i];
            }
            if (value[i] < res.best_value) {
                res.best_value = value[i];
                res.best_position = x[i];
            }
        }
        res.trace.push_back(res.best_value);
        spdlog::debug("pso: iteration {} best {}", it, res.best_value);
    }
    return res;
}

} // namespace simlob::calib
