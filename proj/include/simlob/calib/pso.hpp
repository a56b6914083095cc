#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace simlob::calib {

struct PsoOptions {
    std::size_t population = 40;
    std::size_t iterations = 100;
    double inertia = 0.8;
    double c1 = 0.5;
    double c2 = 0.5;
    std::uint64_t seed = 1;
    std::size_t workers = 1;
    bool record_positions = false;
};

struct PsoResult {
    std::vector<double> best_position;
    double best_value = 0.0;
    // trace[0] is the best of the initial population, then one entry per iteration.
    std::vector<double> trace;
    std::size_t evaluations = 0;
    std::vector<std::vector<double>> positions; // every evaluated point when record_positions
};

// f(position, evaluation_index). Exceptions and NaN count as +inf.
using PsoObjective = std::function<double(const std::vector<double>&, std::size_t)>;

// Global-best PSO on a box. Positions start uniform in the box with zero
// velocity; a coordinate pushed outside is clamped and its velocity zeroed.
// The population is evaluated in parallel, updates happen serially.
PsoResult pso_minimize(const PsoObjective& f, const std::vector<double>& lower, const std::vector<double>& upper,
                       const PsoOptions& options);

} // namespace simlob::calib
