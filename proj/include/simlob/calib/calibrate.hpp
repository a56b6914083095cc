#pragma once

#include <optional>
#include <string>
#include <vector>

#include "simlob/analytics/facts.hpp"
#include "simlob/calib/objectives.hpp"
#include "simlob/calib/pso.hpp"
#include "simlob/sim/pgps.hpp"

namespace simlob::calib {

enum class Objective { midprice, rawlob, latent };

Objective parse_objective(const std::string& name);
std::string to_string(Objective o);

// The ten synthetic target tuples (data 1 .. data 10).
const std::vector<sim::PgpsParams>& reference_tuples();

struct CalibrationTask {
    std::vector<lob::LobSnapshot> target;
    Objective objective = Objective::latent;
    const model::SimLobModel<float>* model = nullptr; // required for latent
    sim::ParamBounds bounds = sim::table_bounds();
    std::size_t population = 40;
    std::size_t iterations = 100;
    std::uint64_t seed = 1;           // swarm randomness
    std::uint64_t sim_seed = 1;       // simulator seed shared by every evaluation
    bool per_evaluation_seeds = false;
    sim::SimConfig sim;               // horizon is set to the target length
    std::size_t tau = data::kDefaultTau; // used when there is no model
    std::size_t workers = 1;
    bool record_positions = false;

    void validate() const;
};

// Scores parameter tuples against a fixed target. Target-side work (normalization
// stats, target latents) is done once. Safe to call from several threads.
class ObjectiveEvaluator {
public:
    explicit ObjectiveEvaluator(const CalibrationTask& task);
    double operator()(const sim::PgpsParams& params, std::uint64_t sim_seed) const;
    double score(std::span<const lob::LobSnapshot> simulated) const;
    const data::NormStats& norm() const { return norm_; }

private:
    const CalibrationTask& task_;
    data::NormStats norm_;
    std::vector<std::vector<double>> target_latents_;
};

struct CalibrationResult {
    sim::PgpsParams best;
    double best_value = 0.0;
    std::vector<double> trace;
    std::size_t evaluations = 0;
    double seconds = 0.0;
    std::vector<sim::ParamVector> evaluated; // when record_positions
};

CalibrationResult calibrate(const CalibrationTask& task);

struct CalibrationReport {
    double err_r = 0.0;    // rawlob objective
    double midprice = 0.0;
    std::optional<double> latent; // needs a model
    analytics::StylizedFactsReport facts;
};

// One simulation at `params` with `sim_seed`, every metric against the target.
// Normalization uses the model's stats when a model is given, otherwise stats
// fitted on the target.
CalibrationReport evaluate_calibration(std::span<const lob::LobSnapshot> target, const sim::PgpsParams& params,
                                       std::uint64_t sim_seed, const sim::SimConfig& sim,
                                       const model::SimLobModel<float>* model = nullptr,
                                       std::size_t tau = data::kDefaultTau);

// Normalization stats fitted on the full windows of one series.
data::NormStats fit_series_norm(std::span<const lob::LobSnapshot> series, std::size_t tau);

} // namespace simlob::calib
