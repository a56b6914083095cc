#include "simlob/calib/calibrate.hpp"

#include <chrono>

#include <spdlog/spdlog.h>

#include "simlob/error.hpp"

namespace simlob::calib {

Objective parse_objective(const std::string& name) {
    if (name == "midprice") return Objective::midprice;
    if (name == "rawlob") return Objective::rawlob;
    if (name == "latent") return Objective::latent;
    throw ValidationError("unknown objective '" + name + "' (expected midprice, rawlob or latent)");
}

std::string to_string(Objective o) {
    switch (o) {
    case Objective::midprice: return "midprice";
    case Objective::rawlob: return "rawlob";
    case Objective::latent: return "latent";
    }
    return "?";
}

const std::vector<sim::PgpsParams>& reference_tuples() {
    // lambda0, c_lambda, alpha, mu, delta_s, delta
    static const std::vector<sim::PgpsParams> tuples = [] {
        const double rows[10][6] = {
            {80, 8, 0.1, 0.02, 0.002, 0.02},
            {120, 11, 0.2, 0.03, 0.003, 0.03},
            {130, 12, 0.3, 0.04, 0.003, 0.04},
            {90, 9, 0.15, 0.02, 0.001, 0.02},
            {70, 7, 0.15, 0.015, 0.0015, 0.03},
            {134.64, 15.45, 0.3275, 0.07116, 0.002, 0.0324},
            {17.7, 11.36, 0.2639, 0.067, 0.00066, 0.03644},
            {153.53, 9.27, 0.2983, 0.07343, 0.00238, 0.01278},
            {48.13, 3.54, 0.4374, 0.02645, 0.00077, 0.01674},
            {7.13, 7.04, 0.1106, 0.05609, 0.00217, 0.01389},
        };
        std::vector<sim::PgpsParams> out;
        for (const auto& r : rows) {
            sim::PgpsParams p;
            p.lambda0 = r[0];
            p.c_lambda = r[1];
            p.alpha = r[2];
            p.mu = r[3];
            p.delta_s = r[4];
            p.delta = r[5];
            out.push_back(p);
        }
        return out;
    }();
    return tuples;
}

void CalibrationTask::validate() const {
    const std::size_t t = model ? model->config().tau : tau;
    if (target.size() < t) throw ValidationError("calibration: target shorter than tau");
    if (objective == Objective::latent && !model) throw ValidationError("calibration: latent objective needs a model");
    if (population == 0) throw ValidationError("calibration: population must be positive");
    sim.validate();
}

data::NormStats fit_series_norm(std::span<const lob::LobSnapshot> series, std::size_t tau) {
    const auto windows = data::segment_series(series, tau);
    if (windows.empty()) throw ValidationError("fit_series_norm: series shorter than tau");
    return data::fit_normalizer(windows);
}

ObjectiveEvaluator::ObjectiveEvaluator(const CalibrationTask& task) : task_(task) {
    task.validate();
    norm_ = task.model ? task.model->norm() : fit_series_norm(task.target, task.tau);
    if (task.objective == Objective::latent) target_latents_ = encode_series(*task.model, task.target);
}

double ObjectiveEvaluator::score(std::span<const lob::LobSnapshot> simulated) const {
    const std::size_t tau = task_.model ? task_.model->config().tau : task_.tau;
    switch (task_.objective) {
    case Objective::midprice: return objective_midprice(task_.target, simulated, norm_, tau);
    case Objective::rawlob: return objective_rawlob(task_.target, simulated, norm_, tau);
    case Objective::latent: {
        if (simulated.size() != task_.target.size()) throw ValidationError("objective_latent: length mismatch");
        const auto z = encode_series(*task_.model, simulated);
        return objective_latent(target_latents_, z);
    }
    }
    return 0.0;
}

double ObjectiveEvaluator::operator()(const sim::PgpsParams& params, std::uint64_t sim_seed) const {
    sim::SimConfig cfg = task_.sim;
    cfg.horizon = task_.target.size();
    cfg.seed = sim_seed;
    const auto simulated = sim::simulate(params, cfg);
    return score(simulated);
}

CalibrationResult calibrate(const CalibrationTask& task) {
    const auto t0 = std::chrono::steady_clock::now();
    const ObjectiveEvaluator eval(task);
    const auto& lo = task.bounds.lower;
    const auto& hi = task.bounds.upper;

    PsoOptions opt;
    opt.population = task.population;
    opt.iterations = task.iterations;
    opt.seed = task.seed;
    opt.workers = task.workers;
    opt.record_positions = task.record_positions;
    auto f = [&](const std::vector<double>& x, std::size_t index) {
        sim::ParamVector w;
        std::copy(x.begin(), x.end(), w.begin());
        const std::uint64_t seed = task.per_evaluation_seeds ? sim::mix_key(task.sim_seed, index) : task.sim_seed;
        return eval(sim::from_vector(w), seed);
    };
    const PsoResult pso = pso_minimize(f, std::vector<double>(lo.begin(), lo.end()),
                                       std::vector<double>(hi.begin(), hi.end()), opt);

    CalibrationResult res;
    sim::ParamVector best;
    std::copy(pso.best_position.begin(), pso.best_position.end(), best.begin());
    res.best = sim::from_vector(best);
    res.best_value = pso.best_value;
    res.trace = pso.trace;
    res.evaluations = pso.evaluations;
    for (const auto& p : pso.positions) {
        sim::ParamVector w;
        std::copy(p.begin(), p.end(), w.begin());
        res.evaluated.push_back(w);
    }
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    spdlog::info("calibrate: {} objective, best {:.6g} after {} evaluations ({:.1f}s)", to_string(task.objective),
                 res.best_value, res.evaluations, res.seconds);
    return res;
}

CalibrationReport evaluate_calibration(std::span<const lob::LobSnapshot> target, const sim::PgpsParams& params,
                                       std::uint64_t sim_seed, const sim::SimConfig& sim,
                                       const model::SimLobModel<float>* model, std::size_t tau) {
    sim::validate(params);
    if (model) tau = model->config().tau;
    sim::SimConfig cfg = sim;
    cfg.horizon = target.size();
    cfg.seed = sim_seed;
    const auto simulated = sim::simulate(params, cfg);
    const data::NormStats norm = model ? model->norm() : fit_series_norm(target, tau);

    CalibrationReport r;
    r.err_r = objective_rawlob(target, simulated, norm, tau);
    r.midprice = objective_midprice(target, simulated, norm, tau);
    if (model) r.latent = objective_latent(target, simulated, *model);
    r.facts = analytics::compare_facts(target, simulated);
    return r;
}

} // namespace simlob::calib
