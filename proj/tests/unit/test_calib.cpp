#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>

#include "simlob/calib/calibrate.hpp"
#include "simlob/calib/objectives.hpp"
#include "simlob/calib/pso.hpp"

using namespace simlob;
using namespace simlob::calib;

namespace {

std::vector<lob::LobSnapshot> series_with_mid(const std::vector<lob::Price>& bids, lob::Price spread = 2) {
    std::vector<lob::LobSnapshot> out(bids.size());
    for (std::size_t t = 0; t < bids.size(); ++t) {
        out[t].levels.resize(lob::kDefaultDepth);
        for (std::size_t l = 0; l < lob::kDefaultDepth; ++l) {
            const auto k = static_cast<lob::Price>(l);
            out[t].levels[l] = lob::Level{bids[t] - k, 5 + k, bids[t] + spread + k, 7 + k};
        }
    }
    return out;
}

std::vector<lob::LobSnapshot> random_series(std::size_t n, std::mt19937_64& rng) {
    std::vector<lob::Price> bids(n);
    lob::Price p = 10000;
    for (auto& b : bids) b = (p += static_cast<lob::Price>(rng() % 5) - 2);
    auto s = series_with_mid(bids, 1 + static_cast<lob::Price>(rng() % 3));
    for (auto& snap : s)
        for (auto& l : snap.levels) {
            l.bid_volume = 1 + static_cast<lob::Volume>(rng() % 400);
            l.ask_volume = 1 + static_cast<lob::Volume>(rng() % 400);
        }
    return s;
}

sim::PgpsParams data1() { return reference_tuples()[0]; }

double gelu(double v) { return 0.5 * v * (1.0 + std::erf(v / std::sqrt(2.0))); }

// Every weight zero except a path that carries the normalized best bid of each
// step through to latent unit t: z_t = gelu(gelu(x_t)).
model::SimLobModel<float> bid_passthrough_model(const data::NormStats& norm) {
    model::ModelConfig c;
    c.tau = 4;
    c.d_model = 8;
    c.latent = 4;
    c.layers = 1;
    c.heads = 2;
    c.reduce_hidden1 = 8;
    c.reduce_hidden2 = 4;
    model::SimLobModel<float> m(c, 1);
    for (auto& p : m.parameters()) {
        const bool ln_gain = p.name.find(".ln") != std::string::npos && p.name.back() == 'g';
        std::fill(p.value.data.begin(), p.value.data.end(), ln_gain ? 1.0f : 0.0f);
    }
    auto& P = m.parameters();
    P[m.index_of("enc.fcn1.w")].value.at(0, 0) = 1.0f;
    P[m.index_of("enc.proj.w")].value.at(0, 0) = 1.0f;
    for (std::size_t t = 0; t < 4; ++t) {
        P[m.index_of("enc.reduce1.w")].value.at(t * 40, t) = 1.0f;
        P[m.index_of("enc.reduce2.w")].value.at(t, t) = 1.0f;
        P[m.index_of("enc.reduce3.w")].value.at(t, t) = 1.0f;
    }
    m.set_norm(norm);
    return m;
}

} // namespace

TEST_CASE("window counts") {
    CHECK(window_count(3600, 100) == 36);
    CHECK(window_count(200, 100) == 2);
    CHECK(window_count(250, 100) == 3);
    CHECK(window_count(100, 100) == 1);
}

TEST_CASE("objectives vanish on identical series") {
    std::mt19937_64 rng(1);
    auto a = random_series(300, rng);
    const auto norm = fit_series_norm(a, 100);
    CHECK(objective_midprice(a, a, norm) == 0.0);
    CHECK(objective_rawlob(a, a, norm) == 0.0);
    auto b = random_series(300, rng);
    CHECK(objective_midprice(a, b, norm) > 0.0);
    CHECK(objective_rawlob(a, b, norm) > 0.0);
    b.pop_back();
    CHECK_THROWS_AS(objective_midprice(a, b, norm), ValidationError);
    CHECK_THROWS_AS(objective_rawlob(a, b, norm), ValidationError);
}

TEST_CASE("mid-price objective with a constant gap") {
    std::vector<lob::Price> bids(200, 10000), shifted(200, 10003);
    data::NormStats unit;
    CHECK(objective_midprice(series_with_mid(bids), series_with_mid(shifted), unit) ==
          doctest::Approx(900.0).epsilon(1e-12));
    data::NormStats scaled{10000.0, 2.0, 0.0, 1.0};
    CHECK(objective_midprice(series_with_mid(bids), series_with_mid(shifted), scaled) ==
          doctest::Approx(225.0).epsilon(1e-12));
    std::vector<double> m1(200, 0.0), m2(200, 0.5);
    CHECK(std::abs(objective_midprice(m1, m2, unit) - 25.0) < 1e-9);
}

TEST_CASE("mid-price objective keeps a short final window") {
    std::mt19937_64 rng(2);
    std::vector<double> a(250), b(250);
    for (auto& v : a) v = std::uniform_real_distribution<double>(-1, 1)(rng);
    for (auto& v : b) v = std::uniform_real_distribution<double>(-1, 1)(rng);
    double s = 0.0;
    for (std::size_t i = 0; i < 250; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    CHECK(std::abs(objective_midprice(a, b, data::NormStats{}) - s / 3.0) < 1e-12);

    std::vector<double> long_a(3600, 1.0), long_b(3600, 0.0);
    CHECK(std::abs(objective_midprice(long_a, long_b, data::NormStats{}) - 3600.0 / 36.0) < 1e-9);
}

TEST_CASE("raw objective") {
    std::mt19937_64 rng(3);
    auto a = random_series(250, rng);
    auto b = a;
    for (auto& snap : b)
        for (auto& l : snap.levels) {
            l.bid_price += 1;
            l.ask_price += 1;
            l.bid_volume += 1;
            l.ask_volume += 1;
        }
    const data::NormStats tenth{0.0, 10.0, 0.0, 10.0};
    CHECK(objective_rawlob(a, b, tenth) == doctest::Approx(0.01).epsilon(1e-12));

    auto c = random_series(250, rng);
    const auto norm = fit_series_norm(a, 100);
    double total = 0.0;
    for (std::size_t w = 0; w < 2; ++w) {
        double e = 0.0;
        for (std::size_t t = w * 100; t < (w + 1) * 100; ++t) {
            const auto fa = a[t].flatten(), fc = c[t].flatten();
            for (std::size_t k = 0; k < 40; ++k) {
                const bool price = k % 2 == 0;
                const double ctr = price ? norm.price_center : norm.volume_center;
                const double sc = price ? norm.price_scale : norm.volume_scale;
                const double d = (fa[k] - ctr) / sc - (fc[k] - ctr) / sc;
                e += d * d;
            }
        }
        total += e / 4000.0;
    }
    CHECK(std::abs(objective_rawlob(a, c, norm) - total / 2.0) < 1e-12);
}

TEST_CASE("latent objective") {
    std::vector<std::vector<double>> z1{{1, 2}, {0, 0}}, z2{{1, 0}, {3, 1}};
    CHECK(objective_latent(z1, z2) == doctest::Approx((4.0 + 10.0) / 2.0));
    CHECK(objective_latent(z1, z1) == 0.0);
    std::vector<std::vector<double>> swapped{z2[1], z2[0]};
    CHECK(objective_latent(z1, swapped) != objective_latent(z1, z2));
    CHECK_THROWS_AS(objective_latent(z1, std::vector<std::vector<double>>{z2[0]}), ValidationError);

    const data::NormStats norm{10000.0, 10.0, 0.0, 100.0};
    auto m = bid_passthrough_model(norm);
    auto target = series_with_mid({10005, 9990, 10012, 10000});
    auto sim = series_with_mid({10001, 10003, 9995, 10020});
    double expected = 0.0;
    for (std::size_t t = 0; t < 4; ++t) {
        const double zt = gelu(gelu((static_cast<double>(target[t].levels[0].bid_price) - 10000.0) / 10.0));
        const double zs = gelu(gelu((static_cast<double>(sim[t].levels[0].bid_price) - 10000.0) / 10.0));
        expected += (zt - zs) * (zt - zs);
    }
    CHECK(objective_latent(target, sim, m) == doctest::Approx(expected).epsilon(1e-5));
    CHECK(objective_latent(target, target, m) == 0.0);
}

TEST_CASE("pso on a shifted sphere") {
    const std::vector<double> lo{-5, -5, -5}, hi{5, 5, 5};
    std::atomic<std::size_t> calls{0};
    auto f = [&](const std::vector<double>& x, std::size_t) {
        ++calls;
        double s = 0;
        for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - 1.0) * (x[i] - 1.0);
        return s;
    };
    PsoOptions o;
    o.population = 20;
    o.iterations = 100;
    o.seed = 4;
    o.record_positions = true;
    auto r = pso_minimize(f, lo, hi, o);
    CHECK(r.trace.size() == 101);
    CHECK(r.evaluations == 20 * 101);
    CHECK(calls == r.evaluations);
    CHECK(r.best_value < 1e-3);
    CHECK(r.best_value == r.trace.back());
    for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i] <= r.trace[i - 1]);
    REQUIRE(r.positions.size() == r.evaluations);
    for (const auto& p : r.positions)
        for (std::size_t k = 0; k < 3; ++k) REQUIRE((p[k] >= lo[k] && p[k] <= hi[k]));

    o.workers = 4;
    auto r2 = pso_minimize(f, lo, hi, o);
    CHECK(r2.trace == r.trace);
    CHECK(r2.best_position == r.best_position);
    o.seed = 5;
    CHECK(pso_minimize(f, lo, hi, o).trace != r.trace);
}

TEST_CASE("pso pins a zero-valued particle and survives failures") {
    const std::vector<double> lo{0, 0}, hi{1, 1};
    auto f = [](const std::vector<double>& x, std::size_t i) {
        if (i % 7 == 3) throw std::runtime_error("boom");
        if (i % 11 == 5) return std::numeric_limits<double>::quiet_NaN();
        return x[0] < 0.3 ? 0.0 : x[0];
    };
    PsoOptions o;
    o.population = 10;
    o.iterations = 10;
    auto r = pso_minimize(f, lo, hi, o);
    CHECK(r.best_value == 0.0);
    const auto first_zero = std::find(r.trace.begin(), r.trace.end(), 0.0);
    REQUIRE(first_zero != r.trace.end());
    for (auto it = first_zero; it != r.trace.end(); ++it) CHECK(*it == 0.0);
    CHECK(r.best_position[0] < 0.3);
    CHECK_THROWS(pso_minimize(f, lo, std::vector<double>{1}, o));
}

TEST_CASE("reference tuples") {
    const auto& t = reference_tuples();
    REQUIRE(t.size() == 10);
    CHECK(t[0].lambda0 == 80);
    CHECK(t[0].c_lambda == 8);
    CHECK(t[0].alpha == 0.1);
    CHECK(t[0].mu == 0.02);
    CHECK(t[0].delta_s == 0.002);
    CHECK(t[0].delta == 0.02);
    CHECK(t[9].lambda0 == 7.13);
    CHECK(parse_objective("rawlob") == Objective::rawlob);
    CHECK(to_string(Objective::midprice) == "midprice");
    CHECK_THROWS(parse_objective("latents"));
}

TEST_CASE("calibration task plumbing") {
    sim::SimConfig sc;
    sc.horizon = 600;
    sc.seed = 77;
    const auto target = sim::simulate(data1(), sc);

    CalibrationTask task;
    task.target = target;
    task.objective = Objective::rawlob;
    task.population = 4;
    task.iterations = 3;
    task.sim_seed = 77;
    task.record_positions = true;

    ObjectiveEvaluator ev(task);
    CHECK(ev(data1(), 77) == 0.0);
    CHECK(ev(data1(), 78) > 0.0);

    auto a = calibrate(task);
    auto b = calibrate(task);
    CHECK(a.trace == b.trace);
    CHECK(a.best == b.best);
    CHECK(a.evaluations == 16);
    CHECK(a.trace.size() == 4);
    for (const auto& p : a.evaluated) CHECK(task.bounds.contains(p));
    CHECK(ev(a.best, 77) == a.best_value);

    task.objective = Objective::latent;
    CHECK_THROWS_AS(calibrate(task), ValidationError);
    task.objective = Objective::midprice;
    task.target.resize(50);
    CHECK_THROWS_AS(calibrate(task), ValidationError);
}

TEST_CASE("evaluating the generating tuple with its own seed") {
    sim::SimConfig sc;
    sc.horizon = 500;
    sc.seed = 9;
    const auto target = sim::simulate(data1(), sc);
    auto rep = evaluate_calibration(target, data1(), 9, sc);
    CHECK(rep.err_r == 0.0);
    CHECK(rep.midprice == 0.0);
    CHECK_FALSE(rep.latent.has_value());
    CHECK(rep.facts.logret_wasserstein == 0.0);
    CHECK(rep.facts.autocorr_delta == 0.0);
    CHECK(rep.facts.vol_clustering_delta == 0.0);
    CHECK(rep.facts.vol_vol_corr_delta == 0.0);

    auto other = evaluate_calibration(target, data1(), 10, sc);
    CHECK(other.err_r > 0.0);
    const auto norm = fit_series_norm(target, 100);
    sc.seed = 10;
    const auto sim10 = sim::simulate(data1(), sc);
    CHECK(other.err_r == objective_rawlob(target, sim10, norm));
    CHECK(other.midprice == objective_midprice(target, sim10, norm));
    CHECK(other.facts.logret_wasserstein == analytics::compare_facts(target, sim10).logret_wasserstein);
}
