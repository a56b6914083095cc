#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "simlob/analytics/errors.hpp"
#include "simlob/analytics/facts.hpp"
#include "simlob/error.hpp"

using namespace simlob;
using namespace simlob::analytics;

namespace {

// W1 as the integral of |Fa(x) - Fb(x)| over the real line.
double w1_by_cdf(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::vector<double> xs(a);
    xs.insert(xs.end(), b.begin(), b.end());
    std::sort(xs.begin(), xs.end());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        const double x = xs[i];
        const double fa = static_cast<double>(std::upper_bound(a.begin(), a.end(), x) - a.begin()) / a.size();
        const double fb = static_cast<double>(std::upper_bound(b.begin(), b.end(), x) - b.begin()) / b.size();
        total += std::abs(fa - fb) * (xs[i + 1] - x);
    }
    return total;
}

std::vector<double> draws(std::size_t n, std::mt19937_64& rng, double shift = 0.0) {
    std::normal_distribution<double> g(shift, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = g(rng);
    return v;
}

} // namespace

TEST_CASE("wasserstein distance") {
    std::mt19937_64 rng(1);
    auto a = draws(200, rng);
    CHECK(wasserstein_1d(a, a) == 0.0);
    std::vector<double> zeros(50, 0.0), threes(70, 3.0);
    CHECK(wasserstein_1d(zeros, threes) == doctest::Approx(3.0));
    std::vector<double> two{0.0, 1.0}, three{0.0, 0.5, 1.0};
    CHECK(wasserstein_1d(two, three) == doctest::Approx(w1_by_cdf(two, three)).epsilon(1e-12));

    for (int rep = 0; rep < 20; ++rep) {
        auto x = draws(1 + rng() % 300, rng, 0.5);
        auto y = draws(1 + rng() % 300, rng);
        auto z = draws(1 + rng() % 300, rng, -0.2);
        const double xy = wasserstein_1d(x, y);
        CHECK(std::abs(xy - w1_by_cdf(x, y)) < 1e-9);
        CHECK(xy == doctest::Approx(wasserstein_1d(y, x)).epsilon(1e-12));
        CHECK(xy <= wasserstein_1d(x, z) + wasserstein_1d(z, y) + 1e-12);
    }
    CHECK_THROWS_AS(wasserstein_1d(a, std::vector<double>{}), ValidationError);
}

TEST_CASE("log returns") {
    std::vector<double> flat(10, 100.0);
    auto r = log_returns(flat);
    REQUIRE(r.size() == 9);
    for (double v : r) CHECK(v == 0.0);
    std::vector<double> doubling{1, 2, 4, 8};
    for (double v : log_returns(doubling)) CHECK(v == doctest::Approx(std::log(2.0)));
    CHECK_THROWS_AS(log_returns(std::vector<double>{1.0, 0.0}), ValidationError);
}

TEST_CASE("correlation estimators") {
    std::vector<double> alt;
    for (int i = 0; i < 100; ++i) alt.push_back(i % 2 ? 0.01 : -0.01);
    CHECK(autocorrelation(alt) == doctest::Approx(-1.0));

    std::vector<double> rets, vols;
    for (int i = 0; i < 100; ++i) {
        rets.push_back((i % 2 ? 1.0 : -1.0) * 0.001 * i);
        vols.push_back(5.0 + 2.0 * i);
    }
    CHECK(volume_volatility_correlation(vols, rets) == doctest::Approx(1.0));

    std::vector<double> same(100, 0.01);
    CHECK(pearson(same, vols) == 0.0);
    CHECK(autocorrelation(same) == 0.0);

    std::mt19937_64 rng(2);
    for (int rep = 0; rep < 100; ++rep) {
        auto x = draws(50, rng);
        auto y = draws(50, rng);
        const double c = pearson(x, y);
        CHECK((c >= -1.0 && c <= 1.0));
        const double ac = autocorrelation(x, 1 + rep % 5);
        CHECK((ac >= -1.0 && ac <= 1.0));
        const double vc = volatility_clustering(x);
        CHECK((vc >= -1.0 && vc <= 1.0));
    }
    CHECK_THROWS_AS(pearson(alt, std::vector<double>(3, 1.0)), ValidationError);
}

TEST_CASE("facts of a snapshot series") {
    std::vector<lob::LobSnapshot> s(6);
    const lob::Price bids[] = {100, 102, 101, 103, 103, 100};
    for (std::size_t t = 0; t < s.size(); ++t) {
        s[t].levels.resize(lob::kDefaultDepth);
        for (std::size_t l = 0; l < lob::kDefaultDepth; ++l) {
            const auto k = static_cast<lob::Price>(l);
            s[t].levels[l] = lob::Level{bids[t] - k, static_cast<lob::Volume>(t + 1), bids[t] + 2 + k, 10};
        }
    }
    const auto f = stylized_facts(s);
    REQUIRE(f.returns.size() == 5);
    CHECK(f.returns[0] == doctest::Approx(std::log(103.0 / 101.0)));
    std::vector<double> v{12, 13, 14, 15, 16};
    CHECK(f.vol_vol_corr == doctest::Approx(volume_volatility_correlation(v, f.returns)));
    CHECK(f.autocorr == doctest::Approx(autocorrelation(f.returns)));

    const auto rep = compare_facts(s, s);
    CHECK(rep.logret_wasserstein == 0.0);
    CHECK(rep.autocorr_delta == 0.0);
    std::ostringstream out;
    write_facts_csv(out, rep);
    CHECK(out.str().rfind("#", 0) == 0);
}

TEST_CASE("quantiles and histograms") {
    std::vector<double> v{3, 1, 2, 4};
    CHECK(quantile(v, 0.0) == 1.0);
    CHECK(quantile(v, 1.0) == 4.0);
    CHECK(quantile(v, 0.5) == doctest::Approx(2.5));
    std::mt19937_64 rng(3);
    auto x = draws(500, rng);
    double prev = -1e300;
    for (double q = 0.0; q <= 1.0; q += 0.05) {
        const double cur = quantile(x, q);
        CHECK(cur >= prev);
        prev = cur;
    }
    const auto h = histogram(x, 20);
    REQUIRE(h.edges.size() == 21);
    std::size_t n = 0;
    for (auto c : h.counts) n += c;
    CHECK(n == 500);

    const auto d = summarize_errors({1.0, 1.0, 1.0, 4.0}, 3);
    CHECK(d.mean == doctest::Approx(1.75));
    CHECK(d.std == doctest::Approx(std::sqrt(1.6875)));
    CHECK(d.mode == doctest::Approx(1.5));
}

TEST_CASE("error distribution of a reconstruction") {
    std::vector<data::Segment> segs(70);
    std::mt19937_64 rng(4);
    for (auto& s : segs) {
        s.tau = 3;
        s.values = draws(3 * 40, rng);
    }
    ReconstructFn identity = [](std::span<const data::Segment> b) {
        return std::vector<data::Segment>(b.begin(), b.end());
    };
    const auto d = error_distribution(identity, segs, 3, 10, 8);
    REQUIRE(d.errors.size() == 70);
    for (double e : d.errors) CHECK(e == 0.0);

    ReconstructFn zero = [](std::span<const data::Segment> b) {
        std::vector<data::Segment> out(b.begin(), b.end());
        for (auto& s : out) std::fill(s.values.begin(), s.values.end(), 0.0);
        return out;
    };
    const auto z = error_distribution(zero, segs, 2, 10, 16);
    for (std::size_t i = 0; i < segs.size(); ++i) {
        double sq = 0.0;
        for (double x : segs[i].values) sq += x * x;
        CHECK(z.errors[i] == doctest::Approx(sq / 120.0).epsilon(1e-12));
    }
    std::ostringstream a, b, c;
    write_errors_csv(a, z);
    write_summary_csv(b, z);
    write_histogram_csv(c, z);
    const auto rows = a.str();
    CHECK(std::count(rows.begin(), rows.end(), '\n') == 71);
}
