#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "simlob/lob/snapshot.hpp"

namespace simlob::analytics {

// r(t) = ln(mp(t+1) / mp(t)); throws ValidationError on a non-positive price.
std::vector<double> log_returns(std::span<const double> mid);

// Exact W1 between two empirical distributions: the integral over u in (0, 1)
// of |Fa^-1(u) - Fb^-1(u)|, evaluated piecewise on the merged quantile grid.
double wasserstein_1d(std::span<const double> a, std::span<const double> b);

// Pearson correlation. A zero-variance input yields 0 and a logged warning.
double pearson(std::span<const double> a, std::span<const double> b);

// Pearson correlation of (x[t], x[t + lag]) pairs.
double autocorrelation(std::span<const double> returns, std::size_t lag = 1);
// Autocorrelation of |returns|.
double volatility_clustering(std::span<const double> returns, std::size_t lag = 1);
// Pearson correlation of volume[t] with |returns[t]|; equal lengths.
double volume_volatility_correlation(std::span<const double> volumes, std::span<const double> returns);

struct StylizedFacts {
    std::vector<double> returns;
    double autocorr = 0.0;
    double vol_clustering = 0.0;
    double vol_vol_corr = 0.0;
};

// Facts of one snapshot series. Mid-prices come from mid_price_series; the
// volume paired with return r(t) is v_b1 + v_a1 at step t + 1.
StylizedFacts stylized_facts(std::span<const lob::LobSnapshot> snaps, std::size_t lag = 1);

struct StylizedFactsReport {
    double logret_wasserstein = 0.0;
    double vol_vol_corr_delta = 0.0;
    double vol_clustering_delta = 0.0;
    double autocorr_delta = 0.0;
    StylizedFacts a;
    StylizedFacts b;
};

// Deltas are absolute differences |fact(a) - fact(b)|.
StylizedFactsReport compare_facts(std::span<const lob::LobSnapshot> a, std::span<const lob::LobSnapshot> b,
                                  std::size_t lag = 1);
StylizedFactsReport compare_facts(const StylizedFacts& a, const StylizedFacts& b);

// Estimator definitions, written as '#' comment lines ahead of every facts CSV.
std::string facts_definitions(std::size_t lag = 1);
void write_facts_csv(std::ostream& out, const StylizedFactsReport& r, std::size_t lag = 1);

} // namespace simlob::analytics
