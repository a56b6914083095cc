#include "simlob/analytics/facts.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <spdlog/spdlog.h>

#include "simlob/error.hpp"

namespace simlob::analytics {

std::vector<double> log_returns(std::span<const double> mid) {
    std::vector<double> r;
    if (mid.size() < 2) return r;
    r.reserve(mid.size() - 1);
    for (std::size_t t = 0; t < mid.size(); ++t) {
        if (!(mid[t] > 0.0)) throw ValidationError("log_returns: non-positive mid-price at step " + std::to_string(t));
        if (t > 0) r.push_back(std::log(mid[t] / mid[t - 1]));
    }
    return r;
}

double wasserstein_1d(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw ValidationError("wasserstein_1d: empty sample");
    std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const double n = static_cast<double>(x.size()), m = static_cast<double>(y.size());
    // Walk the breakpoints i/n and j/m in order; between consecutive breakpoints
    // both quantile functions are constant.
    std::size_t i = 0, j = 0;
    double u = 0.0, total = 0.0;
    while (i < x.size() && j < y.size()) {
        const double next_i = static_cast<double>(i + 1) / n;
        const double next_j = static_cast<double>(j + 1) / m;
        const double next = std::min(next_i, next_j);
        total += (next - u) * std::abs(x[i] - y[j]);
        u = next;
        // Compare via cross-multiplication so equal breakpoints advance together.
        const auto li = (i + 1) * y.size(), lj = (j + 1) * x.size();
        if (li <= lj) ++i;
        if (lj <= li) ++j;
    }
    return total;
}

double pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ValidationError("pearson: length mismatch");
    if (a.size() < 2) throw ValidationError("pearson: need at least two pairs");
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    // a constant series can leave round-off residue in saa or sbb
    auto constant = [](std::span<const double> x) {
        return std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; });
    };
    if (saa <= 0.0 || sbb <= 0.0 || constant(a) || constant(b)) {
        spdlog::warn("pearson: zero-variance series, correlation taken as 0");
        return 0.0;
    }
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double autocorrelation(std::span<const double> returns, std::size_t lag) {
    if (lag == 0) throw ValidationError("autocorrelation: lag must be positive");
    if (returns.size() < lag + 2) throw ValidationError("autocorrelation: series too short for lag " + std::to_string(lag));
    return pearson(returns.first(returns.size() - lag), returns.subspan(lag));
}

double volatility_clustering(std::span<const double> returns, std::size_t lag) {
    std::vector<double> mag(returns.size());
    std::transform(returns.begin(), returns.end(), mag.begin(), [](double r) { return std::abs(r); });
    return autocorrelation(mag, lag);
}

double volume_volatility_correlation(std::span<const double> volumes, std::span<const double> returns) {
    if (volumes.size() != returns.size()) throw ValidationError("volume_volatility_correlation: length mismatch");
    std::vector<double> mag(returns.size());
    std::transform(returns.begin(), returns.end(), mag.begin(), [](double r) { return std::abs(r); });
    return pearson(volumes, mag);
}

StylizedFacts stylized_facts(std::span<const lob::LobSnapshot> snaps, std::size_t lag) {
    if (snaps.size() < lag + 3) throw ValidationError("stylized_facts: series too short");
    const std::vector<double> mid = lob::mid_price_series(snaps);
    StylizedFacts f;
    f.returns = log_returns(mid);
    std::vector<double> volume;
    volume.reserve(f.returns.size());
    for (std::size_t t = 1; t < snaps.size(); ++t) {
        const auto& l1 = snaps[t].levels.at(0);
        volume.push_back(static_cast<double>(l1.bid_volume + l1.ask_volume));
    }
    f.autocorr = autocorrelation(f.returns, lag);
    f.vol_clustering = volatility_clustering(f.returns, lag);
    f.vol_vol_corr = volume_volatility_correlation(volume, f.returns);
    return f;
}

StylizedFactsReport compare_facts(const StylizedFacts& a, const StylizedFacts& b) {
    StylizedFactsReport r;
    r.logret_wasserstein = wasserstein_1d(a.returns, b.returns);
    r.autocorr_delta = std::abs(a.autocorr - b.autocorr);
    r.vol_clustering_delta = std::abs(a.vol_clustering - b.vol_clustering);
    r.vol_vol_corr_delta = std::abs(a.vol_vol_corr - b.vol_vol_corr);
    r.a = a;
    r.b = b;
    return r;
}

StylizedFactsReport compare_facts(std::span<const lob::LobSnapshot> a, std::span<const lob::LobSnapshot> b,
                                  std::size_t lag) {
    return compare_facts(stylized_facts(a, lag), stylized_facts(b, lag));
}

std::string facts_definitions(std::size_t lag) {
    const std::string l = std::to_string(lag);
    return "# mid = (p_a1 + p_b1) / 2, degenerate steps carry the last valid mid\n"
           "# logret: r(t) = ln(mid(t+1) / mid(t)); logret_w1 = exact 1-D Wasserstein-1 between return samples\n"
           "# autocorr: Pearson correlation of (r(t), r(t+" + l + "))\n"
           "# vol_clustering: Pearson correlation of (|r(t)|, |r(t+" + l + ")|)\n"
           "# vol_vol_corr: Pearson correlation of (v_b1 + v_a1 at t+1, |r(t)|)\n"
           "# deltas: absolute difference between the two series' values; zero variance gives correlation 0\n";
}

void write_facts_csv(std::ostream& out, const StylizedFactsReport& r, std::size_t lag) {
    out << facts_definitions(lag);
    out.precision(12);
    out << "metric,value,a,b\n";
    out << "logret_w1," << r.logret_wasserstein << ",,\n";
    out << "autocorr_delta," << r.autocorr_delta << ',' << r.a.autocorr << ',' << r.b.autocorr << '\n';
    out << "vol_clustering_delta," << r.vol_clustering_delta << ',' << r.a.vol_clustering << ',' << r.b.vol_clustering << '\n';
    out << "vol_vol_corr_delta," << r.vol_vol_corr_delta << ',' << r.a.vol_vol_corr << ',' << r.b.vol_vol_corr << '\n';
}

} // namespace simlob::analytics
