#include "simlob/sim/config_file.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "simlob/error.hpp"

namespace simlob::sim {
namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_real(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ContractError("config: bad real for '" + key + "': " + v);
    }
}

template <class I>
I parse_int(const std::string& key, const std::string& v) {
    I out{};
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
        throw ContractError("config: bad integer for '" + key + "': " + v);
    }
    return out;
}

} // namespace

SimSetup parse_sim_setup(std::istream& in, SimSetup s) {
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ContractError("config line " + std::to_string(lineno) + ": expected key=value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));

        if (key == "lambda0") s.params.lambda0 = parse_real(key, val);
        else if (key == "c_lambda") s.params.c_lambda = parse_real(key, val);
        else if (key == "delta_s") s.params.delta_s = parse_real(key, val);
        else if (key == "alpha") s.params.alpha = parse_real(key, val);
        else if (key == "mu") s.params.mu = parse_real(key, val);
        else if (key == "delta") s.params.delta = parse_real(key, val);
        else if (key == "providers") s.config.n_providers = parse_int<std::size_t>(key, val);
        else if (key == "takers") s.config.n_takers = parse_int<std::size_t>(key, val);
        else if (key == "horizon") s.config.horizon = parse_int<std::size_t>(key, val);
        else if (key == "seed") s.config.seed = parse_int<std::uint64_t>(key, val);
        else if (key == "p0") s.config.p0 = parse_int<Price>(key, val);
        else if (key == "warmup") s.config.warmup = parse_int<std::size_t>(key, val);
        else if (key == "order_volume") s.config.order_volume = parse_int<Volume>(key, val);
        else if (key == "tick_size") s.config.tick_size = parse_int<Price>(key, val);
        else if (key == "qvar_iters") s.config.qvar_iters = parse_int<std::size_t>(key, val);
        else if (key == "qvar_seed") s.config.qvar_seed = parse_int<std::uint64_t>(key, val);
        else if (key == "anchor") {
            if (val == "opposite_best") s.config.anchor = LimitAnchor::opposite_best;
            else if (val == "own_best") s.config.anchor = LimitAnchor::own_best;
            else throw ContractError("config: anchor must be opposite_best or own_best");
        } else {
            throw ContractError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
    }
    validate(s.params);
    s.config.validate();
    return s;
}

SimSetup load_sim_setup(const std::filesystem::path& path, SimSetup base) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return parse_sim_setup(in, base);
}

void write_sim_setup(std::ostream& out, const SimSetup& s) {
    const auto prec = out.precision(17);
    out << "lambda0=" << s.params.lambda0 << '\n'
        << "c_lambda=" << s.params.c_lambda << '\n'
        << "delta_s=" << s.params.delta_s << '\n'
        << "alpha=" << s.params.alpha << '\n'
        << "mu=" << s.params.mu << '\n'
        << "delta=" << s.params.delta << '\n'
        << "providers=" << s.config.n_providers << '\n'
        << "takers=" << s.config.n_takers << '\n'
        << "horizon=" << s.config.horizon << '\n'
        << "seed=" << s.config.seed << '\n'
        << "p0=" << s.config.p0 << '\n'
        << "warmup=" << s.config.warmup << '\n'
        << "order_volume=" << s.config.order_volume << '\n'
        << "tick_size=" << s.config.tick_size << '\n'
        << "qvar_iters=" << s.config.qvar_iters << '\n'
        << "qvar_seed=" << s.config.qvar_seed << '\n'
        << "anchor=" << (s.config.anchor == LimitAnchor::own_best ? "own_best" : "opposite_best") << '\n';
    out.precision(prec);
}

} // namespace simlob::sim
