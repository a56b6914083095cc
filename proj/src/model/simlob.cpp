#include "simlob/model/simlob.hpp"

#include <cmath>
#include <random>

#include "simlob/error.hpp"

namespace simlob::model {

template <typename T>
void SimLobModel<T>::build_layout(std::vector<std::pair<std::string, nn::Shape>>* specs) {
    const ModelConfig& c = config_;
    const std::size_t d = c.d_model;
    const std::size_t f = c.features;
    const auto [h1, h2] = c.hidden_widths();
    const std::size_t flat = c.flat_width();

    auto add = [&](const std::string& name, nn::Shape shape) {
        specs->emplace_back(name, std::move(shape));
        return specs->size() - 1;
    };
    auto make_block = [&](const std::string& prefix) {
        BlockIndex b{};
        b.ln1_g = add(prefix + ".ln1.g", {d});
        b.ln1_b = add(prefix + ".ln1.b", {d});
        b.wq = add(prefix + ".attn.wq", {d, d});
        b.bq = add(prefix + ".attn.bq", {d});
        b.wk = add(prefix + ".attn.wk", {d, d});
        b.bk = add(prefix + ".attn.bk", {d});
        b.wv = add(prefix + ".attn.wv", {d, d});
        b.bv = add(prefix + ".attn.bv", {d});
        b.wo = add(prefix + ".attn.wo", {d, d});
        b.bo = add(prefix + ".attn.bo", {d});
        b.ln2_g = add(prefix + ".ln2.g", {d});
        b.ln2_b = add(prefix + ".ln2.b", {d});
        b.ffn1_w = add(prefix + ".ffn1.w", {d, d * c.ffn_mult});
        b.ffn1_b = add(prefix + ".ffn1.b", {d * c.ffn_mult});
        b.ffn2_w = add(prefix + ".ffn2.w", {d * c.ffn_mult, d});
        b.ffn2_b = add(prefix + ".ffn2.b", {d});
        return b;
    };

    Layout& L = layout_;
    L.fcn1_w = add("enc.fcn1.w", {f, d});
    L.fcn1_b = add("enc.fcn1.b", {d});
    L.enc_blocks.clear();
    for (std::size_t l = 0; l < c.layers; ++l) L.enc_blocks.push_back(make_block("enc.block" + std::to_string(l)));
    L.proj_w = add("enc.proj.w", {d, f});
    L.proj_b = add("enc.proj.b", {f});
    const std::size_t red[4] = {flat, h1, h2, c.latent};
    for (int i = 0; i < 3; ++i) {
        L.red_w[i] = add("enc.reduce" + std::to_string(i + 1) + ".w", {red[i], red[i + 1]});
        L.red_b[i] = add("enc.reduce" + std::to_string(i + 1) + ".b", {red[i + 1]});
    }
    const std::size_t expand[4] = {c.latent, h2, h1, flat};
    for (int i = 0; i < 3; ++i) {
        L.exp_w[i] = add("dec.expand" + std::to_string(i + 1) + ".w", {expand[i], expand[i + 1]});
        L.exp_b[i] = add("dec.expand" + std::to_string(i + 1) + ".b", {expand[i + 1]});
    }
    L.dec_in_w = add("dec.proj.w", {f, d});
    L.dec_in_b = add("dec.proj.b", {d});
    L.dec_blocks.clear();
    for (std::size_t l = 0; l < c.layers; ++l) L.dec_blocks.push_back(make_block("dec.block" + std::to_string(l)));
    L.out_w = add("dec.fcn1.w", {d, f});
    L.out_b = add("dec.fcn1.b", {f});
}

template <typename T>
SimLobModel<T>::SimLobModel(const ModelConfig& config, std::uint64_t seed) : config_(config) {
    config_.validate();
    const auto widths = config_.hidden_widths();
    config_.reduce_hidden1 = widths[0];
    config_.reduce_hidden2 = widths[1];
    std::vector<std::pair<std::string, nn::Shape>> specs;
    build_layout(&specs);

    // Layer norms start at identity; every affine weight and bias is
    // U(-1/sqrt(fan_in), 1/sqrt(fan_in)) with fan_in from the weight's first dim.
    std::mt19937_64 rng(seed);
    auto uniform = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    std::size_t fan_in = 1;
    params_.reserve(specs.size());
    for (auto& [name, shape] : specs) {
        nn::Parameter<T> p{name, nn::Tensor<T>(shape)};
        const bool is_gain = name.ends_with(".g");
        const bool is_ln_bias = name.find(".ln") != std::string::npos && name.ends_with(".b");
        if (is_gain) {
            for (auto& v : p.value.data) v = T(1);
        } else if (!is_ln_bias) {
            if (shape.size() == 2) fan_in = shape[0];
            const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
            for (auto& v : p.value.data) v = static_cast<T>((2.0 * uniform() - 1.0) * bound);
        }
        params_.push_back(std::move(p));
    }
}

template <typename T>
SimLobModel<T>::SimLobModel(const ModelConfig& config, nn::ParameterList<T> params, data::NormStats norm)
    : config_(config), params_(std::move(params)), norm_(norm) {
    config_.validate();
    const auto widths = config_.hidden_widths();
    config_.reduce_hidden1 = widths[0];
    config_.reduce_hidden2 = widths[1];
    std::vector<std::pair<std::string, nn::Shape>> specs;
    build_layout(&specs);
    if (specs.size() != params_.size()) throw ContractError("model: parameter count does not match config");
    for (std::size_t i = 0; i < specs.size(); ++i) {
        if (specs[i].first != params_[i].name || specs[i].second != params_[i].value.shape ||
            params_[i].value.size() != nn::shape_size(specs[i].second)) {
            throw ContractError("model: unexpected tensor '" + params_[i].name + "' " +
                                nn::shape_string(params_[i].value.shape) + ", expected '" + specs[i].first +
                                "' " + nn::shape_string(specs[i].second));
        }
        if (!nn::all_finite(params_[i].value)) throw NumericError("model: non-finite values in " + params_[i].name);
    }
}

template <typename T>
std::size_t SimLobModel<T>::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
}

template <typename T>
std::size_t SimLobModel<T>::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (params_[i].name == name) return i;
    }
    throw ContractError("model: no parameter named " + std::string(name));
}

template <typename T>
typename SimLobModel<T>::Var SimLobModel<T>::add_positions(Tape& tape, Var h, std::size_t batch) const {
    if (!config_.positional_encoding) return h;
    const std::vector<double> table = sinusoidal_positions(config_.tau, config_.d_model);
    nn::Tensor<T> pe({batch * config_.tau, config_.d_model});
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t i = 0; i < table.size(); ++i) pe[b * table.size() + i] = static_cast<T>(table[i]);
    }
    return tape.add(h, tape.constant(std::move(pe)));
}

template <typename T>
typename SimLobModel<T>::Var SimLobModel<T>::block(Tape& tape, Var h, const BlockIndex& b, std::size_t /*batch*/,
                                                   std::vector<Var>* attention) const {
    Var a = tape.layer_norm(h, param(tape, b.ln1_g), param(tape, b.ln1_b));
    Var q = tape.affine(a, param(tape, b.wq), param(tape, b.bq));
    Var k = tape.affine(a, param(tape, b.wk), param(tape, b.bk));
    Var v = tape.affine(a, param(tape, b.wv), param(tape, b.bv));
    Var att = tape.attention(q, k, v, config_.tau, config_.heads);
    if (attention) attention->push_back(att);
    Var h1 = tape.add(tape.affine(att, param(tape, b.wo), param(tape, b.bo)), h);

    Var n2 = tape.layer_norm(h1, param(tape, b.ln2_g), param(tape, b.ln2_b));
    Var f = tape.gelu(tape.affine(n2, param(tape, b.ffn1_w), param(tape, b.ffn1_b)));
    f = tape.affine(f, param(tape, b.ffn2_w), param(tape, b.ffn2_b));
    return tape.add(f, h1);
}

template <typename T>
typename SimLobModel<T>::Var SimLobModel<T>::encode(Tape& tape, Var x, std::size_t batch,
                                                    std::vector<Var>* attention) const {
    const Layout& L = layout_;
    const auto& xs = tape.value(x);
    if (xs.rows() != batch * config_.tau || xs.cols() != config_.features) {
        throw ContractError("encode: expected input [" + std::to_string(batch * config_.tau) + ", " +
                            std::to_string(config_.features) + "], got " + nn::shape_string(xs.shape));
    }
    Var h = tape.affine(x, param(tape, L.fcn1_w), param(tape, L.fcn1_b));
    h = add_positions(tape, h, batch);
    for (const BlockIndex& b : L.enc_blocks) h = block(tape, h, b, batch, attention);
    h = tape.affine(h, param(tape, L.proj_w), param(tape, L.proj_b));
    h = tape.reshape(h, {batch, config_.flat_width()});
    for (int i = 0; i < 3; ++i) {
        h = tape.affine(h, param(tape, L.red_w[i]), param(tape, L.red_b[i]));
        if (i < 2) h = tape.gelu(h);
    }
    return h;
}

template <typename T>
typename SimLobModel<T>::Var SimLobModel<T>::decode(Tape& tape, Var z, std::size_t batch,
                                                    std::vector<Var>* attention) const {
    const Layout& L = layout_;
    const auto& zs = tape.value(z);
    if (zs.rows() != batch || zs.cols() != config_.latent) {
        throw ContractError("decode: expected latent [" + std::to_string(batch) + ", " +
                            std::to_string(config_.latent) + "], got " + nn::shape_string(zs.shape));
    }
    Var h = z;
    for (int i = 0; i < 3; ++i) {
        h = tape.affine(h, param(tape, L.exp_w[i]), param(tape, L.exp_b[i]));
        if (i < 2) h = tape.gelu(h);
    }
    h = tape.reshape(h, {batch * config_.tau, config_.features});
    h = tape.affine(h, param(tape, L.dec_in_w), param(tape, L.dec_in_b));
    h = add_positions(tape, h, batch);
    for (const BlockIndex& b : L.dec_blocks) h = block(tape, h, b, batch, attention);
    return tape.affine(h, param(tape, L.out_w), param(tape, L.out_b));
}

template <typename T>
nn::Tensor<T> SimLobModel<T>::pack(std::span<const data::Segment> segs) const {
    nn::Tensor<T> x({segs.size() * config_.tau, config_.features});
    std::size_t k = 0;
    for (const auto& s : segs) {
        if (s.tau != config_.tau || s.values.size() != config_.tau * config_.features) {
            throw ContractError("model: segment shape does not match tau=" + std::to_string(config_.tau));
        }
        for (double v : s.values) x[k++] = static_cast<T>(v);
    }
    return x;
}

template <typename T>
std::vector<std::vector<double>> SimLobModel<T>::encode_batch(std::span<const data::Segment> segs) const {
    std::vector<std::vector<double>> out;
    if (segs.empty()) return out;
    Tape tape;
    Var z = encode(tape, tape.constant(pack(segs)), segs.size());
    const auto& zv = tape.value(z);
    out.resize(segs.size());
    for (std::size_t b = 0; b < segs.size(); ++b) {
        out[b].assign(zv.ptr() + b * config_.latent, zv.ptr() + (b + 1) * config_.latent);
    }
    return out;
}

template <typename T>
std::vector<double> SimLobModel<T>::encode(const data::Segment& normalized) const {
    return encode_batch(std::span<const data::Segment>(&normalized, 1)).front();
}

template <typename T>
data::Segment SimLobModel<T>::decode(std::span<const double> latent) const {
    if (latent.size() != config_.latent) throw ContractError("decode: latent length mismatch");
    Tape tape;
    nn::Tensor<T> z({1, config_.latent});
    for (std::size_t i = 0; i < latent.size(); ++i) z[i] = static_cast<T>(latent[i]);
    Var r = decode(tape, tape.constant(std::move(z)), 1);
    data::Segment out;
    out.tau = config_.tau;
    out.values.assign(tape.value(r).data.begin(), tape.value(r).data.end());
    return out;
}

template <typename T>
std::vector<data::Segment> SimLobModel<T>::reconstruct_batch(std::span<const data::Segment> segs) const {
    std::vector<data::Segment> out;
    if (segs.empty()) return out;
    Tape tape;
    Var z = encode(tape, tape.constant(pack(segs)), segs.size());
    Var r = decode(tape, z, segs.size());
    const auto& rv = tape.value(r);
    const std::size_t width = config_.tau * config_.features;
    for (std::size_t b = 0; b < segs.size(); ++b) {
        data::Segment s;
        s.tau = config_.tau;
        s.source = segs[b].source;
        s.values.assign(rv.ptr() + b * width, rv.ptr() + (b + 1) * width);
        out.push_back(std::move(s));
    }
    return out;
}

template <typename T>
data::Segment SimLobModel<T>::reconstruct(const data::Segment& normalized) const {
    return reconstruct_batch(std::span<const data::Segment>(&normalized, 1)).front();
}

template class SimLobModel<float>;
template class SimLobModel<double>;

double reconstruction_error(const data::Segment& x, const data::Segment& xr) {
    if (x.values.size() != xr.values.size() || x.values.empty()) {
        throw ContractError("reconstruction_error: shape mismatch");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < x.values.size(); ++i) {
        const double d = x.values[i] - xr.values[i];
        acc += d * d;
    }
    return acc / static_cast<double>(x.values.size());
}

std::vector<double> sinusoidal_positions(std::size_t tau, std::size_t d) {
    std::vector<double> pe(tau * d);
    for (std::size_t t = 0; t < tau; ++t) {
        for (std::size_t i = 0; i < d; ++i) {
            const double rate = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(d));
            pe[t * d + i] = (i % 2 == 0) ? std::sin(static_cast<double>(t) * rate) : std::cos(static_cast<double>(t) * rate);
        }
    }
    return pe;
}

} // namespace simlob::model
