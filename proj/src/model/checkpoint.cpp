#include "simlob/model/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "simlob/error.hpp"

namespace simlob::model {
namespace {

constexpr char kMagic[4] = {'S', 'L', 'O', 'B'};
constexpr std::uint32_t kMaxRank = 8;
constexpr std::uint32_t kMaxName = 4096;

void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw IoError("checkpoint: truncated file");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

std::uint64_t get_u64(std::istream& in) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8)) throw IoError("checkpoint: truncated file");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

std::uint32_t narrow(std::size_t v, const char* what) {
    if (v > 0xFFFFFFFFu) throw ContractError(std::string("checkpoint: ") + what + " too large");
    return static_cast<std::uint32_t>(v);
}

} // namespace

void save_checkpoint(std::ostream& out, const SimLobModel<float>& model) {
    const ModelConfig& c = model.config();
    const auto [h1, h2] = c.hidden_widths();
    out.write(kMagic, 4);
    put_u32(out, kCheckpointVersion);
    for (std::size_t v : {c.tau, c.features, c.d_model, c.layers, c.latent, c.heads, c.ffn_mult, h1, h2}) {
        put_u32(out, narrow(v, "config field"));
    }
    put_u32(out, c.positional_encoding ? 1 : 0);
    const data::NormStats& n = model.norm();
    for (double v : {n.price_center, n.price_scale, n.volume_center, n.volume_scale}) put_u64(out, std::bit_cast<std::uint64_t>(v));

    const auto& params = model.parameters();
    put_u32(out, narrow(params.size(), "tensor count"));
    for (const auto& p : params) {
        put_u32(out, narrow(p.name.size(), "name"));
        out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
        put_u32(out, narrow(p.value.shape.size(), "rank"));
        for (std::size_t d : p.value.shape) put_u32(out, narrow(d, "dimension"));
        for (float v : p.value.data) put_u32(out, std::bit_cast<std::uint32_t>(v));
    }
    if (!out) throw IoError("checkpoint: write failed");
}

void save_checkpoint(const std::filesystem::path& path, const SimLobModel<float>& model) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("checkpoint: cannot open " + path.string() + " for writing");
    save_checkpoint(out, model);
    out.flush();
    if (!out) throw IoError("checkpoint: write failed for " + path.string());
}

SimLobModel<float> load_checkpoint(std::istream& in) {
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw IoError("checkpoint: bad magic");
    const std::uint32_t version = get_u32(in);
    if (version != kCheckpointVersion) throw IoError("checkpoint: unsupported version " + std::to_string(version));

    ModelConfig c;
    c.tau = get_u32(in);
    c.features = get_u32(in);
    c.d_model = get_u32(in);
    c.layers = get_u32(in);
    c.latent = get_u32(in);
    c.heads = get_u32(in);
    c.ffn_mult = get_u32(in);
    c.reduce_hidden1 = get_u32(in);
    c.reduce_hidden2 = get_u32(in);
    c.positional_encoding = get_u32(in) != 0;
    try {
        c.validate();
    } catch (const ContractError& e) {
        throw IoError(std::string("checkpoint: invalid config: ") + e.what());
    }

    data::NormStats norm;
    norm.price_center = std::bit_cast<double>(get_u64(in));
    norm.price_scale = std::bit_cast<double>(get_u64(in));
    norm.volume_center = std::bit_cast<double>(get_u64(in));
    norm.volume_scale = std::bit_cast<double>(get_u64(in));

    const std::uint32_t count = get_u32(in);
    nn::ParameterList<float> params;
    params.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t len = get_u32(in);
        if (len > kMaxName) throw IoError("checkpoint: tensor name too long");
        std::string name(len, '\0');
        if (!in.read(name.data(), len)) throw IoError("checkpoint: truncated tensor name");
        const std::uint32_t rank = get_u32(in);
        if (rank == 0 || rank > kMaxRank) throw IoError("checkpoint: bad rank for " + name);
        nn::Shape shape(rank);
        for (auto& d : shape) d = get_u32(in);
        nn::Tensor<float> t(shape);
        for (auto& v : t.data) v = std::bit_cast<float>(get_u32(in));
        params.push_back({std::move(name), std::move(t)});
    }
    try {
        return SimLobModel<float>(c, std::move(params), norm);
    } catch (const ContractError& e) {
        throw IoError(std::string("checkpoint: ") + e.what());
    }
}

SimLobModel<float> load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("checkpoint: cannot open " + path.string());
    return load_checkpoint(in);
}

SimLobModel<double> to_double(const SimLobModel<float>& model) {
    nn::ParameterList<double> params;
    for (const auto& p : model.parameters()) {
        nn::Tensor<double> t(p.value.shape);
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = p.value[i];
        params.push_back({p.name, std::move(t)});
    }
    return SimLobModel<double>(model.config(), std::move(params), model.norm());
}

} // namespace simlob::model
