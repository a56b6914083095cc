#include "simlob/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>
#include <zlib.h>

#include "simlob/error.hpp"
#include "simlob/lob/lobs_file.hpp"
#include "simlob/parallel.hpp"
#include "simlob/sim/rng.hpp"

namespace simlob::data {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kSampleStream = 0x5A3D;
constexpr std::uint64_t kSplitStream = 0x5B17;
constexpr std::uint64_t kSimSeedStream = 0x51E5;

sim::PgpsParams sample_one(sim::CounterRng& rng, const sim::ParamBounds& b) {
    sim::ParamVector w{};
    for (std::size_t k = 0; k < sim::kParamCount; ++k) {
        w[k] = b.lower[k] + (b.upper[k] - b.lower[k]) * rng.uniform();
    }
    return sim::from_vector(w);
}

json params_json(const sim::PgpsParams& p) {
    return {{"lambda0", p.lambda0}, {"c_lambda", p.c_lambda}, {"delta_s", p.delta_s},
            {"alpha", p.alpha},     {"mu", p.mu},             {"delta", p.delta}};
}

sim::PgpsParams params_from_json(const json& j) {
    sim::PgpsParams p;
    p.lambda0 = j.at("lambda0");
    p.c_lambda = j.at("c_lambda");
    p.delta_s = j.at("delta_s");
    p.alpha = j.at("alpha");
    p.mu = j.at("mu");
    p.delta = j.at("delta");
    return p;
}

} // namespace

std::vector<sim::PgpsParams> sample_param_tuples(std::size_t n, std::uint64_t seed, const sim::ParamBounds& bounds) {
    if (n == 0) throw ContractError("sample_param_tuples: n must be positive");
    std::vector<sim::PgpsParams> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        sim::CounterRng rng(seed, kSampleStream, i);
        out.push_back(sample_one(rng, bounds));
    }
    return out;
}

std::uint32_t file_crc32(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    uLong crc = crc32(0L, Z_NULL, 0);
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        const auto got = in.gcount();
        if (got > 0) crc = crc32(crc, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(got));
    }
    return static_cast<std::uint32_t>(crc);
}

DatasetManifest build_dataset(const DatasetOptions& opt, const fs::path& out_dir) {
    if (opt.n_tuples == 0) throw ContractError("build_dataset: need at least one tuple");
    if (opt.tau == 0 || opt.steps < opt.tau) throw ContractError("build_dataset: steps must be >= tau");
    if (!(opt.split > 0.0 && opt.split < 1.0)) throw ContractError("build_dataset: split must lie in (0, 1)");

    const SimulateFn simulate = opt.simulate ? opt.simulate : SimulateFn(&sim::simulate);
    const std::size_t workers = opt.workers ? opt.workers : worker_count();

    // Simulate and segment each tuple; a failed tuple is resampled.
    std::vector<TupleInfo> tuples(opt.n_tuples);
    std::vector<std::vector<lob::LobSnapshot>> series(opt.n_tuples);
    parallel_for(opt.n_tuples, workers, [&](std::size_t i) {
        for (std::size_t attempt = 0;; ++attempt) {
            // Attempt 0 draws the same tuple as sample_param_tuples(n, seed)[i].
            sim::CounterRng rng(opt.seed, kSampleStream + attempt * 0x10000, i);
            TupleInfo info;
            info.id = i;
            info.params = sample_one(rng, sim::table_bounds());
            info.sim_seed = sim::mix_key(sim::mix_key(opt.seed, kSimSeedStream + attempt), i);
            info.attempts = attempt + 1;
            sim::SimConfig cfg = opt.sim;
            cfg.horizon = opt.steps;
            cfg.seed = info.sim_seed;
            try {
                series[i] = simulate(info.params, cfg);
                if (series[i].size() != opt.steps) throw ContractError("simulator returned wrong length");
                tuples[i] = info;
                return;
            } catch (const std::exception& e) {
                spdlog::warn("tuple {} attempt {} failed: {}", i, attempt + 1, e.what());
                if (attempt >= opt.max_retries) {
                    throw ContractError("tuple " + std::to_string(i) + " failed after " +
                                        std::to_string(attempt + 1) + " attempts: " + e.what());
                }
            }
        }
    });

    // Deterministic global split over (tuple, window) pairs.
    const std::size_t per_tuple = opt.steps / opt.tau;
    const std::size_t total = per_tuple * opt.n_tuples;
    std::vector<std::size_t> order(total);
    for (std::size_t k = 0; k < total; ++k) order[k] = k;
    sim::CounterRng split_rng(opt.seed, kSplitStream, 0);
    for (std::size_t k = total; k > 1; --k) {
        std::swap(order[k - 1], order[split_rng.below(k)]);
    }
    const auto n_train = static_cast<std::size_t>(std::llround(opt.split * static_cast<double>(total)));
    std::vector<char> is_train(total, 0);
    for (std::size_t k = 0; k < n_train; ++k) is_train[order[k]] = 1;

    fs::create_directories(out_dir / "shards");
    DatasetManifest m;
    m.n_tuples = opt.n_tuples;
    m.steps = opt.steps;
    m.tau = opt.tau;
    m.split_fraction = opt.split;
    m.seed = opt.seed;
    m.tick_size = opt.sim.tick_size;
    m.padding = kPaddingRule;
    m.tuples = tuples;

    std::vector<Segment> train_segments;
    for (std::size_t i = 0; i < opt.n_tuples; ++i) {
        for (const char* split : {"train", "test"}) {
            const bool want_train = std::string(split) == "train";
            std::vector<lob::LobSnapshot> records;
            ShardInfo shard;
            shard.split = split;
            shard.tuple_id = i;
            for (std::size_t w = 0; w < per_tuple; ++w) {
                if (static_cast<bool>(is_train[i * per_tuple + w]) != want_train) continue;
                const std::size_t start = w * opt.tau;
                auto window = std::span<const lob::LobSnapshot>(series[i]).subspan(start, opt.tau);
                records.insert(records.end(), window.begin(), window.end());
                shard.offsets.push_back(start);
                if (want_train) train_segments.push_back(make_segment(window, SegmentSource{i, start}));
            }
            shard.segments = shard.offsets.size();
            if (shard.segments == 0) continue;
            char name[64];
            std::snprintf(name, sizeof(name), "shards/tuple_%05zu_%s.lobs", i, split);
            shard.path = name;
            lob::write_lobs(out_dir / shard.path, records, opt.sim.tick_size);
            shard.crc32 = file_crc32(out_dir / shard.path);
            (want_train ? m.train_segments : m.test_segments) += shard.segments;
            m.shards.push_back(std::move(shard));
        }
        series[i].clear();
        series[i].shrink_to_fit();
    }
    m.norm = fit_normalizer(train_segments);
    write_manifest(out_dir / kManifestName, m);
    spdlog::info("dataset: {} tuples, {} train / {} test segments", m.n_tuples, m.train_segments, m.test_segments);
    return m;
}

void write_manifest(const fs::path& path, const DatasetManifest& m) {
    json j;
    j["format"] = "simlob-dataset";
    j["version"] = 1;
    j["n_tuples"] = m.n_tuples;
    j["steps"] = m.steps;
    j["tau"] = m.tau;
    j["split_fraction"] = m.split_fraction;
    j["seed"] = m.seed;
    j["tick_size"] = m.tick_size;
    j["padding"] = m.padding;
    j["norm"] = {{"price_center", m.norm.price_center},
                 {"price_scale", m.norm.price_scale},
                 {"volume_center", m.norm.volume_center},
                 {"volume_scale", m.norm.volume_scale}};
    j["train_segments"] = m.train_segments;
    j["test_segments"] = m.test_segments;
    j["tuples"] = json::array();
    for (const auto& t : m.tuples) {
        j["tuples"].push_back({{"id", t.id}, {"params", params_json(t.params)}, {"sim_seed", t.sim_seed},
                               {"attempts", t.attempts}});
    }
    j["shards"] = json::array();
    for (const auto& s : m.shards) {
        j["shards"].push_back({{"path", s.path}, {"split", s.split}, {"tuple_id", s.tuple_id},
                               {"segments", s.segments}, {"crc32", s.crc32}, {"offsets", s.offsets}});
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

DatasetManifest read_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    DatasetManifest m;
    try {
        const json j = json::parse(in);
        if (j.at("format") != "simlob-dataset") throw IoError("not a simlob dataset manifest");
        m.n_tuples = j.at("n_tuples");
        m.steps = j.at("steps");
        m.tau = j.at("tau");
        m.split_fraction = j.at("split_fraction");
        m.seed = j.at("seed");
        m.tick_size = j.at("tick_size");
        m.padding = j.at("padding");
        const json& n = j.at("norm");
        m.norm = NormStats{n.at("price_center"), n.at("price_scale"), n.at("volume_center"), n.at("volume_scale")};
        m.train_segments = j.at("train_segments");
        m.test_segments = j.at("test_segments");
        for (const json& t : j.at("tuples")) {
            m.tuples.push_back(TupleInfo{t.at("id"), params_from_json(t.at("params")), t.at("sim_seed"), t.at("attempts")});
        }
        for (const json& s : j.at("shards")) {
            ShardInfo info;
            info.path = s.at("path");
            info.split = s.at("split");
            info.tuple_id = s.at("tuple_id");
            info.segments = s.at("segments");
            info.crc32 = s.at("crc32");
            info.offsets = s.at("offsets").get<std::vector<std::size_t>>();
            m.shards.push_back(std::move(info));
        }
    } catch (const json::exception& e) {
        throw IoError("manifest " + path.string() + ": " + e.what());
    }
    return m;
}

std::vector<Segment> load_split(const DatasetManifest& m, const fs::path& dir, const std::string& split) {
    std::vector<Segment> out;
    for (const ShardInfo& s : m.shards) {
        if (s.split != split) continue;
        const fs::path p = dir / s.path;
        if (file_crc32(p) != s.crc32) throw IoError("checksum mismatch for " + p.string());
        const lob::LobsFile file = lob::read_lobs(p);
        if (file.snapshots.size() != s.segments * m.tau) throw IoError("record count mismatch in " + p.string());
        for (std::size_t k = 0; k < s.segments; ++k) {
            auto window = std::span<const lob::LobSnapshot>(file.snapshots).subspan(k * m.tau, m.tau);
            out.push_back(make_segment(window, SegmentSource{s.tuple_id, s.offsets.at(k)}));
        }
    }
    return out;
}

} // namespace simlob::data
