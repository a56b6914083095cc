#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "simlob/data/normalizer.hpp"
#include "simlob/data/segment.hpp"
#include "simlob/sim/pgps.hpp"

namespace simlob::data {

// n tuples, each coordinate uniform within the sampling box.
std::vector<sim::PgpsParams> sample_param_tuples(std::size_t n, std::uint64_t seed,
                                                 const sim::ParamBounds& bounds = sim::table_bounds());

using SimulateFn = std::function<std::vector<lob::LobSnapshot>(const sim::PgpsParams&, const sim::SimConfig&)>;

struct DatasetOptions {
    std::size_t n_tuples = 2000;
    std::size_t steps = 50000;
    std::size_t tau = kDefaultTau;
    double split = 0.8;
    std::uint64_t seed = 0;
    sim::SimConfig sim;          // horizon and seed are overwritten per tuple
    std::size_t max_retries = 3;  // resamples after a failed simulation
    std::size_t workers = 0;      // 0: SIMLOB_WORKERS / hardware concurrency
    SimulateFn simulate;          // defaults to sim::simulate
};

struct TupleInfo {
    std::size_t id = 0;
    sim::PgpsParams params;
    std::uint64_t sim_seed = 0;
    std::size_t attempts = 1;
};

struct ShardInfo {
    std::string path;  // relative to the dataset directory
    std::string split; // "train" or "test"
    std::size_t tuple_id = 0;
    std::size_t segments = 0;
    std::uint32_t crc32 = 0;
    std::vector<std::size_t> offsets;  // source offset of each segment
};

struct DatasetManifest {
    std::size_t n_tuples = 0;
    std::size_t steps = 0;
    std::size_t tau = kDefaultTau;
    double split_fraction = 0.8;
    std::uint64_t seed = 0;
    std::int64_t tick_size = 1;
    std::string padding;
    NormStats norm;
    std::size_t train_segments = 0;
    std::size_t test_segments = 0;
    std::vector<TupleInfo> tuples;
    std::vector<ShardInfo> shards;
};

inline constexpr const char* kManifestName = "manifest.json";
inline constexpr const char* kPaddingRule =
    "missing levels: price steps one tick outward from the last occupied price, volume 0; "
    "an empty side starts one tick beyond the opposite best; an empty book starts each side "
    "from the last best price that side had";

// Simulates every tuple, cuts non-overlapping tau windows, splits them
// (deterministically under seed), fits NormStats on the training split only,
// and writes LOBS1 shards plus manifest.json under out_dir.
DatasetManifest build_dataset(const DatasetOptions& options, const std::filesystem::path& out_dir);

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
DatasetManifest read_manifest(const std::filesystem::path& path);

// Raw (unnormalized) segments of one split, in manifest order. Verifies shard checksums.
std::vector<Segment> load_split(const DatasetManifest& manifest, const std::filesystem::path& dir,
                                const std::string& split);

std::uint32_t file_crc32(const std::filesystem::path& path);

} // namespace simlob::data
