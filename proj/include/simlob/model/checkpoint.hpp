#pragma once

#include <filesystem>
#include <iosfwd>

#include "simlob/model/simlob.hpp"

namespace simlob::model {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// SLOB1 layout (little-endian): "SLOB", u32 version, config as u32 fields
// (tau, features, d_model, layers, latent, heads, ffn_mult, hidden1, hidden2,
// positional_encoding), the four normalization constants as f64, u32 tensor
// count, then per tensor: u32 name length, name bytes, u32 rank, u32 dims, f32 data.
void save_checkpoint(std::ostream& out, const SimLobModel<float>& model);
void save_checkpoint(const std::filesystem::path& path, const SimLobModel<float>& model);
SimLobModel<float> load_checkpoint(std::istream& in);
SimLobModel<float> load_checkpoint(const std::filesystem::path& path);

// Widens a float model to double for gradient checks and oracle comparisons.
SimLobModel<double> to_double(const SimLobModel<float>& model);

} // namespace simlob::model
