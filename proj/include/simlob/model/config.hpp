#pragma once

#include <array>
#include <cstddef>

namespace simlob::model {

struct ModelConfig {
    std::size_t tau = 100;
    std::size_t features = 40;
    std::size_t d_model = 256;
    std::size_t layers = 2;   // Transformer blocks per side
    std::size_t latent = 128; // length of Z
    std::size_t heads = 8;
    std::size_t ffn_mult = 4;
    // Hidden widths of the three-layer reduction 40*tau -> h1 -> h2 -> latent.
    // 0 picks the geometric interpolation rounded down to a power of two
    // (4000 -> 1024 -> 256 -> 128 for the defaults).
    std::size_t reduce_hidden1 = 0;
    std::size_t reduce_hidden2 = 0;
    bool positional_encoding = false;

    void validate() const;
    std::array<std::size_t, 2> hidden_widths() const;
    std::size_t flat_width() const { return features * tau; }

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

} // namespace simlob::model
