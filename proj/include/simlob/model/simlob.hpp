#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "simlob/data/normalizer.hpp"
#include "simlob/data/segment.hpp"
#include "simlob/model/config.hpp"
#include "simlob/nn/tape.hpp"
#include "simlob/nn/tensor.hpp"

namespace simlob::model {

// Encoder f and decoder g.
//
// encode: X[tau, 40] -> affine 40->d -> L pre-norm Transformer blocks
//         -> affine d->40 -> flatten [1, 40 tau] -> three affine layers -> Z[1, latent]
// decode mirrors the shapes with independent weights:
//         Z -> three affine layers -> [tau, 40] -> affine 40->d -> L blocks -> affine d->40
//
// Each block: h' = MSA(LN(h)) + h;  h = FFN(LN(h')) + h';  FFN = affine, GELU, affine.
// GELU sits between the three reduction/expansion layers.
template <typename T>
class SimLobModel {
public:
    using Tape = nn::Tape<T>;
    using Var = typename Tape::Var;

    SimLobModel(const ModelConfig& config, std::uint64_t seed);
    // Adopts an existing parameter list; names and shapes must match the layout for config.
    SimLobModel(const ModelConfig& config, nn::ParameterList<T> params, data::NormStats norm);

    const ModelConfig& config() const { return config_; }
    nn::ParameterList<T>& parameters() { return params_; }
    const nn::ParameterList<T>& parameters() const { return params_; }
    std::size_t parameter_count() const;
    std::size_t index_of(std::string_view name) const;
    const nn::Tensor<T>& weight(std::string_view name) const { return params_[index_of(name)].value; }

    const data::NormStats& norm() const { return norm_; }
    void set_norm(const data::NormStats& norm) { norm_ = norm; }

    // Graph construction. x is [batch * tau, 40]; z is [batch, latent].
    // When attention is non-null the attention nodes of each block are appended.
    Var encode(Tape& tape, Var x, std::size_t batch, std::vector<Var>* attention = nullptr) const;
    Var decode(Tape& tape, Var z, std::size_t batch, std::vector<Var>* attention = nullptr) const;

    // Inference on normalized segments.
    std::vector<double> encode(const data::Segment& normalized) const;
    std::vector<std::vector<double>> encode_batch(std::span<const data::Segment> normalized) const;
    data::Segment decode(std::span<const double> latent) const;
    data::Segment reconstruct(const data::Segment& normalized) const;
    std::vector<data::Segment> reconstruct_batch(std::span<const data::Segment> normalized) const;

    // Packs normalized segments into a [n * tau, 40] tensor.
    nn::Tensor<T> pack(std::span<const data::Segment> normalized) const;

private:
    struct BlockIndex {
        std::size_t ln1_g, ln1_b, wq, bq, wk, bk, wv, bv, wo, bo, ln2_g, ln2_b, ffn1_w, ffn1_b, ffn2_w, ffn2_b;
    };
    struct Layout {
        std::size_t fcn1_w, fcn1_b;
        std::vector<BlockIndex> enc_blocks;
        std::size_t proj_w, proj_b;
        std::size_t red_w[3], red_b[3];
        std::size_t exp_w[3], exp_b[3];
        std::size_t dec_in_w, dec_in_b;
        std::vector<BlockIndex> dec_blocks;
        std::size_t out_w, out_b;
    };

    void build_layout(std::vector<std::pair<std::string, nn::Shape>>* specs);
    Var param(Tape& tape, std::size_t index) const { return tape.parameter(index, params_[index].value); }
    Var block(Tape& tape, Var h, const BlockIndex& b, std::size_t batch, std::vector<Var>* attention) const;
    Var add_positions(Tape& tape, Var h, std::size_t batch) const;

    ModelConfig config_;
    nn::ParameterList<T> params_;
    Layout layout_{};
    data::NormStats norm_;
};

extern template class SimLobModel<float>;
extern template class SimLobModel<double>;

// Err_r: mean squared entrywise difference between two equally shaped segments.
double reconstruction_error(const data::Segment& x, const data::Segment& xr);

// Sinusoidal table [tau, d].
std::vector<double> sinusoidal_positions(std::size_t tau, std::size_t d);

} // namespace simlob::model
