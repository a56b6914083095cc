#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "simlob/data/segment.hpp"
#include "simlob/model/simlob.hpp"

namespace simlob::model {

struct AttentionExport {
    std::size_t tau = 0;
    std::size_t heads = 0;
    // heads matrices of tau x tau, row-major, row = query step.
    std::vector<std::vector<double>> matrices;
    std::vector<double> mid_prices; // raw units, one per step
};

// Attention weights of the first encoder block for one raw (unnormalized) segment.
template <typename T>
AttentionExport export_attention(const SimLobModel<T>& model, const data::Segment& raw);

struct FeatureImportance {
    std::vector<std::string> feature_labels; // 40
    std::vector<double> feature;             // mean |w| over the d outputs, per input column
    std::vector<double> latent;              // mean |w| over the 40 inputs, per output unit
};

// Absolute-value means of the first per-step affine matrix [40, d] along each axis.
template <typename T>
FeatureImportance export_feature_importance(const SimLobModel<T>& model);
FeatureImportance feature_importance(const nn::Tensor<double>& w);

// "L1_bid_price", "L1_bid_volume", "L1_ask_price", ...
std::string feature_label(std::size_t column);

void write_attention_csv(const std::filesystem::path& dir, const AttentionExport& a);
void write_importance_csv(const std::filesystem::path& dir, const FeatureImportance& f);

} // namespace simlob::model
