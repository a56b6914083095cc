#include "simlob/model/config.hpp"

#include <bit>
#include <cmath>
#include <string>

#include "simlob/error.hpp"

namespace simlob::model {

void ModelConfig::validate() const {
    if (tau == 0 || features == 0 || d_model == 0 || latent == 0 || heads == 0 || ffn_mult == 0) {
        throw ContractError("model config: all sizes must be positive");
    }
    if (d_model % heads != 0) {
        throw ContractError("model config: d_model " + std::to_string(d_model) + " not divisible by heads " +
                            std::to_string(heads));
    }
    if (latent > flat_width()) throw ContractError("model config: latent length exceeds 40*tau");
}

std::array<std::size_t, 2> ModelConfig::hidden_widths() const {
    auto pick = [&](std::size_t given, double power) -> std::size_t {
        if (given) return given;
        const double ratio = static_cast<double>(latent) / static_cast<double>(flat_width());
        const double w = static_cast<double>(flat_width()) * std::pow(ratio, power);
        const auto floor_w = static_cast<std::size_t>(std::max(1.0, std::floor(w + 1e-9)));
        return std::max<std::size_t>(std::bit_floor(floor_w), latent);
    };
    return {pick(reduce_hidden1, 1.0 / 3.0), pick(reduce_hidden2, 2.0 / 3.0)};
}

} // namespace simlob::model
