#include "simlob/nn/adam.hpp"

#include <cmath>

#include "simlob/error.hpp"

namespace simlob::nn {

template <typename T>
void adam_step(ParameterList<T>& params, const Gradients<T>& grads, AdamState<T>& s) {
    if (grads.size() != params.size() || s.m.size() != params.size()) {
        throw ContractError("adam_step: parameter, gradient and moment lists differ in length");
    }
    ++s.step;
    const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
    const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
    for (std::size_t k = 0; k < params.size(); ++k) {
        Tensor<T>& p = params[k].value;
        const Tensor<T>& g = grads[k];
        Tensor<T>& m = s.m[k];
        Tensor<T>& v = s.v[k];
        if (g.size() != p.size() || m.size() != p.size()) {
            throw ContractError("adam_step: shape mismatch for " + params[k].name);
        }
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double gi = g[i];
            const double mi = s.beta1 * m[i] + (1.0 - s.beta1) * gi;
            const double vi = s.beta2 * v[i] + (1.0 - s.beta2) * gi * gi;
            m[i] = static_cast<T>(mi);
            v[i] = static_cast<T>(vi);
            p[i] = static_cast<T>(p[i] - s.lr * (mi / c1) / (std::sqrt(vi / c2) + s.eps));
        }
    }
}

template void adam_step<float>(ParameterList<float>&, const Gradients<float>&, AdamState<float>&);
template void adam_step<double>(ParameterList<double>&, const Gradients<double>&, AdamState<double>&);

} // namespace simlob::nn
