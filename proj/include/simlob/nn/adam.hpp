#pragma once

#include <cstddef>
#include <vector>

#include "simlob/nn/tensor.hpp"

namespace simlob::nn {

template <typename T>
struct AdamState {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::vector<Tensor<T>> m;
    std::vector<Tensor<T>> v;
    std::size_t step = 0;
};

template <typename T>
AdamState<T> make_adam(const ParameterList<T>& params, double lr = 1e-4) {
    AdamState<T> s;
    s.lr = lr;
    for (const auto& p : params) {
        s.m.emplace_back(p.value.shape);
        s.v.emplace_back(p.value.shape);
    }
    return s;
}

// Bias-corrected Adam update of every parameter.
template <typename T>
void adam_step(ParameterList<T>& params, const Gradients<T>& grads, AdamState<T>& s);

extern template void adam_step<float>(ParameterList<float>&, const Gradients<float>&, AdamState<float>&);
extern template void adam_step<double>(ParameterList<double>&, const Gradients<double>&, AdamState<double>&);

} // namespace simlob::nn
