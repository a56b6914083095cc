#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include "simlob/nn/tensor.hpp"

namespace simlob::nn {

// Reverse-mode tape. Nodes are appended in evaluation order, so walking the
// node list backwards is a reverse topological order and each node is visited
// once. Every op output is checked for NaN/Inf; so is every gradient.
//
// Parameter nodes reference the caller's tensor (no copy); it must outlive the
// tape and stay unmodified until backward() returns.
template <typename T>
class Tape {
public:
    struct Var {
        std::size_t id = std::numeric_limits<std::size_t>::max();
    };

    Var constant(Tensor<T> value);
    Var parameter(std::size_t index, const Tensor<T>& value);

    const Tensor<T>& value(Var v) const;
    std::size_t size() const { return nodes_.size(); }

    // x[n, k] * w[k, m]
    Var matmul(Var x, Var w);
    // x[n, k] * w[k, m] + b[m]
    Var affine(Var x, Var w, Var b);
    Var add(Var a, Var b);
    Var gelu(Var x);
    // Normalizes each row over the last dimension.
    Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);
    // Scaled dot-product attention over rows grouped into sequences of seq_len.
    // q, k, v: [batch * seq_len, d]; heads split d into contiguous blocks of d / heads.
    // Returns the concatenated per-head outputs, [batch * seq_len, d].
    Var attention(Var q, Var k, Var v, std::size_t seq_len, std::size_t heads);
    Var reshape(Var x, Shape shape);
    // Mean of squared differences over all entries; scalar.
    Var mse(Var a, Var b);
    // sum(weights * x); scalar. Handy as a generic scalar head for gradient checks.
    Var weighted_sum(Var x, Tensor<T> weights);

    // Softmax weights saved by an attention node, laid out [batch, heads, seq, seq].
    const AlignedVector<T>& attention_weights(Var attention_output) const;

    // Accumulates d(loss)/d(param) into grads[param index]. loss must be scalar.
    void backward(Var loss, Gradients<T>& grads);

private:
    enum class Op { constant, parameter, matmul, affine, add, gelu, layer_norm, attention, reshape, mse, weighted_sum };

    struct Node {
        Op op = Op::constant;
        Tensor<T> own;
        const Tensor<T>* external = nullptr;
        Tensor<T> grad;
        std::size_t in[3] = {0, 0, 0};
        std::size_t param_index = 0;
        bool needs_grad = false;
        AlignedVector<T> aux;   // saved forward state
        AlignedVector<T> aux2;
        std::size_t seq_len = 0;
        std::size_t heads = 0;

        const Tensor<T>& value() const { return external ? *external : own; }
    };

    static const char* op_name(Op op);
    Node& node(Var v);
    const Node& node(Var v) const;
    Var push(Node n);
    Tensor<T>& grad_of(std::size_t id);
    void backprop(std::size_t id);

    std::vector<Node> nodes_;
};

extern template class Tape<float>;
extern template class Tape<double>;

} // namespace simlob::nn
