#include "simlob/nn/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Core>

#include "simlob/error.hpp"

namespace simlob::nn {
namespace {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapM = Eigen::Map<Mat<T>>;
template <typename T>
using CMapM = Eigen::Map<const Mat<T>>;
template <typename T>
using StridedM = Eigen::Map<Mat<T>, 0, Eigen::OuterStride<>>;
template <typename T>
using CStridedM = Eigen::Map<const Mat<T>, 0, Eigen::OuterStride<>>;

template <typename T>
MapM<T> as_mat(Tensor<T>& t) {
    return MapM<T>(t.ptr(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols()));
}
template <typename T>
CMapM<T> as_mat(const Tensor<T>& t) {
    return CMapM<T>(t.ptr(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols()));
}

void require(bool ok, const std::string& what) {
    if (!ok) throw ContractError(what);
}

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

} // namespace

template <typename T>
const char* Tape<T>::op_name(Op op) {
    switch (op) {
    case Op::constant: return "constant";
    case Op::parameter: return "parameter";
    case Op::matmul: return "matmul";
    case Op::affine: return "affine";
    case Op::add: return "add";
    case Op::gelu: return "gelu";
    case Op::layer_norm: return "layer_norm";
    case Op::attention: return "attention";
    case Op::reshape: return "reshape";
    case Op::mse: return "mse";
    case Op::weighted_sum: return "weighted_sum";
    }
    return "?";
}

template <typename T>
typename Tape<T>::Node& Tape<T>::node(Var v) {
    require(v.id < nodes_.size(), "tape: invalid variable");
    return nodes_[v.id];
}

template <typename T>
const typename Tape<T>::Node& Tape<T>::node(Var v) const {
    require(v.id < nodes_.size(), "tape: invalid variable");
    return nodes_[v.id];
}

template <typename T>
const Tensor<T>& Tape<T>::value(Var v) const {
    return node(v).value();
}

template <typename T>
typename Tape<T>::Var Tape<T>::push(Node n) {
    if (n.op != Op::parameter && !all_finite(n.value())) {
        throw NumericError(std::string("non-finite output from op ") + op_name(n.op) + " (node " +
                           std::to_string(nodes_.size()) + ")");
    }
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
}

template <typename T>
typename Tape<T>::Var Tape<T>::constant(Tensor<T> value) {
    Node n;
    n.op = Op::constant;
    n.own = std::move(value);
    return push(std::move(n));
}

template <typename T>
typename Tape<T>::Var Tape<T>::parameter(std::size_t index, const Tensor<T>& value) {
    if (!all_finite(value)) throw NumericError("non-finite parameter " + std::to_string(index));
    Node n;
    n.op = Op::parameter;
    n.external = &value;
    n.param_index = index;
    n.needs_grad = true;
    return push(std::move(n));
}

template <typename T>
typename Tape<T>::Var Tape<T>::matmul(Var x, Var w) {
    const Tensor<T>& xv = value(x);
    const Tensor<T>& wv = value(w);
    require(wv.rank() == 2 && xv.cols() == wv.shape[0],
            "matmul: shape mismatch " + shape_string(xv.shape) + " x " + shape_string(wv.shape));
    Node n;
    n.op = Op::matmul;
    n.in[0] = x.id;
    n.in[1] = w.id;
    n.needs_grad = node(x).needs_grad || node(w).needs_grad;
    n.own = Tensor<T>({xv.rows(), wv.shape[1]});
    as_mat(n.own).noalias() = as_mat(xv) * as_mat(wv);
    return push(std::move(n));
}

template <typename T>
typename Tape<T>::Var Tape<T>::affine(Var x, Var w, Var b) {
    const Tensor<T>& xv = value(x);
    const Tensor<T>& wv = value(w);
    const Tensor<T>& bv = value(b);
    require(wv.rank() == 2 && xv.cols() == wv.shape[0],
            "affine: shape mismatch " + shape_string(xv.shape) + " x " + shape_string(wv.shape));
    require(bv.size() == wv.shape[1], "affine: bias length must equal output width");
    Node n;
    n.op = Op::affine;
    n.in[0] = x.id;
    n.in[1] = w.id;
    n.in[2] = b.id;
    n.needs_grad = node(x).needs_grad || node(w).needs_grad || node(b).needs_grad;
    n.own = Tensor<T>({xv.rows(), wv.shape[1]});
    auto y = as_mat(n.own);
    y.noalias() = as_mat(xv) * as_mat(wv);
    y.rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(bv.ptr(), static_cast<Eigen::Index>(bv.size()));
    return push(std::move(n));
}

template <typename T>
typename Tape<T>::Var Tape<T>::add(Var a, Var b) {
    const Tensor<T>& av = value(a);
    const Tensor<T>& bv = value(b);
    require(av.shape == bv.shape, "add: shape mismatch " + shape_string(av.shape) + " vs " + shape_string(bv.shape));
    Node n;
    n.op = Op::add;
    n.in[0] = a.id;
    n.in[1] = b.id;
    n.needs_grad = node(a).needs_grad || node(b).needs_grad;
    n.own = av;
    for (std::size_t i = 0; i < n.own.size(); ++i) n.own[i] += bv[i];
    return push(std::move(n));
}

template <typename T>
typename Tape<T>::Var Tape<T>::gelu(Var x) {
    const Tensor<T>& xv = value(x);
    Node n;
    n.op = Op::gelu;
    n.in[0] = x.id;
    n.needs_grad = node(x).needs_grad;
    n.own = Tensor<T>(xv.shape);
    for (std::size_t i = 0; i < xv.size(); ++i) {
        const double v = xv[i];
        n.own[i] = static_cast<T>(0.5 * v * (1.0 + std::erf(v * kInvSqrt2)));
    }
    return push(std::move(n));
}

template <typename T>
typename Tape<T>::Var Tape<T>::layer_norm(Var x, Var gain, Var bias, double eps) {
    const Tensor<T>& xv = value(x);
    const Tensor<T>& g = value(gain);
    const Tensor<T>& b = value(bias);
    const std::size_t rows = xv.rows();
    const std::size_t d = xv.cols();
    require(g.size() == d && b.size() == d, "layer_norm: gain/bias length must equal last dimension");
    Node n;
    n.op = Op::layer_norm;
    n.in[0] = x.id;
    n.in[1] = gain.id;
    n.in[2] = bias.id;
    n.needs_grad = node(x).needs_grad || node(gain).needs_grad || node(bias).needs_grad;
    n.own = Tensor<T>(xv.shape);
    n.aux.resize(xv.size());  // x_hat
    n.aux2.resize(rows);      // 1 / sigma
    for (std::size_t r = 0; r < rows; ++r) {
        const T* row = xv.ptr() + r * d;
        double mean = 0.0;
        for (std::size_t c = 0; c < d; ++c) mean += row[c];
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t c = 0; c < d; ++c) var += (row[c] - mean) * (row[c] - mean);
        var /= static_cast<double>(d);
        const double inv = 1.0 / std::sqrt(var + eps);
        n.aux2[r] = static_cast<T>(inv);
        for (std::size_t c = 0; c < d; ++c) {
            const double xhat = (row[c] - mean) * inv;
            n.aux[r * d + c] = static_cast<T>(xhat);
            n.own[r * d + c] = static_cast<T>(xhat * g[c] + b[c]);
        }
    }
    return push(std::move(n));
}

template <typename T>
typename Tape<T>::Var Tape<T>::attention(Var q, Var k, Var v, std::size_t seq_len, std::size_t heads) {
    const Tensor<T>& qv = value(q);
    const Tensor<T>& kv = value(k);
    const Tensor<T>& vv = value(v);
    require(qv.shape == kv.shape && qv.shape == vv.shape, "attention: q, k, v shapes differ");
    const std::size_t d = qv.cols();
    require(heads > 0 && d % heads == 0, "attention: width " + std::to_string(d) + " not divisible by heads");
    require(seq_len > 0 && qv.rows() % seq_len == 0, "attention: rows not a multiple of seq_len");
    const std::size_t batch = qv.rows() / seq_len;
    const std::size_t dk = d / heads;
    const auto L = static_cast<Eigen::Index>(seq_len);
    const auto DK = static_cast<Eigen::Index>(dk);
    const auto D = Eigen::OuterStride<>(static_cast<Eigen::Index>(d));
    const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dk)));

    Node n;
    n.op = Op::attention;
    n.in[0] = q.id;
    n.in[1] = k.id;
    n.in[2] = v.id;
    n.seq_len = seq_len;
    n.heads = heads;
    n.needs_grad = node(q).needs_grad || node(k).needs_grad || node(v).needs_grad;
    n.own = Tensor<T>(qv.shape);
    n.aux.resize(batch * heads * seq_len * seq_len);

    Mat<T> scores(L, L);
    for (std::size_t bi = 0; bi < batch; ++bi) {
        const std::size_t base = bi * seq_len * d;
        for (std::size_t h = 0; h < heads; ++h) {
            CStridedM<T> Q(qv.ptr() + base + h * dk, L, DK, D);
            CStridedM<T> K(kv.ptr() + base + h * dk, L, DK, D);
            CStridedM<T> V(vv.ptr() + base + h * dk, L, DK, D);
            scores.noalias() = (Q * K.transpose()) * scale;
            MapM<T> P(n.aux.data() + (bi * heads + h) * seq_len * seq_len, L, L);
            for (Eigen::Index r = 0; r < L; ++r) {
                const T mx = scores.row(r).maxCoeff();
                double sum = 0.0;
                for (Eigen::Index c = 0; c < L; ++c) {
                    const double e = std::exp(static_cast<double>(scores(r, c) - mx));
                    P(r, c) = static_cast<T>(e);
                    sum += e;
                }
                const double inv = 1.0 / sum;
                for (Eigen::Index c = 0; c < L; ++c) P(r, c) = static_cast<T>(P(r, c) * inv);
            }
            StridedM<T> O(n.own.ptr() + base + h * dk, L, DK, D);
            O.noalias() = P * V;
        }
    }
    return push(std::move(n));
}

template <typename T>
typename Tape<T>::Var Tape<T>::reshape(Var x, Shape shape) {
    const Tensor<T>& xv = value(x);
    require(shape_size(shape) == xv.size(),
            "reshape: cannot view " + shape_string(xv.shape) + " as " + shape_string(shape));
    Node n;
    n.op = Op::reshape;
    n.in[0] = x.id;
    n.needs_grad = node(x).needs_grad;
    n.own = Tensor<T>(std::move(shape), xv.data);
    return push(std::move(n));
}

template <typename T>
typename Tape<T>::Var Tape<T>::mse(Var a, Var b) {
    const Tensor<T>& av = value(a);
    const Tensor<T>& bv = value(b);
    require(av.size() == bv.size() && av.size() > 0,
            "mse: shape mismatch " + shape_string(av.shape) + " vs " + shape_string(bv.shape));
    double acc = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) {
        const double diff = static_cast<double>(av[i]) - static_cast<double>(bv[i]);
        acc += diff * diff;
    }
    Node n;
    n.op = Op::mse;
    n.in[0] = a.id;
    n.in[1] = b.id;
    n.needs_grad = node(a).needs_grad || node(b).needs_grad;
    n.own = Tensor<T>({1}, static_cast<T>(acc / static_cast<double>(av.size())));
    return push(std::move(n));
}

template <typename T>
typename Tape<T>::Var Tape<T>::weighted_sum(Var x, Tensor<T> weights) {
    const Tensor<T>& xv = value(x);
    require(weights.size() == xv.size(), "weighted_sum: weight count must match input");
    double acc = 0.0;
    for (std::size_t i = 0; i < xv.size(); ++i) acc += static_cast<double>(weights[i]) * xv[i];
    Node n;
    n.op = Op::weighted_sum;
    n.in[0] = x.id;
    n.needs_grad = node(x).needs_grad;
    n.aux = std::move(weights.data);
    n.own = Tensor<T>({1}, static_cast<T>(acc));
    return push(std::move(n));
}

template <typename T>
const AlignedVector<T>& Tape<T>::attention_weights(Var v) const {
    const Node& n = node(v);
    require(n.op == Op::attention, "attention_weights: variable is not an attention output");
    return n.aux;
}

template <typename T>
Tensor<T>& Tape<T>::grad_of(std::size_t id) {
    Node& n = nodes_[id];
    if (n.grad.empty() && n.value().size() > 0) n.grad = Tensor<T>(n.value().shape);
    return n.grad;
}

template <typename T>
void Tape<T>::backward(Var loss, Gradients<T>& grads) {
    Node& top = node(loss);
    require(top.value().size() == 1, "backward: loss must be a scalar");
    for (Node& n : nodes_) n.grad = Tensor<T>();
    if (!top.needs_grad) return;
    grad_of(loss.id)[0] = T(1);
    for (std::size_t id = loss.id + 1; id-- > 0;) {
        Node& n = nodes_[id];
        if (!n.needs_grad || n.grad.empty()) continue;
        if (!all_finite(n.grad)) {
            throw NumericError(std::string("non-finite gradient flowing into op ") + op_name(n.op) + " (node " +
                               std::to_string(id) + ")");
        }
        if (n.op == Op::parameter) {
            require(n.param_index < grads.size(), "backward: gradient list too short");
            Tensor<T>& g = grads[n.param_index];
            require(g.size() == n.grad.size(), "backward: gradient shape mismatch");
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
            continue;
        }
        backprop(id);
    }
}

template <typename T>
void Tape<T>::backprop(std::size_t id) {
    Node& n = nodes_[id];
    const Tensor<T>& dy = n.grad;
    auto wants = [&](std::size_t input) { return nodes_[n.in[input]].needs_grad; };

    switch (n.op) {
    case Op::constant:
    case Op::parameter:
        break;
    case Op::matmul:
    case Op::affine: {
        const Tensor<T>& x = nodes_[n.in[0]].value();
        const Tensor<T>& w = nodes_[n.in[1]].value();
        if (wants(0)) as_mat(grad_of(n.in[0])).noalias() += as_mat(dy) * as_mat(w).transpose();
        if (wants(1)) as_mat(grad_of(n.in[1])).noalias() += as_mat(x).transpose() * as_mat(dy);
        if (n.op == Op::affine && wants(2)) {
            Tensor<T>& gb = grad_of(n.in[2]);
            Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>(gb.ptr(), static_cast<Eigen::Index>(gb.size())) +=
                as_mat(dy).colwise().sum();
        }
        break;
    }
    case Op::add: {
        for (int i = 0; i < 2; ++i) {
            if (!wants(i)) continue;
            Tensor<T>& g = grad_of(n.in[i]);
            for (std::size_t j = 0; j < g.size(); ++j) g[j] += dy[j];
        }
        break;
    }
    case Op::gelu: {
        if (!wants(0)) break;
        const Tensor<T>& x = nodes_[n.in[0]].value();
        Tensor<T>& g = grad_of(n.in[0]);
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double v = x[i];
            const double d = 0.5 * (1.0 + std::erf(v * kInvSqrt2)) + v * kInvSqrt2Pi * std::exp(-0.5 * v * v);
            g[i] += static_cast<T>(d * dy[i]);
        }
        break;
    }
    case Op::layer_norm: {
        const Tensor<T>& gain = nodes_[n.in[1]].value();
        const std::size_t d = gain.size();
        const std::size_t rows = n.aux2.size();
        if (wants(1) || wants(2)) {
            std::vector<double> dg(d, 0.0), db(d, 0.0);
            for (std::size_t r = 0; r < rows; ++r) {
                for (std::size_t c = 0; c < d; ++c) {
                    dg[c] += static_cast<double>(dy[r * d + c]) * n.aux[r * d + c];
                    db[c] += dy[r * d + c];
                }
            }
            if (wants(1)) {
                Tensor<T>& g = grad_of(n.in[1]);
                for (std::size_t c = 0; c < d; ++c) g[c] += static_cast<T>(dg[c]);
            }
            if (wants(2)) {
                Tensor<T>& g = grad_of(n.in[2]);
                for (std::size_t c = 0; c < d; ++c) g[c] += static_cast<T>(db[c]);
            }
        }
        if (wants(0)) {
            Tensor<T>& gx = grad_of(n.in[0]);
            for (std::size_t r = 0; r < rows; ++r) {
                double mean_dxhat = 0.0;
                double mean_dxhat_xhat = 0.0;
                for (std::size_t c = 0; c < d; ++c) {
                    const double dxhat = static_cast<double>(dy[r * d + c]) * gain[c];
                    mean_dxhat += dxhat;
                    mean_dxhat_xhat += dxhat * n.aux[r * d + c];
                }
                mean_dxhat /= static_cast<double>(d);
                mean_dxhat_xhat /= static_cast<double>(d);
                const double inv = n.aux2[r];
                for (std::size_t c = 0; c < d; ++c) {
                    const double dxhat = static_cast<double>(dy[r * d + c]) * gain[c];
                    gx[r * d + c] +=
                        static_cast<T>(inv * (dxhat - mean_dxhat - n.aux[r * d + c] * mean_dxhat_xhat));
                }
            }
        }
        break;
    }
    case Op::attention: {
        const Tensor<T>& qv = nodes_[n.in[0]].value();
        const Tensor<T>& kv = nodes_[n.in[1]].value();
        const Tensor<T>& vv = nodes_[n.in[2]].value();
        const std::size_t d = qv.cols();
        const std::size_t seq = n.seq_len;
        const std::size_t heads = n.heads;
        const std::size_t batch = qv.rows() / seq;
        const std::size_t dk = d / heads;
        const auto L = static_cast<Eigen::Index>(seq);
        const auto DK = static_cast<Eigen::Index>(dk);
        const auto D = Eigen::OuterStride<>(static_cast<Eigen::Index>(d));
        const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dk)));
        // Allocate all three so the strided maps below have storage.
        Tensor<T>& gq = grad_of(n.in[0]);
        Tensor<T>& gk = grad_of(n.in[1]);
        Tensor<T>& gv = grad_of(n.in[2]);
        Mat<T> dP(L, L);
        Mat<T> dS(L, L);
        for (std::size_t bi = 0; bi < batch; ++bi) {
            const std::size_t base = bi * seq * d;
            for (std::size_t h = 0; h < heads; ++h) {
                CStridedM<T> Q(qv.ptr() + base + h * dk, L, DK, D);
                CStridedM<T> K(kv.ptr() + base + h * dk, L, DK, D);
                CStridedM<T> V(vv.ptr() + base + h * dk, L, DK, D);
                CStridedM<T> dO(dy.ptr() + base + h * dk, L, DK, D);
                CMapM<T> P(n.aux.data() + (bi * heads + h) * seq * seq, L, L);
                StridedM<T> dQ(gq.ptr() + base + h * dk, L, DK, D);
                StridedM<T> dK(gk.ptr() + base + h * dk, L, DK, D);
                StridedM<T> dV(gv.ptr() + base + h * dk, L, DK, D);
                dV.noalias() += P.transpose() * dO;
                dP.noalias() = dO * V.transpose();
                for (Eigen::Index r = 0; r < L; ++r) {
                    double dot = 0.0;
                    for (Eigen::Index c = 0; c < L; ++c) dot += static_cast<double>(dP(r, c)) * P(r, c);
                    for (Eigen::Index c = 0; c < L; ++c) {
                        dS(r, c) = static_cast<T>(P(r, c) * (dP(r, c) - dot)) * scale;
                    }
                }
                dQ.noalias() += dS * K;
                dK.noalias() += dS.transpose() * Q;
            }
        }
        break;
    }
    case Op::reshape: {
        if (!wants(0)) break;
        Tensor<T>& g = grad_of(n.in[0]);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += dy[i];
        break;
    }
    case Op::mse: {
        const Tensor<T>& a = nodes_[n.in[0]].value();
        const Tensor<T>& b = nodes_[n.in[1]].value();
        const double coef = 2.0 * static_cast<double>(dy[0]) / static_cast<double>(a.size());
        if (wants(0)) {
            Tensor<T>& g = grad_of(n.in[0]);
            for (std::size_t i = 0; i < a.size(); ++i) g[i] += static_cast<T>(coef * (static_cast<double>(a[i]) - b[i]));
        }
        if (wants(1)) {
            Tensor<T>& g = grad_of(n.in[1]);
            for (std::size_t i = 0; i < a.size(); ++i) g[i] -= static_cast<T>(coef * (static_cast<double>(a[i]) - b[i]));
        }
        break;
    }
    case Op::weighted_sum: {
        if (!wants(0)) break;
        Tensor<T>& g = grad_of(n.in[0]);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += dy[0] * n.aux[i];
        break;
    }
    }
}

template class Tape<float>;
template class Tape<double>;

} // namespace simlob::nn
