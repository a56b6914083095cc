#include "simlob/model/interpret.hpp"

#include <cmath>
#include <fstream>

#include "simlob/data/normalizer.hpp"
#include "simlob/error.hpp"

namespace simlob::model {
namespace {

template <typename T>
std::vector<double> to_vec(const nn::Tensor<T>& t) {
    return std::vector<double>(t.data.begin(), t.data.end());
}

// y[r, :] = x[r, :] * w + b with plain loops.
std::vector<double> affine_rows(const std::vector<double>& x, std::size_t rows, std::size_t in,
                                const std::vector<double>& w, const std::vector<double>& b, std::size_t out) {
    std::vector<double> y(rows * out);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < out; ++j) {
            double s = b[j];
            for (std::size_t k = 0; k < in; ++k) s += x[r * in + k] * w[k * out + j];
            y[r * out + j] = s;
        }
    }
    return y;
}

std::ofstream open_csv(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.precision(10);
    return out;
}

} // namespace

std::string feature_label(std::size_t column) {
    const std::size_t level = column / 4 + 1;
    static const char* names[4] = {"bid_price", "bid_volume", "ask_price", "ask_volume"};
    return "L" + std::to_string(level) + "_" + names[column % 4];
}

template <typename T>
AttentionExport export_attention(const SimLobModel<T>& model, const data::Segment& raw) {
    const ModelConfig& c = model.config();
    if (raw.tau != c.tau || raw.values.size() != c.tau * c.features) {
        throw ContractError("export_attention: segment shape does not match model");
    }
    if (c.layers == 0) throw ContractError("export_attention: model has no Transformer blocks");
    const std::size_t tau = c.tau, d = c.d_model, f = c.features, heads = c.heads, dk = d / heads;

    AttentionExport out;
    out.tau = tau;
    out.heads = heads;
    out.mid_prices.resize(tau);
    for (std::size_t t = 0; t < tau; ++t) out.mid_prices[t] = 0.5 * (raw.at(t, 0) + raw.at(t, 2));

    const data::Segment x = data::apply_normalizer(raw, model.norm());
    std::vector<double> h = affine_rows(x.values, tau, f, to_vec(model.weight("enc.fcn1.w")),
                                        to_vec(model.weight("enc.fcn1.b")), d);
    if (c.positional_encoding) {
        const auto pe = sinusoidal_positions(tau, d);
        for (std::size_t i = 0; i < h.size(); ++i) h[i] += pe[i];
    }

    const auto g = to_vec(model.weight("enc.block0.ln1.g"));
    const auto beta = to_vec(model.weight("enc.block0.ln1.b"));
    std::vector<double> a(tau * d);
    for (std::size_t t = 0; t < tau; ++t) {
        double mean = 0.0;
        for (std::size_t j = 0; j < d; ++j) mean += h[t * d + j];
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t j = 0; j < d; ++j) var += (h[t * d + j] - mean) * (h[t * d + j] - mean);
        var /= static_cast<double>(d);
        const double inv = 1.0 / std::sqrt(var + 1e-5);
        for (std::size_t j = 0; j < d; ++j) a[t * d + j] = (h[t * d + j] - mean) * inv * g[j] + beta[j];
    }
    const auto q = affine_rows(a, tau, d, to_vec(model.weight("enc.block0.attn.wq")),
                               to_vec(model.weight("enc.block0.attn.bq")), d);
    const auto k = affine_rows(a, tau, d, to_vec(model.weight("enc.block0.attn.wk")),
                               to_vec(model.weight("enc.block0.attn.bk")), d);

    const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
    out.matrices.assign(heads, std::vector<double>(tau * tau));
    for (std::size_t hd = 0; hd < heads; ++hd) {
        auto& m = out.matrices[hd];
        for (std::size_t i = 0; i < tau; ++i) {
            double peak = -INFINITY;
            for (std::size_t j = 0; j < tau; ++j) {
                double s = 0.0;
                for (std::size_t e = 0; e < dk; ++e) s += q[i * d + hd * dk + e] * k[j * d + hd * dk + e];
                m[i * tau + j] = s * scale;
                peak = std::max(peak, m[i * tau + j]);
            }
            double z = 0.0;
            for (std::size_t j = 0; j < tau; ++j) z += (m[i * tau + j] = std::exp(m[i * tau + j] - peak));
            for (std::size_t j = 0; j < tau; ++j) m[i * tau + j] /= z;
        }
    }
    return out;
}

template AttentionExport export_attention<float>(const SimLobModel<float>&, const data::Segment&);
template AttentionExport export_attention<double>(const SimLobModel<double>&, const data::Segment&);

FeatureImportance feature_importance(const nn::Tensor<double>& w) {
    if (w.rank() != 2) throw ContractError("feature_importance: expected a matrix");
    const std::size_t rows = w.shape[0], cols = w.shape[1];
    FeatureImportance fi;
    fi.feature.assign(rows, 0.0);
    fi.latent.assign(cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const double v = std::abs(w.at(r, c));
            fi.feature[r] += v;
            fi.latent[c] += v;
        }
    }
    for (auto& v : fi.feature) v /= static_cast<double>(cols);
    for (auto& v : fi.latent) v /= static_cast<double>(rows);
    for (std::size_t r = 0; r < rows; ++r) fi.feature_labels.push_back(feature_label(r));
    return fi;
}

template <typename T>
FeatureImportance export_feature_importance(const SimLobModel<T>& model) {
    const auto& w = model.weight("enc.fcn1.w");
    nn::Tensor<double> wd(w.shape);
    for (std::size_t i = 0; i < w.size(); ++i) wd[i] = w[i];
    return feature_importance(wd);
}

template FeatureImportance export_feature_importance<float>(const SimLobModel<float>&);
template FeatureImportance export_feature_importance<double>(const SimLobModel<double>&);

void write_attention_csv(const std::filesystem::path& dir, const AttentionExport& a) {
    std::filesystem::create_directories(dir);
    for (std::size_t h = 0; h < a.matrices.size(); ++h) {
        auto out = open_csv(dir / ("attention_head" + std::to_string(h + 1) + ".csv"));
        for (std::size_t i = 0; i < a.tau; ++i) {
            for (std::size_t j = 0; j < a.tau; ++j) out << (j ? "," : "") << a.matrices[h][i * a.tau + j];
            out << '\n';
        }
    }
    auto out = open_csv(dir / "mid_prices.csv");
    out << "t,mid\n";
    for (std::size_t t = 0; t < a.mid_prices.size(); ++t) out << t << ',' << a.mid_prices[t] << '\n';
}

void write_importance_csv(const std::filesystem::path& dir, const FeatureImportance& f) {
    std::filesystem::create_directories(dir);
    auto out = open_csv(dir / "feature_importance.csv");
    out << "feature,importance\n";
    for (std::size_t i = 0; i < f.feature.size(); ++i) out << f.feature_labels[i] << ',' << f.feature[i] << '\n';
    auto lat = open_csv(dir / "latent_importance.csv");
    lat << "unit,importance\n";
    for (std::size_t i = 0; i < f.latent.size(); ++i) lat << i << ',' << f.latent[i] << '\n';
}

} // namespace simlob::model
