#include "simlob/model/trainer.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include <spdlog/spdlog.h>

#include "simlob/error.hpp"
#include "simlob/model/checkpoint.hpp"
#include "simlob/nn/adam.hpp"
#include "simlob/parallel.hpp"
#include "simlob/sim/rng.hpp"

namespace simlob::model {
namespace {

constexpr std::uint64_t kShuffleStream = 0x7A11;

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    sim::CounterRng rng(seed, kShuffleStream, epoch);
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    return order;
}

} // namespace

template <typename T>
double mean_reconstruction_error(const SimLobModel<T>& model, std::span<const data::Segment> segments,
                                 std::size_t workers, std::size_t chunk) {
    if (segments.empty()) throw ContractError("mean_reconstruction_error: empty segment set");
    chunk = std::max<std::size_t>(chunk, 1);
    const std::size_t n_chunks = (segments.size() + chunk - 1) / chunk;
    std::vector<double> sums(n_chunks, 0.0);
    parallel_for(n_chunks, workers, [&](std::size_t c) {
        const auto part = segments.subspan(c * chunk, std::min(chunk, segments.size() - c * chunk));
        const auto rec = model.reconstruct_batch(part);
        double s = 0.0;
        for (std::size_t i = 0; i < part.size(); ++i) s += reconstruction_error(part[i], rec[i]);
        sums[c] = s;
    });
    return std::accumulate(sums.begin(), sums.end(), 0.0) / static_cast<double>(segments.size());
}

template double mean_reconstruction_error<float>(const SimLobModel<float>&, std::span<const data::Segment>,
                                                 std::size_t, std::size_t);
template double mean_reconstruction_error<double>(const SimLobModel<double>&, std::span<const data::Segment>,
                                                  std::size_t, std::size_t);

double segment_mean_baseline(std::span<const data::Segment> segments) {
    if (segments.empty()) throw ContractError("segment_mean_baseline: empty segment set");
    double total = 0.0;
    for (const auto& s : segments) {
        const double mean = std::accumulate(s.values.begin(), s.values.end(), 0.0) / static_cast<double>(s.values.size());
        double e = 0.0;
        for (double v : s.values) e += (v - mean) * (v - mean);
        total += e / static_cast<double>(s.values.size());
    }
    return total / static_cast<double>(segments.size());
}

double column_mean_baseline(std::span<const data::Segment> fit, std::span<const data::Segment> eval) {
    if (fit.empty() || eval.empty()) throw ContractError("column_mean_baseline: empty segment set");
    std::vector<double> mean(data::kFeatures, 0.0);
    std::size_t rows = 0;
    for (const auto& s : fit) {
        for (std::size_t t = 0; t < s.tau; ++t) {
            for (std::size_t c = 0; c < data::kFeatures; ++c) mean[c] += s.at(t, c);
        }
        rows += s.tau;
    }
    for (auto& m : mean) m /= static_cast<double>(rows);
    double total = 0.0;
    for (const auto& s : eval) {
        double e = 0.0;
        for (std::size_t t = 0; t < s.tau; ++t) {
            for (std::size_t c = 0; c < data::kFeatures; ++c) e += (s.at(t, c) - mean[c]) * (s.at(t, c) - mean[c]);
        }
        total += e / static_cast<double>(s.values.size());
    }
    return total / static_cast<double>(eval.size());
}

TrainHistory train(SimLobModel<float>& model, std::span<const data::Segment> train_set,
                   std::span<const data::Segment> test_set, const TrainOptions& opt) {
    if (opt.batch == 0) throw ContractError("train: batch must be positive");
    if (opt.micro_batches == 0) throw ContractError("train: micro_batches must be positive");
    if (!(opt.lr > 0.0)) throw ContractError("train: learning rate must be positive");
    if (train_set.empty() || test_set.empty()) throw ContractError("train: empty train or test set");
    const std::size_t workers = std::max<std::size_t>(opt.workers, 1);

    auto& params = model.parameters();
    auto adam = nn::make_adam(params, opt.lr);

    TrainHistory hist;
    hist.initial_test_error = mean_reconstruction_error(model, test_set, workers);
    hist.best_test_error = hist.initial_test_error;
    nn::ParameterList<float> best = params;
    if (opt.checkpoint) save_checkpoint(*opt.checkpoint, model);
    spdlog::info("train: {} train / {} test segments, {} parameters, initial test Err_r {:.6f}", train_set.size(),
                 test_set.size(), model.parameter_count(), hist.initial_test_error);

    const std::size_t n_batches = (train_set.size() + opt.batch - 1) / opt.batch;
    for (std::size_t epoch = 1; epoch <= opt.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto order = epoch_order(train_set.size(), opt.seed, epoch);
        double loss_sum = 0.0;

        for (std::size_t b = 0; b < n_batches; ++b) {
            const std::size_t begin = b * opt.batch;
            const std::size_t size = std::min(opt.batch, train_set.size() - begin);
            const std::size_t micro = std::min(opt.micro_batches, size);

            std::vector<nn::Gradients<float>> grads(micro);
            std::vector<double> losses(micro, 0.0);
            try {
                parallel_for(micro, workers, [&](std::size_t m) {
                    const std::size_t lo = begin + m * size / micro;
                    const std::size_t hi = begin + (m + 1) * size / micro;
                    std::vector<data::Segment> part;
                    part.reserve(hi - lo);
                    for (std::size_t i = lo; i < hi; ++i) part.push_back(train_set[order[i]]);

                    nn::Tape<float> tape;
                    auto x = tape.constant(model.pack(part));
                    auto z = model.encode(tape, x, part.size());
                    auto r = model.decode(tape, z, part.size());
                    auto loss = tape.mse(r, x);
                    losses[m] = tape.value(loss)[0];
                    grads[m] = nn::zero_gradients(params);
                    tape.backward(loss, grads[m]);
                    const float w = static_cast<float>(hi - lo) / static_cast<float>(size);
                    for (auto& g : grads[m]) {
                        for (auto& v : g.data) v *= w;
                    }
                    losses[m] *= static_cast<double>(hi - lo);
                });
            } catch (const NumericError& e) {
                throw NumericError("train: non-finite values at epoch " + std::to_string(epoch) + " batch " +
                                   std::to_string(b) + ": " + e.what());
            }
            for (std::size_t m = 1; m < micro; ++m) {
                for (std::size_t p = 0; p < params.size(); ++p) {
                    auto& dst = grads[0][p].data;
                    const auto& src = grads[m][p].data;
                    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
                }
            }
            const double batch_loss = std::accumulate(losses.begin(), losses.end(), 0.0);
            if (!std::isfinite(batch_loss)) {
                throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) + " batch " +
                                   std::to_string(b));
            }
            loss_sum += batch_loss;
            nn::adam_step(params, grads[0], adam);
        }

        EpochStats st;
        st.epoch = epoch;
        st.train_error = loss_sum / static_cast<double>(train_set.size());
        st.test_error = mean_reconstruction_error(model, test_set, workers);
        st.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!std::isfinite(st.test_error)) throw NumericError("train: non-finite test error at epoch " + std::to_string(epoch));
        hist.epochs.push_back(st);
        if (st.test_error < hist.best_test_error) {
            hist.best_test_error = st.test_error;
            hist.best_epoch = epoch;
            best = params;
            if (opt.checkpoint) save_checkpoint(*opt.checkpoint, model);
        }
        spdlog::info("epoch {:4d}  train {:.6f}  test {:.6f}  ({:.1f}s)", epoch, st.train_error, st.test_error, st.seconds);
        if (opt.on_epoch) opt.on_epoch(st);
    }
    if (opt.restore_best) params = std::move(best);
    return hist;
}

} // namespace simlob::model
