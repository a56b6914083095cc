#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "simlob/analytics/errors.hpp"
#include "simlob/analytics/facts.hpp"
#include "simlob/calib/calibrate.hpp"
#include "simlob/data/dataset.hpp"
#include "simlob/error.hpp"
#include "simlob/lob/lobs_file.hpp"
#include "simlob/model/checkpoint.hpp"
#include "simlob/model/interpret.hpp"
#include "simlob/model/trainer.hpp"
#include "simlob/parallel.hpp"
#include "simlob/sim/config_file.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace simlob;

namespace {

void ensure_parent(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

std::ofstream open_out(const fs::path& path) {
    ensure_parent(path);
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    return out;
}

std::size_t resolve_workers(std::size_t requested) { return requested ? requested : worker_count(); }

json params_json(const sim::PgpsParams& p) {
    json j;
    const auto w = sim::to_vector(p);
    for (std::size_t k = 0; k < w.size(); ++k) j[sim::kParamNames[k]] = w[k];
    return j;
}

sim::PgpsParams reference_tuple(std::size_t n) {
    const auto& all = calib::reference_tuples();
    if (n < 1 || n > all.size()) throw ValidationError("--data-tuple must be in 1.." + std::to_string(all.size()));
    return all[n - 1];
}

std::vector<data::Segment> normalized(std::vector<data::Segment> segs, const data::NormStats& norm) {
    for (auto& s : segs) s = data::apply_normalizer(s, norm);
    return segs;
}

struct SimulateArgs {
    std::string config;
    std::size_t data_tuple = 0;
    std::size_t steps = 3600;
    std::uint64_t seed = 1;
    std::string out;
    std::string csv;
};

int run_simulate(const SimulateArgs& a, const CLI::App& cmd) {
    sim::SimSetup setup;
    if (!a.config.empty()) setup = sim::load_sim_setup(a.config);
    if (a.data_tuple) setup.params = reference_tuple(a.data_tuple);
    if (cmd.count("--steps") || a.config.empty()) setup.config.horizon = a.steps;
    if (cmd.count("--seed") || a.config.empty()) setup.config.seed = a.seed;
    const auto result = sim::run_simulation(setup.params, setup.config);
    ensure_parent(a.out);
    lob::write_lobs(fs::path(a.out), result.snapshots, setup.config.tick_size);
    if (!a.csv.empty()) {
        ensure_parent(a.csv);
        lob::write_lobs_csv(fs::path(a.csv), result.snapshots);
    }
    const auto& s = result.stats;
    spdlog::info("simulate: {} snapshots -> {} ({} limit, {} market, {} cancels, {} trades)", result.snapshots.size(),
                 a.out, s.limit_orders, s.market_orders, s.cancels, s.trades);
    return 0;
}

struct GenDataArgs {
    data::DatasetOptions opt;
    std::string out;
};

int run_gen_data(GenDataArgs a) {
    a.opt.workers = resolve_workers(a.opt.workers);
    const auto m = data::build_dataset(a.opt, a.out);
    std::cout << "train_segments," << m.train_segments << "\ntest_segments," << m.test_segments << '\n';
    return 0;
}

struct TrainArgs {
    std::string data;
    std::string out;
    std::string curve;
    model::ModelConfig config;
    model::TrainOptions opt;
};

int run_train(TrainArgs a) {
    const fs::path dir(a.data);
    const auto manifest = data::read_manifest(dir / data::kManifestName);
    if (manifest.tau != a.config.tau) {
        spdlog::info("train: using tau={} from the dataset manifest", manifest.tau);
        a.config.tau = manifest.tau;
    }
    const auto train_set = normalized(data::load_split(manifest, dir, "train"), manifest.norm);
    const auto test_set = normalized(data::load_split(manifest, dir, "test"), manifest.norm);

    model::SimLobModel<float> net(a.config, a.opt.seed);
    net.set_norm(manifest.norm);
    a.opt.workers = resolve_workers(a.opt.workers);
    a.opt.checkpoint = fs::path(a.out);
    const auto hist = model::train(net, train_set, test_set, a.opt);

    if (!a.curve.empty()) {
        auto out = open_out(a.curve);
        out.precision(10);
        out << "epoch,train_err,test_err,seconds\n";
        out << "0,," << hist.initial_test_error << ",0\n";
        for (const auto& e : hist.epochs) out << e.epoch << ',' << e.train_error << ',' << e.test_error << ',' << e.seconds << '\n';
    }
    std::cout << "best_epoch," << hist.best_epoch << "\nbest_test_err," << hist.best_test_error
              << "\nsegment_mean_baseline," << model::segment_mean_baseline(test_set) << '\n';
    return 0;
}

std::vector<data::Segment> model_windows(const model::SimLobModel<float>& net, const fs::path& in) {
    const auto file = lob::read_lobs(in);
    const auto windows = data::segment_series(file.snapshots, net.config().tau);
    if (windows.empty()) throw ValidationError(in.string() + " holds fewer than tau snapshots");
    return normalized(windows, net.norm());
}

int run_encode(const std::string& model_path, const std::string& in, const std::string& out_path) {
    const auto net = model::load_checkpoint(fs::path(model_path));
    const auto windows = model_windows(net, in);
    const auto z = net.encode_batch(windows);
    auto out = open_out(out_path);
    out.precision(10);
    out << "window,offset";
    for (std::size_t k = 0; k < net.config().latent; ++k) out << ",z" << k;
    out << '\n';
    for (std::size_t w = 0; w < z.size(); ++w) {
        out << w << ',' << windows[w].source.offset;
        for (double v : z[w]) out << ',' << v;
        out << '\n';
    }
    return 0;
}

int run_reconstruct(const std::string& model_path, const std::string& in, const std::string& report,
                    const std::string& out_path) {
    const auto net = model::load_checkpoint(fs::path(model_path));
    const auto windows = model_windows(net, in);
    const auto rec = net.reconstruct_batch(windows);
    auto out = open_out(report);
    out.precision(10);
    out << "window,offset,err_r\n";
    double total = 0.0;
    for (std::size_t w = 0; w < windows.size(); ++w) {
        const double e = model::reconstruction_error(windows[w], rec[w]);
        total += e;
        out << w << ',' << windows[w].source.offset << ',' << e << '\n';
    }
    if (!out_path.empty()) {
        auto o = open_out(out_path);
        o.precision(10);
        o << "window,t";
        for (std::size_t c = 0; c < data::kFeatures; ++c) o << ',' << model::feature_label(c);
        o << '\n';
        for (std::size_t w = 0; w < rec.size(); ++w) {
            const auto raw = data::invert_normalizer(rec[w], net.norm());
            for (std::size_t t = 0; t < raw.tau; ++t) {
                o << w << ',' << t;
                for (std::size_t c = 0; c < data::kFeatures; ++c) o << ',' << raw.at(t, c);
                o << '\n';
            }
        }
    }
    std::cout << "windows," << windows.size() << "\nmean_err_r," << total / static_cast<double>(windows.size()) << '\n';
    return 0;
}

struct CalibrateArgs {
    std::string target;
    std::string objective = "latent";
    std::string model;
    std::string out;
    std::string sim_config;
    std::size_t pop = 40;
    std::size_t iters = 100;
    std::uint64_t seed = 1;
    std::uint64_t sim_seed = 1;
    bool per_eval_seeds = false;
    std::size_t tau = data::kDefaultTau;
    std::size_t workers = 0;
};

int run_calibrate(const CalibrateArgs& a) {
    calib::CalibrationTask task;
    task.target = lob::read_lobs(fs::path(a.target)).snapshots;
    task.objective = calib::parse_objective(a.objective);
    std::optional<model::SimLobModel<float>> net;
    if (!a.model.empty()) net.emplace(model::load_checkpoint(fs::path(a.model)));
    task.model = net ? &*net : nullptr;
    if (!a.sim_config.empty()) task.sim = sim::load_sim_setup(a.sim_config).config;
    task.population = a.pop;
    task.iterations = a.iters;
    task.seed = a.seed;
    task.sim_seed = a.sim_seed;
    task.per_evaluation_seeds = a.per_eval_seeds;
    task.tau = a.tau;
    task.workers = resolve_workers(a.workers);

    const auto res = calib::calibrate(task);
    const auto report = calib::evaluate_calibration(task.target, res.best, a.sim_seed, task.sim, task.model, a.tau);

    json j;
    j["objective"] = calib::to_string(task.objective);
    j["best_params"] = params_json(res.best);
    j["best_value"] = res.best_value;
    j["trace"] = res.trace;
    j["evaluations"] = res.evaluations;
    j["seconds"] = res.seconds;
    j["population"] = a.pop;
    j["iterations"] = a.iters;
    j["seed"] = a.seed;
    j["sim_seed"] = a.sim_seed;
    json r;
    r["err_r"] = report.err_r;
    r["midprice"] = report.midprice;
    r["latent"] = report.latent ? json(*report.latent) : json(nullptr);
    r["logret_w1"] = report.facts.logret_wasserstein;
    r["autocorr_delta"] = report.facts.autocorr_delta;
    r["vol_clustering_delta"] = report.facts.vol_clustering_delta;
    r["vol_vol_corr_delta"] = report.facts.vol_vol_corr_delta;
    j["report"] = r;
    auto out = open_out(a.out);
    out << j.dump(2) << '\n';
    std::cout << "best_value," << res.best_value << '\n';
    return 0;
}

int run_report(const std::string& model_path, const std::string& test_dir, const std::string& prefix,
               std::size_t bins, std::size_t workers) {
    const auto net = model::load_checkpoint(fs::path(model_path));
    const fs::path dir(test_dir);
    const auto manifest = data::read_manifest(dir / data::kManifestName);
    const auto segs = normalized(data::load_split(manifest, dir, "test"), net.norm());
    auto recon = [&net](std::span<const data::Segment> part) { return net.reconstruct_batch(part); };
    const auto dist = analytics::error_distribution(recon, segs, resolve_workers(workers), bins);
    {
        auto out = open_out(prefix + "errors.csv");
        analytics::write_errors_csv(out, dist);
    }
    {
        auto out = open_out(prefix + "histogram.csv");
        analytics::write_histogram_csv(out, dist);
    }
    auto out = open_out(prefix + "summary.csv");
    analytics::write_summary_csv(out, dist);
    analytics::write_summary_csv(std::cout, dist);
    return 0;
}

int run_facts(const std::string& a, const std::string& b, std::size_t lag, const std::string& out_path) {
    const auto sa = lob::read_lobs(fs::path(a)).snapshots;
    const auto sb = lob::read_lobs(fs::path(b)).snapshots;
    const auto report = analytics::compare_facts(sa, sb, lag);
    if (out_path.empty()) {
        analytics::write_facts_csv(std::cout, report, lag);
    } else {
        auto out = open_out(out_path);
        analytics::write_facts_csv(out, report, lag);
    }
    return 0;
}

int run_interpret(const std::string& model_path, const std::string& in, std::size_t window, const std::string& out_dir) {
    const auto net = model::load_checkpoint(fs::path(model_path));
    model::write_importance_csv(out_dir, model::export_feature_importance(net));
    if (!in.empty()) {
        const auto file = lob::read_lobs(fs::path(in));
        const auto windows = data::segment_series(file.snapshots, net.config().tau);
        if (window >= windows.size()) {
            throw ValidationError("--window " + std::to_string(window) + " out of range (" +
                                  std::to_string(windows.size()) + " windows)");
        }
        model::write_attention_csv(out_dir, model::export_attention(net, windows[window]));
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Limit order book simulation, representation learning and calibration"};
    app.require_subcommand(1);
    std::string log_level = "info";
    app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")->capture_default_str();

    SimulateArgs sa;
    auto* sim_cmd = app.add_subcommand("simulate", "Run the agent-based market and write a LOBS1 file");
    sim_cmd->add_option("--config", sa.config, "key=value parameter file");
    sim_cmd->add_option("--data-tuple", sa.data_tuple, "use built-in target tuple N (1-10)");
    sim_cmd->add_option("--steps", sa.steps, "snapshots to record after warmup")->capture_default_str();
    sim_cmd->add_option("--seed", sa.seed, "simulation seed")->capture_default_str();
    sim_cmd->add_option("--out", sa.out, "output LOBS1 file")->required();
    sim_cmd->add_option("--csv", sa.csv, "also write the snapshots as CSV");

    GenDataArgs ga;
    auto* gen_cmd = app.add_subcommand("gen-data", "Build a train/test segment corpus");
    gen_cmd->add_option("--tuples", ga.opt.n_tuples, "parameter tuples to sample")->capture_default_str();
    gen_cmd->add_option("--steps", ga.opt.steps, "snapshots per tuple")->capture_default_str();
    gen_cmd->add_option("--tau", ga.opt.tau, "segment length")->capture_default_str();
    gen_cmd->add_option("--split", ga.opt.split, "training fraction")->capture_default_str()->check(CLI::Range(0.0, 1.0));
    gen_cmd->add_option("--seed", ga.opt.seed, "corpus seed")->capture_default_str();
    gen_cmd->add_option("--retries", ga.opt.max_retries, "resamples after a failed simulation")->capture_default_str();
    gen_cmd->add_option("--workers", ga.opt.workers, "parallel simulations (0: SIMLOB_WORKERS or all cores)");
    gen_cmd->add_option("--out", ga.out, "output directory")->required();

    TrainArgs ta;
    auto* train_cmd = app.add_subcommand("train", "Train the encoder-decoder on a corpus");
    train_cmd->add_option("--data", ta.data, "corpus directory")->required();
    train_cmd->add_option("--epochs", ta.opt.epochs)->capture_default_str();
    train_cmd->add_option("--batch", ta.opt.batch)->capture_default_str();
    train_cmd->add_option("--lr", ta.opt.lr)->capture_default_str();
    train_cmd->add_option("--L", ta.config.layers, "Transformer blocks per side")->capture_default_str();
    train_cmd->add_option("--latent", ta.config.latent, "latent length")->capture_default_str();
    train_cmd->add_option("--d-model", ta.config.d_model)->capture_default_str();
    train_cmd->add_option("--heads", ta.config.heads)->capture_default_str();
    train_cmd->add_option("--ffn-mult", ta.config.ffn_mult)->capture_default_str();
    train_cmd->add_option("--hidden1", ta.config.reduce_hidden1, "first reduction width (0: auto)");
    train_cmd->add_option("--hidden2", ta.config.reduce_hidden2, "second reduction width (0: auto)");
    train_cmd->add_flag("--posenc", ta.config.positional_encoding, "add sinusoidal positions");
    train_cmd->add_option("--seed", ta.opt.seed)->capture_default_str();
    train_cmd->add_option("--micro-batches", ta.opt.micro_batches, "gradient replicas per batch")->capture_default_str();
    train_cmd->add_option("--workers", ta.opt.workers, "threads (0: SIMLOB_WORKERS or all cores)");
    train_cmd->add_option("--curve", ta.curve, "write the per-epoch loss curve as CSV");
    train_cmd->add_option("--out", ta.out, "checkpoint (best-on-test weights)")->required();

    std::string model_path, in_path, out_path, report_path;
    auto* enc_cmd = app.add_subcommand("encode", "Encode every full window of a LOBS1 file");
    enc_cmd->add_option("--model", model_path)->required();
    enc_cmd->add_option("--in", in_path)->required();
    enc_cmd->add_option("--out", out_path, "latent CSV")->required();

    auto* rec_cmd = app.add_subcommand("reconstruct", "Reconstruct windows and report Err_r");
    rec_cmd->add_option("--model", model_path)->required();
    rec_cmd->add_option("--in", in_path)->required();
    rec_cmd->add_option("--report", report_path, "per-window Err_r CSV")->required();
    rec_cmd->add_option("--out", out_path, "reconstructed snapshots (raw units) CSV");

    CalibrateArgs ca;
    auto* cal_cmd = app.add_subcommand("calibrate", "Fit simulator parameters to a target with PSO");
    cal_cmd->add_option("--target", ca.target)->required();
    cal_cmd->add_option("--objective", ca.objective)->capture_default_str()->check(CLI::IsMember({"midprice", "rawlob", "latent"}));
    cal_cmd->add_option("--model", ca.model, "checkpoint (required for latent)");
    cal_cmd->add_option("--pop", ca.pop)->capture_default_str();
    cal_cmd->add_option("--iters", ca.iters)->capture_default_str();
    cal_cmd->add_option("--seed", ca.seed, "swarm seed")->capture_default_str();
    cal_cmd->add_option("--sim-seed", ca.sim_seed, "simulator seed shared by all evaluations")->capture_default_str();
    cal_cmd->add_flag("--per-eval-seeds", ca.per_eval_seeds, "fresh simulator seed per evaluation");
    cal_cmd->add_option("--sim-config", ca.sim_config, "key=value file for agent counts, p0, tick size");
    cal_cmd->add_option("--tau", ca.tau, "window length without a model")->capture_default_str();
    cal_cmd->add_option("--workers", ca.workers, "parallel evaluations (0: SIMLOB_WORKERS or all cores)");
    cal_cmd->add_option("--out", ca.out, "result JSON")->required();

    std::string test_dir, prefix = "report_";
    std::size_t bins = 50, workers = 0;
    auto* rep_cmd = app.add_subcommand("report", "Err_r distribution over a corpus' test split");
    rep_cmd->add_option("--model", model_path)->required();
    rep_cmd->add_option("--test", test_dir, "corpus directory")->required();
    rep_cmd->add_option("--prefix", prefix, "output prefix for errors/histogram/summary CSVs")->capture_default_str();
    rep_cmd->add_option("--bins", bins)->capture_default_str();
    rep_cmd->add_option("--workers", workers);

    std::string vs_path;
    std::size_t lag = 1;
    auto* facts_cmd = app.add_subcommand("facts", "Compare stylized facts of two LOBS1 files");
    facts_cmd->add_option("--in", in_path)->required();
    facts_cmd->add_option("--vs", vs_path)->required();
    facts_cmd->add_option("--lag", lag)->capture_default_str();
    facts_cmd->add_option("--out", out_path, "CSV (default stdout)");

    std::size_t window = 0;
    auto* int_cmd = app.add_subcommand("interpret", "Export attention maps and feature importance");
    int_cmd->add_option("--model", model_path)->required();
    int_cmd->add_option("--in", in_path, "LOBS1 file for attention maps");
    int_cmd->add_option("--window", window, "window index within --in")->capture_default_str();
    int_cmd->add_option("--out", out_path, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << '\n' << app.help();
        return 2;
    }

    spdlog::set_level(spdlog::level::from_str(log_level));
    spdlog::set_default_logger(spdlog::stderr_color_mt("simlob"));
    spdlog::set_level(spdlog::level::from_str(log_level));
    try {
        if (*sim_cmd) return run_simulate(sa, *sim_cmd);
        if (*gen_cmd) return run_gen_data(ga);
        if (*train_cmd) return run_train(ta);
        if (*enc_cmd) return run_encode(model_path, in_path, out_path);
        if (*rec_cmd) return run_reconstruct(model_path, in_path, report_path, out_path);
        if (*cal_cmd) return run_calibrate(ca);
        if (*rep_cmd) return run_report(model_path, test_dir, prefix, bins, workers);
        if (*facts_cmd) return run_facts(in_path, vs_path, lag, out_path);
        if (*int_cmd) return run_interpret(model_path, in_path, window, out_path);
    } catch (const ContractError& e) {
        spdlog::error("{}", e.what());
        return 1;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 1;
    }
    return 2;
}
