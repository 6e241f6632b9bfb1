// bvlab command-line front end: gen-data, train, analyze, baseline, reproduce.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <string>

#include "bvlab/datasets.hpp"
#include "bvlab/error.hpp"
#include "bvlab/experiment.hpp"
#include "bvlab/kernels.hpp"
#include "bvlab/textio.hpp"

namespace fs = std::filesystem;
using namespace bvlab;
using experiment::ExperimentConfig;

namespace {

constexpr int kExitError = 1;
constexpr int kExitUsage = 2;

struct Common {
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
    std::string config_path;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--seed", c.seed, "RNG seed");
    cmd->add_option("--out-dir", c.out_dir, "Output directory")->capture_default_str();
    cmd->add_option("--config", c.config_path, "key=value config file; flags override its values")
        ->check(CLI::ExistingFile);
}

std::map<std::string, std::string> config_file(const Common& c) {
    if (c.config_path.empty()) return {};
    return experiment::parse_kv_text([&] {
        std::ifstream is(c.config_path);
        return std::string(std::istreambuf_iterator<char>(is), {});
    }());
}

struct TrainFlags {
    std::optional<std::size_t> latents;
    std::optional<std::uint64_t> shrink_gap;
    std::optional<double> beta_init;
    std::optional<double> lr;
    std::optional<std::uint64_t> iters;
    std::optional<std::size_t> batch_size;
    std::optional<std::uint64_t> log_every;
    std::optional<double> split_ratio;
};

void apply_train_flags(ExperimentConfig& c, const TrainFlags& f, const Common& common) {
    if (f.latents) c.train.latent_dim = *f.latents;
    if (f.shrink_gap) c.train.shrink_gap = *f.shrink_gap;
    if (f.beta_init) c.train.beta_init = *f.beta_init;
    if (f.lr) c.train.lr = *f.lr;
    if (f.iters) c.train.total_iters = *f.iters;
    if (f.batch_size) c.train.batch_size = *f.batch_size;
    if (f.log_every) c.train.log_every = *f.log_every;
    if (f.split_ratio) c.split_ratio = *f.split_ratio;
    if (common.seed) c.train.seed = *common.seed;
}

// Per-kind defaults, then the config file, then the dataset's own identity.
ExperimentConfig config_for_dataset(const data::FactorDataset& ds, const Common& common) {
    auto c = experiment::default_config(ds.kind, vae::TrainConfig{}.latent_dim, ds.seed);
    c.apply(config_file(common));
    c.kind = ds.kind;
    c.n = ds.size();
    c.data_seed = ds.seed;
    return c;
}

int cmd_gen_data(const Common& common, const std::string& kind, std::optional<std::size_t> n,
                 const std::string& output) {
    ExperimentConfig c;
    c.apply(config_file(common));
    if (!kind.empty()) c.kind = data::parse_kind(kind);
    if (n) c.n = *n;
    if (common.seed) c.data_seed = *common.seed;
    const fs::path path = output.empty() ? fs::path(common.out_dir) / "data.csv" : fs::path(output);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const auto ds = data::generate(c.kind, c.data_seed, c.n);
    data::save(ds, path);
    std::cout << "wrote " << path.string() << " (" << ds.size() << " rows, " << data::kind_name(ds.kind) << ", seed "
              << ds.seed << ")\n";
    return 0;
}

int cmd_train(const Common& common, const TrainFlags& flags, const std::string& data_path,
              const std::string& continue_from) {
    const auto ds = data::load(data_path);
    auto c = config_for_dataset(ds, common);
    apply_train_flags(c, flags, common);
    c.validate();
    const fs::path dir = common.out_dir;
    fs::create_directories(dir);
    const auto split = experiment::split_for(ds, c.split_ratio);

    auto observer = [](const vae::TraceRecord& rec, const vae::VaeModel&) {
        std::cout << "iter " << rec.iter << " beta " << experiment::format_number(rec.beta) << " recon "
                  << experiment::format_number(rec.recon) << " kl " << experiment::format_number(rec.kl_total)
                  << "\n";
    };
    vae::TrainResult result;
    try {
        if (continue_from.empty()) {
            result = vae::train(c.train, split.train.x, observer);
        } else {
            auto ck = vae::load_checkpoint(continue_from);
            if (ck.model.latent_dim != c.train.latent_dim && !flags.latents) c.train.latent_dim = ck.model.latent_dim;
            if (ck.model.latent_dim != c.train.latent_dim)
                throw ArgumentError("--latents does not match the checkpoint's latent dimension");
            c.train.hidden = ck.config.hidden;
            result = vae::train_from(c.train, split.train.x, ck.model, ck.config.total_iters, observer);
            c.train.total_iters += ck.config.total_iters;
        }
    } catch (const vae::TrainingDiverged& e) {
        experiment::write_text(dir / "trace.csv", experiment::trace_csv(e.partial_trace(), c.train.latent_dim));
        std::cerr << "partial trace written to " << (dir / "trace.csv").string() << "\n";
        throw;
    }
    experiment::write_text(dir / "trace.csv", experiment::trace_csv(result.trace, c.train.latent_dim));
    vae::save_checkpoint(dir / "model.ckpt", result.model, c.train);
    experiment::write_text(dir / "config.txt", c.to_text());
    std::cout << "wrote " << (dir / "model.ckpt").string() << " and " << (dir / "trace.csv").string() << "\n";
    return 0;
}

int cmd_analyze(const Common& common, const std::string& data_path, const std::string& ckpt_path,
                std::optional<double> threshold) {
    const auto ds = data::load(data_path);
    const auto ck = vae::load_checkpoint(ckpt_path);
    auto c = config_for_dataset(ds, common);
    c.train = ck.config;
    if (threshold) c.active_threshold = *threshold;
    c.validate();
    if (ck.model.input_dim() != ds.x.cols()) throw ShapeError("checkpoint input width does not match the dataset");
    const auto split = experiment::split_for(ds, c.split_ratio);
    const auto report = experiment::analyze(c, ck.model, split);
    const fs::path dir = common.out_dir;
    experiment::write_run_outputs(dir, fs::path(ckpt_path).stem().string(), report);
    std::cout << experiment::report_text(report);
    return 0;
}

int cmd_baseline(const Common& common, const std::string& data_path, std::optional<std::size_t> pca_k,
                 std::optional<std::size_t> ica_k) {
    const auto ds = data::load(data_path);
    auto c = config_for_dataset(ds, common);
    if (pca_k) c.pca_components = *pca_k;
    if (ica_k) c.ica_components = *ica_k;
    if (common.seed) c.data_seed = *common.seed;
    c.validate();
    const auto b = experiment::run_baselines(c, ds.x, ds.y);
    experiment::write_baseline_outputs(common.out_dir, c, b, ds.y);
    std::cout << experiment::baseline_report_text(c, b);
    return 0;
}

int cmd_reproduce(const Common& common, std::optional<std::size_t> n, std::optional<std::uint64_t> iters) {
    experiment::ReproduceOptions options;
    options.overrides = config_file(common);
    auto take = [&](const char* key) -> std::optional<std::string> {
        auto it = options.overrides.find(key);
        if (it == options.overrides.end()) return std::nullopt;
        auto v = it->second;
        options.overrides.erase(it);
        return v;
    };
    const auto cfg_n = take("n");
    const auto cfg_seed = take("data_seed");
    take("seed");
    const auto cfg_iters = take("total_iters");
    options.n = n ? *n : cfg_n ? textio::parse_u64(*cfg_n) : options.n;
    options.seed = common.seed ? *common.seed : cfg_seed ? textio::parse_u64(*cfg_seed) : options.seed;
    if (iters) options.total_iters = *iters;
    else if (cfg_iters) options.total_iters = textio::parse_u64(*cfg_iters);
    options.out_dir = common.out_dir;

    const auto result = experiment::reproduce(options, &std::cout);
    std::cout << "\n" << experiment::summary_csv(result.rows) << "\n";
    for (const auto& line : result.checks) std::cout << line << "\n";
    return result.any_failed ? kExitError : 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"bvlab: beta-VAE latent activation lab"};
    app.set_version_flag("--version", std::string(experiment::kVersion) + " (kernels: " +
                                          std::string(kernels::backend_name(kernels::active_backend())) + ")");
    app.require_subcommand(1);

    Common common;
    TrainFlags tflags;
    std::string kind, data_path, ckpt_path, output, continue_from;
    std::optional<std::size_t> n, pca_k, ica_k;
    std::optional<std::uint64_t> iters;
    std::optional<double> threshold;

    auto* gen = app.add_subcommand("gen-data", "Generate a synthetic factor dataset");
    add_common(gen, common);
    gen->add_option("--kind", kind, "linear or nonlinear")->check(CLI::IsMember({"linear", "nonlinear"}));
    gen->add_option("--n", n, "Number of rows");
    gen->add_option("--output", output, "Output file (default <out-dir>/data.csv)");

    auto* train = app.add_subcommand("train", "Train a beta-VAE on a dataset file");
    add_common(train, common);
    train->add_option("--data", data_path, "Dataset CSV")->required()->check(CLI::ExistingFile);
    train->add_option("--latents", tflags.latents, "Latent dimension");
    train->add_option("--beta-shrink-gap", tflags.shrink_gap, "Iterations between beta shrinks");
    train->add_option("--beta-init", tflags.beta_init, "Initial beta exponent");
    train->add_option("--lr", tflags.lr, "Adam learning rate");
    train->add_option("--iters", tflags.iters, "Training iterations");
    train->add_option("--batch-size", tflags.batch_size, "Minibatch size");
    train->add_option("--log-every", tflags.log_every, "Trace interval");
    train->add_option("--split-ratio", tflags.split_ratio, "Training fraction of the dataset");
    train->add_option("--continue-training", continue_from, "Continue from this checkpoint")
        ->check(CLI::ExistingFile);

    auto* analyze = app.add_subcommand("analyze", "Analyze a trained checkpoint");
    add_common(analyze, common);
    analyze->add_option("--data", data_path, "Dataset CSV")->required()->check(CLI::ExistingFile);
    analyze->add_option("--checkpoint", ckpt_path, "Model checkpoint")->required()->check(CLI::ExistingFile);
    analyze->add_option("--threshold", threshold, "Active-latent KL threshold (nats)");

    auto* baseline = app.add_subcommand("baseline", "PCA and FastICA baselines on a dataset file");
    add_common(baseline, common);
    baseline->add_option("--data", data_path, "Dataset CSV")->required()->check(CLI::ExistingFile);
    baseline->add_option("--pca-components", pca_k, "PCA components");
    baseline->add_option("--ica-components", ica_k, "FastICA components");

    auto* repro = app.add_subcommand("reproduce", "Run the full experiment matrix");
    add_common(repro, common);
    repro->add_option("--n", n, "Rows per dataset");
    repro->add_option("--iters", iters, "Override the training iterations of every run");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) return cmd_gen_data(common, kind, n, output);
        if (*train) return cmd_train(common, tflags, data_path, continue_from);
        if (*analyze) return cmd_analyze(common, data_path, ckpt_path, threshold);
        if (*baseline) return cmd_baseline(common, data_path, pca_k, ica_k);
        if (*repro) return cmd_reproduce(common, n, iters);
    } catch (const ArgumentError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitUsage;
}
