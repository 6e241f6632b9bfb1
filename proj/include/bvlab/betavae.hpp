#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "bvlab/error.hpp"
#include "bvlab/matrix.hpp"
#include "bvlab/nn.hpp"
#include "bvlab/rng.hpp"

namespace bvlab::vae {

/// Staircase schedule: beta(iter) = base^(beta_init + floor(iter / shrink_gap)).
struct BetaSchedule {
    double beta_init = -45.0;
    std::uint64_t shrink_gap = 100;
    double base = 0.917;

    void validate() const;
};

double beta_at(const BetaSchedule& schedule, std::uint64_t iter);

struct TrainConfig {
    std::size_t latent_dim = 5;
    // base^-45 ~= 49.3: the bottleneck starts almost closed.
    double beta_init = -45.0;
    std::uint64_t shrink_gap = 100;
    double base = 0.917;
    double lr = 2e-3;
    std::size_t batch_size = 256;
    std::uint64_t total_iters = 20000;
    std::uint64_t seed = 0;
    std::uint64_t log_every = 100;
    std::vector<std::size_t> hidden{64, 64};

    BetaSchedule schedule() const { return {beta_init, shrink_gap, base}; }
    void validate() const;

    /// key=value lines, doubles printed to round-trip precision.
    std::map<std::string, std::string> to_map() const;
    /// Applies recognized keys from `kv` on top of `*this`; unknown keys throw.
    void apply(const std::map<std::string, std::string>& kv);

    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct VaeModel {
    nn::Mlp encoder; // input -> ... -> 2 * latent (mu | log_var)
    nn::Mlp decoder; // latent -> ... -> input
    std::size_t latent_dim = 0;

    std::size_t input_dim() const { return decoder.output_dim(); }
    void validate() const;

    friend bool operator==(const VaeModel&, const VaeModel&) = default;
};

/// SeLU hidden layers, linear heads. The encoder head starts at zero so every
/// latent begins with mu = 0, log_var = 0 (no information passes).
VaeModel make_model(RngState& rng, std::size_t input_dim, std::size_t latent_dim,
                    const std::vector<std::size_t>& hidden);

struct Posterior {
    Matrix mu;
    Matrix log_var;
};

Posterior encode(const VaeModel& model, const Matrix& x);
Matrix reparameterize(RngState& rng, const Matrix& mu, const Matrix& log_var);
/// z = mu + exp(log_var / 2) * eps for a given noise matrix.
Matrix reparameterize_with(const Matrix& mu, const Matrix& log_var, const Matrix& eps);

/// Batch-mean of 1/2 (mu^2 + sigma^2 - log sigma^2 - 1) per latent.
std::vector<double> kl_per_dim(const Matrix& mu, const Matrix& log_var);

struct LossParts {
    double total = 0.0;
    double recon = 0.0;
    double kl = 0.0;
};

/// recon = 1/2 ||x - x_hat||^2 averaged over rows; total = recon + beta * kl.
LossParts loss(const Matrix& x, const Matrix& x_hat, const Matrix& mu, const Matrix& log_var, double beta);

struct VaeGrads {
    nn::MlpGrads encoder;
    nn::MlpGrads decoder;
};

struct ObjectiveEval {
    LossParts parts;
    std::vector<double> kl_dims;
    VaeGrads grads;
};

/// Full objective and its exact gradient for a fixed noise draw `eps`.
ObjectiveEval objective_and_gradient(const VaeModel& model, const Matrix& x, const Matrix& eps, double beta);
double objective(const VaeModel& model, const Matrix& x, const Matrix& eps, double beta);

Matrix reconstruct(const VaeModel& model, const Matrix& x, bool use_mean, RngState& rng);
Matrix reconstruct_mean(const VaeModel& model, const Matrix& x);

/// max - min over all entries; the peak used by psnr().
double psnr_peak(const Matrix& x);
/// 10 log10(peak^2 / mse); +infinity when the reconstruction is exact.
double psnr(const Matrix& x, const Matrix& x_hat, double peak);

struct TraceRecord {
    std::uint64_t iter = 0;
    double beta = 0.0;
    double recon = 0.0;
    double kl_total = 0.0;
    std::vector<double> kl;

    friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

struct TrainTrace {
    std::vector<TraceRecord> records;

    friend bool operator==(const TrainTrace&, const TrainTrace&) = default;
};

struct TrainResult {
    VaeModel model;
    TrainTrace trace;
};

/// Divergence during training; carries the trace logged so far.
class TrainingDiverged : public DivergenceError {
public:
    TrainingDiverged(std::uint64_t iteration, const std::string& what, TrainTrace partial)
        : DivergenceError(iteration, what), partial_(std::move(partial)) {}
    const TrainTrace& partial_trace() const noexcept { return partial_; }

private:
    TrainTrace partial_;
};

/// Initial model for `config` on data `x` (decoder output bias = column means).
VaeModel initial_model(const TrainConfig& config, const Matrix& x);

/// Called after each logged iteration with the record just appended.
using TrainObserver = std::function<void(const TraceRecord&, const VaeModel&)>;

/// Trains from initial_model(). Deterministic given config.seed.
TrainResult train(const TrainConfig& config, const Matrix& x, const TrainObserver& observer = {});

/// Trains `start` for config.total_iters more steps with a fresh optimizer,
/// numbering iterations (and the beta schedule) from `iter_offset`.
TrainResult train_from(const TrainConfig& config, const Matrix& x, VaeModel start, std::uint64_t iter_offset,
                       const TrainObserver& observer = {});

void save_checkpoint(const std::filesystem::path& path, const VaeModel& model, const TrainConfig& config);

struct Checkpoint {
    VaeModel model;
    TrainConfig config;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace bvlab::vae
