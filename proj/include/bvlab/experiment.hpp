#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "bvlab/analysis.hpp"
#include "bvlab/baselines.hpp"
#include "bvlab/betavae.hpp"
#include "bvlab/datasets.hpp"

namespace bvlab::experiment {

inline constexpr const char* kVersion = "bvlab 0.1.0";

// Child streams of the dataset seed.
inline constexpr std::uint64_t kSplitStream = 7;
inline constexpr std::uint64_t kIcaStream = 11;

struct ExperimentConfig {
    data::GeneratorKind kind = data::GeneratorKind::linear;
    std::size_t n = 10000;
    std::uint64_t data_seed = 1;
    double split_ratio = 0.9;
    vae::TrainConfig train;
    double active_threshold = analysis::kDefaultActiveThreshold;
    std::size_t pca_components = 5;
    std::size_t ica_components = 4;
    std::size_t ica_max_iter = 500;
    double ica_tol = 1e-6;

    std::map<std::string, std::string> to_map() const;
    /// Unknown keys throw ArgumentError.
    void apply(const std::map<std::string, std::string>& kv);
    /// Sorted key=value lines.
    std::string to_text() const;
    void validate() const;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// key=value lines; '#' starts a comment; blank lines ignored.
std::map<std::string, std::string> parse_kv_text(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Iteration budget and beta shrink gap per dataset kind. The non-linear
/// runs use a shrink gap of 200. Each budget stops while beta is still large
/// enough to keep surplus latents closed (final beta about 1.5e-3 linear,
/// 5e-5 non-linear).
std::uint64_t default_total_iters(data::GeneratorKind kind);
std::uint64_t default_shrink_gap(data::GeneratorKind kind);
ExperimentConfig default_config(data::GeneratorKind kind, std::size_t latents, std::uint64_t seed);

data::SplitDataset split_for(const data::FactorDataset& ds, double ratio);

struct BaselineReport {
    baselines::PcaResult pca;
    std::optional<baselines::IcaResult> ica;
    std::string ica_error;
    Matrix pca_scores;
    Matrix ica_sources;
    analysis::CorrelationGrid pca_vs_y;
    analysis::CorrelationGrid ica_vs_y;
};

/// PCA and FastICA fitted on `x`, compared against the factors `y`.
BaselineReport run_baselines(const ExperimentConfig& config, const Matrix& x, const Matrix& y);

struct RunReport {
    ExperimentConfig config;
    analysis::ActivationReport activation;
    analysis::CorrelationGrid latents_vs_y;
    analysis::CorrelationGrid latents_vs_pca;
    analysis::CorrelationGrid latents_vs_ica;
    std::optional<analysis::MatchingResult> match_pca;
    std::optional<analysis::MatchingResult> match_y;
    double pca_likeness = 0.0;
    double ica_likeness = 0.0;
    double psnr_train = 0.0;
    double psnr_test = 0.0;
    double peak_test = 0.0;
    double baseline_pca_max_abs = 0.0;
    double baseline_ica_max_abs = 0.0;
    bool ica_converged = false;
    std::vector<std::string> notes;
    double wall_seconds = 0.0;
    Matrix mu_test;
    Matrix y_test;
    Matrix pca_scores_test;
    Matrix ica_sources_test;
};

/// Evaluates a trained model on the test split (posterior means).
RunReport analyze(const ExperimentConfig& config, const vae::VaeModel& model, const data::SplitDataset& split);

struct SummaryRow {
    std::string run;
    std::string dataset;
    std::size_t latents = 0;
    std::size_t active = 0;
    double pca_likeness = 0.0;
    double ica_likeness = 0.0;
    double psnr_test = 0.0;
    bool failed = false;
    std::string error;
};

SummaryRow summary_row(const std::string& run, const RunReport& report);
std::string summary_csv(const std::vector<SummaryRow>& rows);

std::string format_number(double v);
/// Like format_number, but an exact reconstruction (+inf dB) prints as "exact".
std::string format_psnr(double db);
std::string grid_csv(const analysis::CorrelationGrid& grid);
std::string trace_csv(const vae::TrainTrace& trace, std::size_t latent_dim);
std::string report_text(const RunReport& report);
std::string baseline_report_text(const ExperimentConfig& config, const BaselineReport& b);

void write_text(const std::filesystem::path& path, const std::string& text);

/// report.txt, config.txt, summary.csv, grid_*.csv and grid_*.svg under dir.
void write_run_outputs(const std::filesystem::path& dir, const std::string& run_name, const RunReport& report);
void write_baseline_outputs(const std::filesystem::path& dir, const ExperimentConfig& config, const BaselineReport& b,
                            const Matrix& y);

struct RunOutputs {
    RunReport report;
    vae::TrainTrace trace;
};

/// Generate data, train, analyze and write everything for one configuration.
RunOutputs execute_run(const ExperimentConfig& config, const std::filesystem::path& dir, const std::string& run_name,
                       std::ostream* log = nullptr);

struct ReproduceOptions {
    std::uint64_t seed = 1;
    std::size_t n = 10000;
    std::optional<std::uint64_t> total_iters; // overrides per-kind defaults
    /// Config keys applied to every run; dataset and latent_dim are ignored.
    std::map<std::string, std::string> overrides;
    std::filesystem::path out_dir = "reproduce";
};

struct PlannedRun {
    std::string name;
    ExperimentConfig config;
};

/// linear x {5, 100} latents and non-linear x {5, 100, 500} latents.
std::vector<PlannedRun> experiment_matrix(const ReproduceOptions& options);

struct ReproduceResult {
    std::vector<SummaryRow> rows;
    std::vector<std::string> checks; // human-readable expected-relation lines
    bool any_failed = false;
};

ReproduceResult reproduce(const ReproduceOptions& options, std::ostream* log = nullptr);

} // namespace bvlab::experiment
