#include "bvlab/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "bvlab/error.hpp"
#include "bvlab/svg.hpp"
#include "bvlab/textio.hpp"

namespace bvlab::experiment {

namespace fs = std::filesystem;

namespace {

const char* const kExperimentKeys[] = {"dataset",          "n",              "data_seed",      "split_ratio",
                                       "active_threshold", "pca_components", "ica_components", "ica_max_iter",
                                       "ica_tol"};

bool is_experiment_key(const std::string& key) {
    return std::find(std::begin(kExperimentKeys), std::end(kExperimentKeys), key) != std::end(kExperimentKeys);
}

std::string read_file(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

// Columns of `m` listed in `idx`, or the first `fallback` columns when idx is empty.
Matrix pick_columns(const Matrix& m, const std::vector<std::size_t>& idx, std::size_t fallback) {
    if (!idx.empty()) return m.take_cols(idx);
    std::vector<std::size_t> first;
    for (std::size_t j = 0; j < std::min(fallback, m.cols()); ++j) first.push_back(j);
    return m.take_cols(first);
}

std::vector<std::string> pick_labels(const std::string& prefix, const std::vector<std::size_t>& idx,
                                     std::size_t fallback, std::size_t available) {
    std::vector<std::string> out;
    if (!idx.empty()) {
        for (auto i : idx) out.push_back(prefix + std::to_string(i));
    } else {
        for (std::size_t j = 0; j < std::min(fallback, available); ++j) out.push_back(prefix + std::to_string(j));
    }
    return out;
}

void write_lattice(const fs::path& path, const std::string& title, const Matrix& rows,
                   std::vector<std::string> row_labels, const Matrix& cols, std::vector<std::string> col_labels) {
    svg::LatticeSpec spec;
    spec.title = title;
    spec.row_labels = std::move(row_labels);
    spec.col_labels = std::move(col_labels);
    write_text(path, svg::scatter_lattice(rows, cols, spec));
}

} // namespace

std::map<std::string, std::string> ExperimentConfig::to_map() const {
    auto m = train.to_map();
    m["dataset"] = data::kind_name(kind);
    m["n"] = std::to_string(n);
    m["data_seed"] = std::to_string(data_seed);
    m["split_ratio"] = textio::exact(split_ratio);
    m["active_threshold"] = textio::exact(active_threshold);
    m["pca_components"] = std::to_string(pca_components);
    m["ica_components"] = std::to_string(ica_components);
    m["ica_max_iter"] = std::to_string(ica_max_iter);
    m["ica_tol"] = textio::exact(ica_tol);
    return m;
}

void ExperimentConfig::apply(const std::map<std::string, std::string>& kv) {
    std::map<std::string, std::string> train_kv;
    for (const auto& [key, value] : kv) {
        if (!is_experiment_key(key)) {
            train_kv.emplace(key, value);
            continue;
        }
        if (key == "dataset") kind = data::parse_kind(value);
        else if (key == "n") n = textio::parse_u64(value);
        else if (key == "data_seed") data_seed = textio::parse_u64(value);
        else if (key == "split_ratio") split_ratio = textio::parse_double(value);
        else if (key == "active_threshold") active_threshold = textio::parse_double(value);
        else if (key == "pca_components") pca_components = textio::parse_u64(value);
        else if (key == "ica_components") ica_components = textio::parse_u64(value);
        else if (key == "ica_max_iter") ica_max_iter = textio::parse_u64(value);
        else if (key == "ica_tol") ica_tol = textio::parse_double(value);
    }
    train.apply(train_kv);
}

std::string ExperimentConfig::to_text() const {
    std::string out;
    for (const auto& [k, v] : to_map()) out += k + "=" + v + "\n";
    return out;
}

void ExperimentConfig::validate() const {
    train.validate();
    if (n < 2) throw ArgumentError("n must be at least 2");
    if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw ArgumentError("split_ratio must lie in (0, 1)");
    if (!(active_threshold >= 0.0)) throw ArgumentError("active_threshold must be non-negative");
    if (pca_components == 0 || pca_components > data::kObservationDim)
        throw ArgumentError("pca_components must lie in [1, " + std::to_string(data::kObservationDim) + "]");
    if (ica_components == 0 || ica_components > data::kObservationDim)
        throw ArgumentError("ica_components must lie in [1, " + std::to_string(data::kObservationDim) + "]");
    if (!(ica_tol > 0.0)) throw ArgumentError("ica_tol must be positive");
}

std::map<std::string, std::string> parse_kv_text(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream is(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = std::string(textio::trim(line));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(line_no, "expected key=value");
        std::string key(textio::trim(line.substr(0, eq)));
        std::string value(textio::trim(line.substr(eq + 1)));
        if (key.empty()) throw ParseError(line_no, "empty key");
        kv[key] = value;
    }
    return kv;
}

ExperimentConfig load_config(const fs::path& path) {
    ExperimentConfig c;
    c.apply(parse_kv_text(read_file(path)));
    return c;
}

std::uint64_t default_total_iters(data::GeneratorKind kind) {
    return kind == data::GeneratorKind::linear ? 12000 : 32000;
}

std::uint64_t default_shrink_gap(data::GeneratorKind kind) {
    return kind == data::GeneratorKind::linear ? 100 : 200;
}

ExperimentConfig default_config(data::GeneratorKind kind, std::size_t latents, std::uint64_t seed) {
    ExperimentConfig c;
    c.kind = kind;
    c.data_seed = seed;
    c.train.seed = seed;
    c.train.latent_dim = latents;
    c.train.total_iters = default_total_iters(kind);
    c.train.shrink_gap = default_shrink_gap(kind);
    return c;
}

data::SplitDataset split_for(const data::FactorDataset& ds, double ratio) {
    return data::split(ds, ratio, RngState(ds.seed).split(kSplitStream));
}

BaselineReport run_baselines(const ExperimentConfig& config, const Matrix& x, const Matrix& y) {
    BaselineReport b;
    b.pca = baselines::pca_fit(x, config.pca_components);
    b.pca_scores = baselines::pca_transform(b.pca, x);
    const auto ylabels = analysis::numbered_labels("y", y.cols());
    b.pca_vs_y = analysis::corr_grid(b.pca_scores, y, analysis::numbered_labels("pc", b.pca_scores.cols()), ylabels);
    try {
        RngState rng = RngState(config.data_seed).split(kIcaStream);
        b.ica = baselines::fastica_fit(x, config.ica_components, rng, {config.ica_max_iter, config.ica_tol});
        b.ica_sources = baselines::ica_transform(*b.ica, x);
        b.ica_vs_y =
            analysis::corr_grid(b.ica_sources, y, analysis::numbered_labels("ic", b.ica_sources.cols()), ylabels);
    } catch (const RankError& e) {
        b.ica_error = e.what();
    }
    return b;
}

RunReport analyze(const ExperimentConfig& config, const vae::VaeModel& model, const data::SplitDataset& split) {
    const auto& test = split.test;
    RunReport r;
    r.config = config;
    r.activation = analysis::detect_active(model, test.x, config.active_threshold);
    r.mu_test = vae::encode(model, test.x).mu;
    r.y_test = test.y;
    const auto& active = r.activation.active;

    const auto zlabels = analysis::numbered_labels("z", r.mu_test.cols());
    r.latents_vs_y = analysis::corr_grid(r.mu_test, test.y, zlabels, analysis::numbered_labels("y", test.y.cols()));

    const auto base = run_baselines(config, test.x, test.y);
    r.pca_scores_test = base.pca_scores;
    r.latents_vs_pca = analysis::corr_grid(r.mu_test, base.pca_scores, zlabels, base.pca_vs_y.row_labels);
    r.baseline_pca_max_abs = base.pca_vs_y.max_abs();
    if (base.ica) {
        r.ica_sources_test = base.ica_sources;
        r.latents_vs_ica = analysis::corr_grid(r.mu_test, base.ica_sources, zlabels, base.ica_vs_y.row_labels);
        r.baseline_ica_max_abs = base.ica_vs_y.max_abs();
        r.ica_converged = base.ica->converged;
        if (!r.ica_converged)
            r.notes.push_back("FastICA baseline did not converge; ica_likeness is computed against the factors Y");
    } else {
        r.notes.push_back("FastICA baseline unavailable (" + base.ica_error + ")");
    }

    if (active.empty()) {
        r.notes.push_back("no active latents: the posterior collapsed to the prior");
    } else {
        const std::size_t k = std::min(active.size(), test.x.cols());
        const auto pca_k = baselines::pca_fit(test.x, k);
        r.match_pca = analysis::match_components(r.mu_test, baselines::pca_transform(pca_k, test.x), active);
        r.match_y = analysis::match_components(r.mu_test, test.y, active);
        r.pca_likeness = r.match_pca->mean_score;
        r.ica_likeness = r.match_y->mean_score;
    }

    r.peak_test = vae::psnr_peak(test.x);
    r.psnr_test = vae::psnr(test.x, vae::reconstruct_mean(model, test.x), r.peak_test);
    r.psnr_train =
        vae::psnr(split.train.x, vae::reconstruct_mean(model, split.train.x), vae::psnr_peak(split.train.x));
    return r;
}

SummaryRow summary_row(const std::string& run, const RunReport& report) {
    SummaryRow row;
    row.run = run;
    row.dataset = data::kind_name(report.config.kind);
    row.latents = report.config.train.latent_dim;
    row.active = report.activation.active.size();
    row.pca_likeness = report.pca_likeness;
    row.ica_likeness = report.ica_likeness;
    row.psnr_test = report.psnr_test;
    return row;
}

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return textio::sig6(v);
}

std::string format_psnr(double db) { return std::isinf(db) && db > 0 ? "exact" : format_number(db); }

std::string summary_csv(const std::vector<SummaryRow>& rows) {
    std::string out = "run,dataset,latents,active,pca_likeness,ica_likeness,psnr_test\n";
    for (const auto& r : rows) {
        out += r.run + "," + r.dataset + "," + std::to_string(r.latents) + ",";
        if (r.failed) {
            out += "FAILED,FAILED,FAILED,FAILED\n";
            continue;
        }
        out += std::to_string(r.active) + "," + format_number(r.pca_likeness) + "," + format_number(r.ica_likeness) +
               "," + format_psnr(r.psnr_test) + "\n";
    }
    return out;
}

std::string grid_csv(const analysis::CorrelationGrid& grid) {
    std::string out = "label";
    for (const auto& c : grid.col_labels) out += "," + c;
    out += "\n";
    for (std::size_t i = 0; i < grid.rows; ++i) {
        out += grid.row_labels[i];
        for (std::size_t j = 0; j < grid.cols; ++j) {
            const auto v = grid.at(i, j);
            out += "," + (v ? format_number(*v) : std::string("NA"));
        }
        out += "\n";
    }
    return out;
}

std::string trace_csv(const vae::TrainTrace& trace, std::size_t latent_dim) {
    std::string out = "iter,beta,recon,kl_total";
    for (std::size_t j = 0; j < latent_dim; ++j) out += ",kl_" + std::to_string(j);
    out += "\n";
    for (const auto& rec : trace.records) {
        out += std::to_string(rec.iter) + "," + format_number(rec.beta) + "," + format_number(rec.recon) + "," +
               format_number(rec.kl_total);
        for (double k : rec.kl) out += "," + format_number(k);
        out += "\n";
    }
    return out;
}

namespace {

void append_matching(std::ostringstream& os, const char* name, const std::optional<analysis::MatchingResult>& m,
                     const char* component_prefix) {
    os << name << ":";
    if (!m) {
        os << " none\n";
        return;
    }
    os << "\n";
    for (const auto& p : m->pairs)
        os << "  z" << p.latent << " <-> " << component_prefix << p.component << "  |r| = " << format_number(p.score)
           << "\n";
    os << "  mean |r| = " << format_number(m->mean_score) << "\n";
}

} // namespace

std::string report_text(const RunReport& r) {
    std::ostringstream os;
    os << kVersion << " run report\n\n";
    os << "dataset: " << data::kind_name(r.config.kind) << " (n = " << r.config.n << ", seed " << r.config.data_seed
       << ")\n";
    os << "latents: " << r.config.train.latent_dim << "\n";
    os << "active threshold: " << format_number(r.activation.threshold) << " nats\n";
    os << "active latents (" << r.activation.active.size() << "):";
    for (auto a : r.activation.active) os << " z" << a << " (KL " << format_number(r.activation.kl[a]) << ")";
    os << "\n\n";
    append_matching(os, "matching to PCA components", r.match_pca, "pc");
    append_matching(os, "matching to factors Y", r.match_y, "y");
    os << "\npca_likeness: " << format_number(r.pca_likeness) << "\n";
    os << "ica_likeness: " << format_number(r.ica_likeness) << "\n";
    os << "psnr_train: " << format_psnr(r.psnr_train) << " dB\n";
    os << "psnr_test: " << format_psnr(r.psnr_test) << " dB (peak " << format_number(r.peak_test) << ")\n";
    os << "baseline PCA max |r| vs Y: " << format_number(r.baseline_pca_max_abs) << "\n";
    os << "baseline ICA max |r| vs Y: " << format_number(r.baseline_ica_max_abs)
       << (r.ica_converged ? "" : " (not converged)") << "\n";
    os << "wall clock: " << format_number(r.wall_seconds) << " s\n";
    if (!r.notes.empty()) {
        os << "\nnotes:\n";
        for (const auto& n : r.notes) os << "  - " << n << "\n";
    }
    os << "\nconfig (reload with --config config.txt):\n";
    for (const auto& [k, v] : r.config.to_map()) os << "  " << k << "=" << v << "\n";
    return os.str();
}

std::string baseline_report_text(const ExperimentConfig& config, const BaselineReport& b) {
    std::ostringstream os;
    os << kVersion << " baseline report\n\n";
    os << "dataset: " << data::kind_name(config.kind) << " (n = " << config.n << ", seed " << config.data_seed << ")\n";
    os << "PCA eigenvalues:";
    for (double e : b.pca.eigenvalues) os << " " << format_number(e);
    os << "\nPCA max |r| vs Y: " << format_number(b.pca_vs_y.max_abs()) << "\n";
    if (b.ica) {
        os << "FastICA (k = " << b.ica->k << "): " << (b.ica->converged ? "converged" : "not converged") << " after "
           << b.ica->iterations << " iterations\n";
        os << "FastICA max |r| vs Y: " << format_number(b.ica_vs_y.max_abs()) << "\n";
    } else {
        os << "FastICA unavailable: " << b.ica_error << "\n";
    }
    return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot write " + path.string());
    os << text;
    if (!os) throw Error("failed writing " + path.string());
}

void write_run_outputs(const fs::path& dir, const std::string& run_name, const RunReport& r) {
    fs::create_directories(dir);
    write_text(dir / "report.txt", report_text(r));
    write_text(dir / "config.txt", r.config.to_text());
    write_text(dir / "summary.csv", summary_csv({summary_row(run_name, r)}));
    write_text(dir / "grid_latents_y.csv", grid_csv(r.latents_vs_y));
    write_text(dir / "grid_latents_pca.csv", grid_csv(r.latents_vs_pca));
    write_text(dir / "grid_latents_ica.csv", grid_csv(r.latents_vs_ica));

    const auto& active = r.activation.active;
    const std::size_t fallback = 5;
    const auto zl = pick_labels("z", active, fallback, r.mu_test.cols());
    const auto z = pick_columns(r.mu_test, active, fallback);
    const auto ylabels = analysis::numbered_labels("y", r.y_test.cols());
    write_lattice(dir / "grid_latents_y.svg", run_name + ": active latents vs factors", z, zl, r.y_test, ylabels);
    write_lattice(dir / "grid_latents_pca.svg", run_name + ": active latents vs PCA scores", z, zl,
                  r.pca_scores_test, analysis::numbered_labels("pc", r.pca_scores_test.cols()));
    if (r.ica_sources_test.cols() > 0)
        write_lattice(dir / "grid_latents_ica.svg", run_name + ": active latents vs ICA sources", z, zl,
                      r.ica_sources_test, analysis::numbered_labels("ic", r.ica_sources_test.cols()));
}

void write_baseline_outputs(const fs::path& dir, const ExperimentConfig& config, const BaselineReport& b,
                            const Matrix& y) {
    fs::create_directories(dir);
    write_text(dir / "baseline_report.txt", baseline_report_text(config, b));
    write_text(dir / "config.txt", config.to_text());
    const auto ylabels = analysis::numbered_labels("y", y.cols());
    write_text(dir / "grid_pca_y.csv", grid_csv(b.pca_vs_y));
    write_lattice(dir / "grid_pca_y.svg", "PCA scores vs factors", b.pca_scores, b.pca_vs_y.row_labels, y, ylabels);
    if (b.ica) {
        write_text(dir / "grid_ica_y.csv", grid_csv(b.ica_vs_y));
        write_lattice(dir / "grid_ica_y.svg", "ICA sources vs factors", b.ica_sources, b.ica_vs_y.row_labels, y,
                      ylabels);
    }
}

RunOutputs execute_run(const ExperimentConfig& config, const fs::path& dir, const std::string& run_name,
                       std::ostream* log) {
    config.validate();
    const auto start = std::chrono::steady_clock::now();
    fs::create_directories(dir);
    const auto ds = data::generate(config.kind, config.data_seed, config.n);
    data::save(ds, dir / "data.csv");
    const auto split = split_for(ds, config.split_ratio);

    vae::TrainObserver observer;
    if (log) {
        observer = [&](const vae::TraceRecord& rec, const vae::VaeModel&) {
            *log << run_name << " iter " << rec.iter << " beta " << format_number(rec.beta) << " recon "
                 << format_number(rec.recon) << " kl " << format_number(rec.kl_total) << "\n";
        };
    }
    vae::TrainResult trained;
    try {
        trained = vae::train(config.train, split.train.x, observer);
    } catch (const vae::TrainingDiverged& e) {
        write_text(dir / "trace.csv", trace_csv(e.partial_trace(), config.train.latent_dim));
        throw;
    }
    write_text(dir / "trace.csv", trace_csv(trained.trace, config.train.latent_dim));
    vae::save_checkpoint(dir / "model.ckpt", trained.model, config.train);

    RunOutputs out{analyze(config, trained.model, split), std::move(trained.trace)};
    out.report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_run_outputs(dir, run_name, out.report);
    return out;
}

std::vector<PlannedRun> experiment_matrix(const ReproduceOptions& options) {
    struct Entry {
        data::GeneratorKind kind;
        std::size_t latents;
    };
    const Entry entries[] = {{data::GeneratorKind::linear, 5},
                             {data::GeneratorKind::linear, 100},
                             {data::GeneratorKind::nonlinear, 5},
                             {data::GeneratorKind::nonlinear, 100},
                             {data::GeneratorKind::nonlinear, 500}};
    std::vector<PlannedRun> runs;
    for (const auto& e : entries) {
        auto c = default_config(e.kind, e.latents, options.seed);
        c.n = options.n;
        auto kv = options.overrides;
        kv.erase("dataset");
        kv.erase("latent_dim");
        c.apply(kv);
        if (options.total_iters) c.train.total_iters = *options.total_iters;
        runs.push_back({std::string(data::kind_name(e.kind)) + "_L" + std::to_string(e.latents), c});
    }
    return runs;
}

namespace {

const SummaryRow* find_row(const std::vector<SummaryRow>& rows, const std::string& dataset, std::size_t latents) {
    for (const auto& r : rows)
        if (r.dataset == dataset && r.latents == latents && !r.failed) return &r;
    return nullptr;
}

std::string verdict(bool ok) { return ok ? "holds" : "does not hold"; }

} // namespace

ReproduceResult reproduce(const ReproduceOptions& options, std::ostream* log) {
    ReproduceResult result;
    for (const auto& run : experiment_matrix(options)) {
        if (log) *log << "== " << run.name << "\n";
        try {
            auto out = execute_run(run.config, options.out_dir / run.name, run.name, log);
            result.rows.push_back(summary_row(run.name, out.report));
        } catch (const std::exception& e) {
            SummaryRow row;
            row.run = run.name;
            row.dataset = data::kind_name(run.config.kind);
            row.latents = run.config.train.latent_dim;
            row.failed = true;
            row.error = e.what();
            result.rows.push_back(row);
            result.any_failed = true;
            if (log) *log << run.name << " FAILED: " << e.what() << "\n";
        }
    }

    auto& checks = result.checks;
    for (const auto& r : result.rows) {
        if (r.failed) {
            checks.push_back(r.run + ": FAILED (" + r.error + ")");
            continue;
        }
        checks.push_back(r.run + ": exactly 4 active latents " + verdict(r.active == 4) + " (" +
                         std::to_string(r.active) + ")");
    }
    if (const auto* l5 = find_row(result.rows, "linear", 5))
        checks.push_back("linear_L5: pca_likeness > ica_likeness " + verdict(l5->pca_likeness > l5->ica_likeness));
    if (const auto* l100 = find_row(result.rows, "linear", 100))
        checks.push_back("linear_L100: ica_likeness > pca_likeness " +
                         verdict(l100->ica_likeness > l100->pca_likeness));
    const auto* n5 = find_row(result.rows, "nonlinear", 5);
    const auto* n100 = find_row(result.rows, "nonlinear", 100);
    if (n5 && n100)
        checks.push_back("nonlinear: psnr_test(L100) > psnr_test(L5) " + verdict(n100->psnr_test > n5->psnr_test));

    write_text(options.out_dir / "summary.csv", summary_csv(result.rows));
    std::string text = std::string(kVersion) + " reproduce summary\n\n";
    for (const auto& c : checks) text += c + "\n";
    write_text(options.out_dir / "summary.txt", text);
    return result;
}

} // namespace bvlab::experiment
