// Acceptance gate: evaluates criteria A1-A10 and prints one PASS/FAIL line
// per criterion. Exit status is 0 when every criterion was evaluated; pass
// --strict to also fail on any FAIL line.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <set>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "bvlab/analysis.hpp"
#include "bvlab/baselines.hpp"
#include "bvlab/betavae.hpp"
#include "bvlab/datasets.hpp"
#include "bvlab/error.hpp"
#include "bvlab/experiment.hpp"
#include "bvlab/linalg.hpp"
#include "bvlab/nn.hpp"

#ifndef BVLAB_UNIT_TESTS_PATH
#error "BVLAB_UNIT_TESTS_PATH must point at the unit test executable"
#endif

using namespace bvlab;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt(double v) { return experiment::format_number(v); }

// ---------------------------------------------------------------- A1
Verdict a1_schedule() {
    const vae::BetaSchedule s{-45.0, 100, 0.917};
    double lo = 1.0, hi = 0.0;
    for (std::uint64_t it = 0; it < 100000; ++it) {
        const double r = vae::beta_at(s, it + 8 * s.shrink_gap) / vae::beta_at(s, it);
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    return {lo >= 0.4997 && hi <= 0.5000, "ratio range [" + fmt(lo) + ", " + fmt(hi) + "] over 1e5 iterations"};
}

// ---------------------------------------------------------------- A2
double rel_err(double a, double n) {
    return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-6});
}

Verdict a2_gradients() {
    double worst_recon = 0, worst_kl = 0, largest_kl = 0;
    for (std::uint64_t trial = 0; trial < 20; ++trial) {
        RngState rng(1000 + trial);
        const std::size_t in = 2 + rng.uniform_below(3), latent = 1 + rng.uniform_below(3);
        const std::size_t hidden = 2 + rng.uniform_below(3);
        auto model = vae::make_model(rng, in, latent, {hidden});
        for (auto* net : {&model.encoder, &model.decoder})
            for (auto& layer : net->layers) {
                for (double& w : layer.weights.data()) w = 0.6 * rng.standard_normal();
                for (double& b : layer.bias) b = 0.2 * rng.standard_normal();
            }
        const Matrix x = sample(rng, Distribution::standard_normal, 4, in);
        const Matrix eps = sample(rng, Distribution::standard_normal, 4, latent);
        const auto g0 = vae::objective_and_gradient(model, x, eps, 0.0);
        const auto g1 = vae::objective_and_gradient(model, x, eps, 1.0);
        const auto f0 = [&] { return vae::objective(model, x, eps, 0.0); };
        const auto fkl = [&] { return vae::objective(model, x, eps, 1.0) - vae::objective(model, x, eps, 0.0); };
        auto diff = [](double& p, const std::function<double()>& f) {
            const double saved = p, h = 1e-5;
            p = saved + h;
            const double fp = f();
            p = saved - h;
            const double fm = f();
            p = saved;
            return (fp - fm) / (2 * h);
        };
        for (auto [net, a0, a1] : {std::tuple{&model.encoder, &g0.grads.encoder, &g1.grads.encoder},
                                   std::tuple{&model.decoder, &g0.grads.decoder, &g1.grads.decoder}}) {
            auto params = nn::parameter_blocks(*net);
            const auto r0 = nn::gradient_blocks(*a0), r1 = nn::gradient_blocks(*a1);
            for (std::size_t b = 0; b < params.size(); ++b)
                for (std::size_t i = 0; i < params[b].size(); ++i) {
                    worst_recon = std::max(worst_recon, rel_err(r0[b][i], diff(params[b][i], f0)));
                    worst_kl = std::max(worst_kl, rel_err(r1[b][i] - r0[b][i], diff(params[b][i], fkl)));
                    largest_kl = std::max(largest_kl, std::abs(r1[b][i] - r0[b][i]));
                }
        }
    }
    return {worst_recon < 1e-4 && worst_kl < 1e-3,
            "20 models; worst rel. error recon " + fmt(worst_recon) + " (< 1e-4), KL " + fmt(worst_kl) + " (< 1e-3); largest |KL gradient| " + fmt(largest_kl)};
}

// ---------------------------------------------------------------- A3
Verdict a3_pca() {
    bool ok = true;
    std::ostringstream d;
    for (std::uint64_t seed : {1, 2, 3}) {
        const auto ds = data::generate(data::GeneratorKind::linear, seed, 10000);
        const auto p5 = baselines::pca_fit(ds.x, 5);
        const double ratio = p5.eigenvalues[4] / p5.eigenvalues[0];
        const auto full = baselines::pca_fit(ds.x, ds.x.cols());
        Matrix rebuilt(ds.x.cols(), ds.x.cols());
        for (std::size_t a = 0; a < rebuilt.rows(); ++a)
            for (std::size_t b = 0; b < rebuilt.cols(); ++b)
                for (std::size_t k = 0; k < full.eigenvalues.size(); ++k)
                    rebuilt(a, b) += full.components(k, a) * full.eigenvalues[k] * full.components(k, b);
        const double err = max_abs_diff(rebuilt, covariance(ds.x));
        ok = ok && ratio < 1e-8 && err < 1e-6;
        d << "seed " << seed << ": l5/l1 " << fmt(ratio) << ", cov err " << fmt(err) << "; ";
    }
    return {ok, d.str()};
}

// ---------------------------------------------------------------- A4
Verdict a4_ica() {
    int good = 0;
    bool rank_error = true;
    std::ostringstream d;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto ds = data::generate(data::GeneratorKind::linear, seed, 10000);
        RngState rng = RngState(seed).split(experiment::kIcaStream);
        const auto ica = baselines::fastica_fit(ds.x, 4, rng);
        const auto m = analysis::match_components(ds.y, baselines::ica_transform(ica, ds.x),
                                                  std::vector<std::size_t>{0, 1, 2, 3});
        double worst = 1.0;
        for (const auto& p : m.pairs) worst = std::min(worst, p.score);
        if (m.pairs.size() == 4 && worst > 0.9) ++good;
        d << "seed " << seed << " min |r| " << fmt(worst) << "; ";
        try {
            RngState r5(seed);
            baselines::fastica_fit(ds.x, 5, r5);
            rank_error = false;
        } catch (const RankError&) {
        }
    }
    d << "k=5 " << (rank_error ? "raises RankError" : "did NOT raise RankError");
    return {good >= 4 && rank_error, std::to_string(good) + "/5 seeds match all factors; " + d.str()};
}

// ------------------------------------------------------- training runs
struct RunResult {
    std::uint64_t seed = 0;
    std::size_t latents = 0;
    data::GeneratorKind kind = data::GeneratorKind::linear;
    experiment::RunReport report;
    double seconds = 0;
};

class RunCache {
public:
    explicit RunCache(fs::path dir) : dir_(std::move(dir)) {}

    const RunResult& get(data::GeneratorKind kind, std::size_t latents, std::uint64_t seed) {
        const auto key = std::string(data::kind_name(kind)) + "_L" + std::to_string(latents) + "_s" + std::to_string(seed);
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;
        const auto start = Clock::now();
        const auto config = experiment::default_config(kind, latents, seed);
        const auto out = experiment::execute_run(config, dir_ / key, key);
        RunResult r{seed, latents, kind, out.report, seconds_since(start)};
        const auto& rep = r.report;
        std::cout << "  run " << key << ": active " << rep.activation.active.size() << ", pca "
                  << fmt(rep.pca_likeness) << ", ica " << fmt(rep.ica_likeness) << ", psnr_test "
                  << fmt(rep.psnr_test) << " dB, " << fmt(r.seconds) << " s" << std::endl;
        return cache_.emplace(key, std::move(r)).first->second;
    }

private:
    fs::path dir_;
    std::map<std::string, RunResult> cache_;
};

// ---------------------------------------------------------------- A5
Verdict a5_active(RunCache& runs) {
    bool ok = true;
    std::ostringstream d;
    for (std::size_t latents : {5, 100}) {
        int four = 0;
        d << "L=" << latents << " active counts [";
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const auto n = runs.get(data::GeneratorKind::linear, latents, seed).report.activation.active.size();
            four += n == 4;
            d << (seed > 1 ? " " : "") << n;
        }
        d << "] " << four << "/5; ";
        ok = ok && four >= 4;
    }
    return {ok, d.str()};
}

// ---------------------------------------------------------------- A6
Verdict a6_crossover(RunCache& runs) {
    bool ok = true;
    std::ostringstream d;
    for (std::size_t latents : {5, 100}) {
        int wins = 0, used = 0;
        d << "L=" << latents << " (pca, ica):";
        for (std::uint64_t seed = 1; used < 5 && seed <= 10; ++seed) {
            const auto& r = runs.get(data::GeneratorKind::linear, latents, seed).report;
            if (r.activation.active.size() != 4) {
                d << " s" << seed << " excluded;";
                continue;
            }
            ++used;
            const bool win = latents == 5 ? r.pca_likeness > r.ica_likeness : r.ica_likeness > r.pca_likeness;
            wins += win;
            d << " s" << seed << " (" << fmt(r.pca_likeness) << ", " << fmt(r.ica_likeness) << ")";
        }
        d << " -> " << (latents == 5 ? "PCA-like" : "ICA-like") << " in " << wins << "/" << used << "; ";
        ok = ok && used == 5 && wins >= 3;
    }
    return {ok, d.str()};
}

// ---------------------------------------------------------------- A7
Verdict a7_psnr(RunCache& runs) {
    int ordered = 0, four5 = 0, four100 = 0;
    std::ostringstream d;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto& r5 = runs.get(data::GeneratorKind::nonlinear, 5, seed).report;
        const auto& r100 = runs.get(data::GeneratorKind::nonlinear, 100, seed).report;
        ordered += r100.psnr_test > r5.psnr_test;
        four5 += r5.activation.active.size() == 4;
        four100 += r100.activation.active.size() == 4;
        d << "s" << seed << " " << fmt(r100.psnr_test) << " vs " << fmt(r5.psnr_test) << " (active "
          << r100.activation.active.size() << "/" << r5.activation.active.size() << "); ";
    }
    return {ordered >= 4 && four5 >= 4 && four100 >= 4,
            "PSNR(100) > PSNR(5) in " + std::to_string(ordered) + "/5, exactly 4 active: L=5 " +
                std::to_string(four5) + "/5, L=100 " + std::to_string(four100) + "/5; " + d.str()};
}

// ---------------------------------------------------------------- A8
Verdict a8_nonlinear_baselines(RunCache& runs) {
    int good = 0;
    std::ostringstream d;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto& r = runs.get(data::GeneratorKind::nonlinear, 5, seed).report;
        const double baseline = std::max(r.baseline_pca_max_abs, r.baseline_ica_max_abs);
        const double vae = r.match_y ? r.match_y->mean_score : 0.0;
        good += vae - baseline >= 0.15;
        d << "s" << seed << " vae " << fmt(vae) << " pca " << fmt(r.baseline_pca_max_abs) << " ica "
          << fmt(r.baseline_ica_max_abs) << "; ";
    }
    return {good >= 4, "gap >= 0.15 in " + std::to_string(good) + "/5 seeds; " + d.str()};
}

// ---------------------------------------------------------------- A9
Verdict a9_determinism(const fs::path& dir, std::uint64_t iters) {
    std::string summaries[2];
    double secs = 0;
    for (int i = 0; i < 2; ++i) {
        experiment::ReproduceOptions o;
        o.seed = 1;
        o.total_iters = iters;
        o.out_dir = dir / ("reproduce_" + std::to_string(i));
        const auto start = Clock::now();
        experiment::reproduce(o);
        secs = seconds_since(start);
        std::ifstream is(o.out_dir / "summary.csv", std::ios::binary);
        std::ostringstream ss;
        ss << is.rdbuf();
        summaries[i] = ss.str();
    }
    return {!summaries[0].empty() && summaries[0] == summaries[1],
            "two reproduce passes (" + std::to_string(iters) + " iterations per run, " + fmt(secs) +
                " s each): summary.csv " + (summaries[0] == summaries[1] ? "byte-identical" : "DIFFERS")};
}

// ---------------------------------------------------------------- A10
Verdict a10_properties() {
    const auto start = Clock::now();
    const std::string cmd = std::string(BVLAB_UNIT_TESTS_PATH) + " --gtest_brief=1 > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    const double secs = seconds_since(start);
    const bool ok = WIFEXITED(status) && WEXITSTATUS(status) == 0;
    return {ok && secs < 120.0, std::string("unit/property suite ") + (ok ? "passed" : "FAILED") + " in " + fmt(secs) + " s"};
}

} // namespace

int main(int argc, char** argv) {
    bool strict = false;
    fs::path out_dir = fs::temp_directory_path() / "bvlab_acceptance";
    std::uint64_t a9_iters = 400;
    std::set<std::string> only;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--strict") strict = true;
        else if (arg == "--out-dir" && i + 1 < argc) out_dir = argv[++i];
        else if (arg == "--a9-iters" && i + 1 < argc) a9_iters = std::stoull(argv[++i]);
        else if (arg == "--only" && i + 1 < argc) only.insert(argv[++i]);
        else {
            std::cerr << "usage: bvlab_acceptance [--strict] [--out-dir DIR] [--a9-iters N] [--only ID]...\n";
            return 2;
        }
    }
    fs::create_directories(out_dir);
    RunCache runs(out_dir / "runs");

    struct Criterion {
        const char* id;
        const char* name;
        std::function<Verdict()> fn;
    };
    std::vector<Criterion> criteria = {
        {"A1", "beta schedule halves every 8 shrinks", a1_schedule},
        {"A2", "objective gradients match finite differences", a2_gradients},
        {"A3", "PCA oracle on linear data", a3_pca},
        {"A4", "FastICA recovers linear factors; k=5 rank error", a4_ica},
        {"A5", "exactly 4 active latents on linear data", [&] { return a5_active(runs); }},
        {"A6", "PCA-like (5 latents) vs ICA-like (100 latents)", [&] { return a6_crossover(runs); }},
        {"A7", "non-linear PSNR(100) > PSNR(5)", [&] { return a7_psnr(runs); }},
        {"A8", "non-linear PCA/ICA trail the beta-VAE by 0.15", [&] { return a8_nonlinear_baselines(runs); }},
        {"A9", "reproduce is byte-deterministic", [&] { return a9_determinism(out_dir, a9_iters); }},
        {"A10", "property suites", a10_properties},
    };

    if (!only.empty())
        std::erase_if(criteria, [&](const Criterion& c) { return !only.contains(c.id); });

    int passed = 0, evaluated = 0;
    std::vector<std::string> lines;
    for (const auto& c : criteria) {
        std::cout << "[" << c.id << "] " << c.name << " ..." << std::endl;
        const auto start = Clock::now();
        Verdict v;
        try {
            v = c.fn();
            ++evaluated;
        } catch (const std::exception& e) {
            v = {false, std::string("error: ") + e.what()};
        }
        passed += v.pass;
        std::ostringstream line;
        line << c.id << " " << (v.pass ? "PASS" : "FAIL") << "  " << c.name << " -- " << v.detail << " ["
             << fmt(seconds_since(start)) << " s]";
        lines.push_back(line.str());
        std::cout << lines.back() << std::endl;
    }
    std::ostringstream summary;
    summary << "==== acceptance summary ====\n";
    for (const auto& l : lines) summary << l << "\n";
    summary << passed << "/" << criteria.size() << " criteria passed; " << evaluated << "/" << criteria.size()
            << " evaluated\n";
    std::cout << "\n" << summary.str() << std::flush;
    std::ofstream(out_dir / "acceptance_summary.txt") << summary.str();
    if (evaluated != static_cast<int>(criteria.size())) return 1;
    return strict && passed != static_cast<int>(criteria.size()) ? 1 : 0;
}
