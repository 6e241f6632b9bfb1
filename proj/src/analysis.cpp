#include "bvlab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bvlab/baselines.hpp"
#include "bvlab/error.hpp"
#include "bvlab/linalg.hpp"

namespace bvlab::analysis {

ActivationReport activation_from_kl(std::vector<double> kl, double threshold) {
    ActivationReport r;
    r.threshold = threshold;
    for (std::size_t i = 0; i < kl.size(); ++i)
        if (kl[i] > threshold) r.active.push_back(i);
    r.kl = std::move(kl);
    return r;
}

ActivationReport detect_active(const vae::VaeModel& model, const Matrix& data, double threshold) {
    if (data.rows() == 0) throw InsufficientDataError("detect_active: empty data");
    const auto post = vae::encode(model, data);
    return activation_from_kl(vae::kl_per_dim(post.mu, post.log_var), threshold);
}

double CorrelationGrid::max_abs() const {
    double m = 0.0;
    for (const auto& v : values)
        if (v) m = std::max(m, std::abs(*v));
    return m;
}

bool is_constant(std::span<const double> v) {
    if (v.size() < 2) return true;
    double lo = v[0], hi = v[0], scale = 0.0;
    for (double x : v) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
        scale = std::max(scale, std::abs(x));
    }
    return hi - lo <= 1e-12 * std::max(scale, 1e-300);
}

std::vector<std::string> numbered_labels(const std::string& prefix, std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
    return out;
}

CorrelationGrid corr_grid(const Matrix& a, const Matrix& b, std::vector<std::string> row_labels,
                          std::vector<std::string> col_labels) {
    if (a.rows() != b.rows()) throw ShapeError("corr_grid: " + a.shape_str() + " vs " + b.shape_str());
    CorrelationGrid g;
    g.rows = a.cols();
    g.cols = b.cols();
    g.row_labels = row_labels.empty() ? numbered_labels("a", g.rows) : std::move(row_labels);
    g.col_labels = col_labels.empty() ? numbered_labels("b", g.cols) : std::move(col_labels);
    if (g.row_labels.size() != g.rows || g.col_labels.size() != g.cols)
        throw ShapeError("corr_grid: label count does not match columns");
    g.values.assign(g.rows * g.cols, std::nullopt);

    std::vector<std::vector<double>> bcols(g.cols);
    std::vector<bool> bconst(g.cols);
    for (std::size_t j = 0; j < g.cols; ++j) {
        bcols[j] = b.col(j);
        bconst[j] = is_constant(bcols[j]);
    }
    for (std::size_t i = 0; i < g.rows; ++i) {
        const auto acol = a.col(i);
        if (is_constant(acol)) continue;
        for (std::size_t j = 0; j < g.cols; ++j) {
            if (bconst[j]) continue;
            g.values[i * g.cols + j] = pearson(acol, bcols[j]);
        }
    }
    return g;
}

std::vector<long> hungarian_max(const Matrix& weights) {
    const std::size_t n_rows = weights.rows();
    const std::size_t n_cols = weights.cols();
    if (n_rows == 0 || n_cols == 0) return std::vector<long>(n_rows, -1);
    if (n_rows > n_cols) {
        // Solve on the transpose and invert.
        const auto col_to_row = hungarian_max(transpose(weights));
        std::vector<long> out(n_rows, -1);
        for (std::size_t c = 0; c < n_cols; ++c)
            if (col_to_row[c] >= 0) out[static_cast<std::size_t>(col_to_row[c])] = static_cast<long>(c);
        return out;
    }
    // Shortest augmenting path with potentials on cost = -weight; 1-based.
    const std::size_t n = n_rows, m = n_cols;
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(m + 1, inf);
        std::vector<bool> used(m + 1, false);
        do {
            used[j0] = true;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const double cur = -weights(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<long> out(n, -1);
    for (std::size_t j = 1; j <= m; ++j)
        if (p[j]) out[p[j] - 1] = static_cast<long>(j - 1);
    return out;
}

MatchingResult match_components(const Matrix& latents, const Matrix& components, std::span<const std::size_t> active) {
    if (active.empty()) throw ArgumentError("match_components: no active latents");
    if (latents.rows() != components.rows())
        throw ShapeError("match_components: " + latents.shape_str() + " vs " + components.shape_str());
    for (auto a : active)
        if (a >= latents.cols()) throw ArgumentError("match_components: active index out of range");

    const Matrix sel = latents.take_cols(active);
    const CorrelationGrid grid = corr_grid(sel, components);
    Matrix w(sel.cols(), components.cols());
    for (std::size_t i = 0; i < w.rows(); ++i)
        for (std::size_t j = 0; j < w.cols(); ++j) {
            const auto r = grid.at(i, j);
            w(i, j) = r ? std::abs(*r) : 0.0;
        }
    const auto assign = hungarian_max(w);

    MatchingResult out;
    std::vector<bool> used(components.cols(), false);
    double total = 0.0;
    for (std::size_t i = 0; i < assign.size(); ++i) {
        if (assign[i] < 0) {
            out.unmatched_latents.push_back(active[i]);
            continue;
        }
        const auto c = static_cast<std::size_t>(assign[i]);
        used[c] = true;
        out.pairs.push_back({active[i], c, w(i, c)});
        total += w(i, c);
    }
    for (std::size_t c = 0; c < used.size(); ++c)
        if (!used[c]) out.unmatched_components.push_back(c);
    std::sort(out.pairs.begin(), out.pairs.end(), [](const MatchPair& a, const MatchPair& b) { return a.latent < b.latent; });
    out.mean_score = out.pairs.empty() ? 0.0 : total / static_cast<double>(out.pairs.size());
    return out;
}

double pca_likeness(const Matrix& latents, const Matrix& data, std::span<const std::size_t> active) {
    if (active.empty()) return 0.0;
    const std::size_t k = std::min(active.size(), data.cols());
    const auto pca = baselines::pca_fit(data, k);
    return match_components(latents, baselines::pca_transform(pca, data), active).mean_score;
}

double ica_likeness(const Matrix& latents, const Matrix& factors, std::span<const std::size_t> active) {
    if (active.empty()) return 0.0;
    return match_components(latents, factors, active).mean_score;
}

} // namespace bvlab::analysis
