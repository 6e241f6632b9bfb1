#include "bvlab/betavae.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "bvlab/kernels.hpp"
#include "bvlab/linalg.hpp"
#include "bvlab/textio.hpp"

namespace bvlab::vae {

void BetaSchedule::validate() const {
    if (!(base > 0.0 && base < 1.0)) throw ArgumentError("beta schedule base must lie in (0, 1)");
    if (shrink_gap < 1) throw ArgumentError("beta schedule shrink_gap must be >= 1");
    if (!std::isfinite(beta_init)) throw ArgumentError("beta_init must be finite");
}

double beta_at(const BetaSchedule& s, std::uint64_t iter) {
    const auto steps = static_cast<double>(iter / s.shrink_gap);
    return std::pow(s.base, s.beta_init + steps);
}

void TrainConfig::validate() const {
    schedule().validate();
    if (latent_dim == 0) throw ArgumentError("latent_dim must be positive");
    if (!(lr >= 0.0) || !std::isfinite(lr)) throw ArgumentError("lr must be finite and non-negative");
    if (batch_size == 0) throw ArgumentError("batch_size must be positive");
    if (log_every == 0) throw ArgumentError("log_every must be positive");
    for (auto h : hidden)
        if (h == 0) throw ArgumentError("hidden layer widths must be positive");
}

std::map<std::string, std::string> TrainConfig::to_map() const {
    std::string hid;
    for (std::size_t i = 0; i < hidden.size(); ++i) hid += (i ? "x" : "") + std::to_string(hidden[i]);
    return {
        {"latent_dim", std::to_string(latent_dim)},
        {"beta_init", textio::exact(beta_init)},
        {"shrink_gap", std::to_string(shrink_gap)},
        {"base", textio::exact(base)},
        {"lr", textio::exact(lr)},
        {"batch_size", std::to_string(batch_size)},
        {"total_iters", std::to_string(total_iters)},
        {"seed", std::to_string(seed)},
        {"log_every", std::to_string(log_every)},
        {"hidden", hid.empty() ? "none" : hid},
    };
}

void TrainConfig::apply(const std::map<std::string, std::string>& kv) {
    for (const auto& [key, value] : kv) {
        if (key == "latent_dim") latent_dim = textio::parse_u64(value);
        else if (key == "beta_init") beta_init = textio::parse_double(value);
        else if (key == "shrink_gap") shrink_gap = textio::parse_u64(value);
        else if (key == "base") base = textio::parse_double(value);
        else if (key == "lr") lr = textio::parse_double(value);
        else if (key == "batch_size") batch_size = textio::parse_u64(value);
        else if (key == "total_iters") total_iters = textio::parse_u64(value);
        else if (key == "seed") seed = textio::parse_u64(value);
        else if (key == "log_every") log_every = textio::parse_u64(value);
        else if (key == "hidden") {
            hidden.clear();
            if (value != "none")
                for (const auto& tok : textio::split(value, 'x')) hidden.push_back(textio::parse_u64(tok));
        } else
            throw ArgumentError("unknown training option '" + key + "'");
    }
}

void VaeModel::validate() const {
    encoder.validate();
    decoder.validate();
    if (encoder.output_dim() != 2 * latent_dim)
        throw ShapeError("encoder output width " + std::to_string(encoder.output_dim()) + " != 2 x latent_dim " +
                         std::to_string(latent_dim));
    if (decoder.input_dim() != latent_dim)
        throw ShapeError("decoder input width " + std::to_string(decoder.input_dim()) + " != latent_dim " +
                         std::to_string(latent_dim));
    if (encoder.input_dim() != decoder.output_dim())
        throw ShapeError("encoder input and decoder output widths differ");
}

VaeModel make_model(RngState& rng, std::size_t input_dim, std::size_t latent_dim,
                    const std::vector<std::size_t>& hidden) {
    if (input_dim == 0 || latent_dim == 0) throw ArgumentError("make_model: dimensions must be positive");
    nn::MlpSpec enc{input_dim, {}};
    nn::MlpSpec dec{latent_dim, {}};
    for (auto h : hidden) {
        enc.layers.push_back({h, nn::Activation::selu});
        dec.layers.push_back({h, nn::Activation::selu});
    }
    enc.layers.push_back({2 * latent_dim, nn::Activation::linear});
    dec.layers.push_back({input_dim, nn::Activation::linear});

    VaeModel m;
    m.encoder = nn::init_lecun(rng, enc);
    m.decoder = nn::init_lecun(rng, dec);
    m.latent_dim = latent_dim;
    for (double& w : m.encoder.layers.back().weights.data()) w = 0.0;
    return m;
}

Posterior encode(const VaeModel& model, const Matrix& x) {
    if (x.cols() != model.encoder.input_dim())
        throw ShapeError("encode: expected " + std::to_string(model.encoder.input_dim()) + " columns, got " +
                         x.shape_str());
    const Matrix h = nn::mlp_predict(model.encoder, x);
    return {h.block_cols(0, model.latent_dim), h.block_cols(model.latent_dim, model.latent_dim)};
}

Matrix reparameterize_with(const Matrix& mu, const Matrix& log_var, const Matrix& eps) {
    if (mu.rows() != log_var.rows() || mu.cols() != log_var.cols() || mu.rows() != eps.rows() ||
        mu.cols() != eps.cols())
        throw ShapeError("reparameterize: mu " + mu.shape_str() + ", log_var " + log_var.shape_str() + ", eps " +
                         eps.shape_str());
    Matrix z(mu.rows(), mu.cols());
    auto zd = z.data();
    auto m = mu.data();
    auto lv = log_var.data();
    auto e = eps.data();
    for (std::size_t i = 0; i < zd.size(); ++i) zd[i] = m[i] + std::exp(0.5 * lv[i]) * e[i];
    return z;
}

Matrix reparameterize(RngState& rng, const Matrix& mu, const Matrix& log_var) {
    if (mu.empty()) return mu;
    const Matrix eps = sample(rng, Distribution::standard_normal, mu.rows(), mu.cols());
    return reparameterize_with(mu, log_var, eps);
}

std::vector<double> kl_per_dim(const Matrix& mu, const Matrix& log_var) {
    if (mu.rows() != log_var.rows() || mu.cols() != log_var.cols())
        throw ShapeError("kl_per_dim: mu " + mu.shape_str() + " vs log_var " + log_var.shape_str());
    std::vector<double> kl(mu.cols(), 0.0);
    if (mu.rows() == 0) return kl;
    for (std::size_t r = 0; r < mu.rows(); ++r) {
        auto m = mu.row(r);
        auto lv = log_var.row(r);
        for (std::size_t c = 0; c < kl.size(); ++c) kl[c] += 0.5 * (m[c] * m[c] + std::exp(lv[c]) - lv[c] - 1.0);
    }
    for (double& k : kl) k /= static_cast<double>(mu.rows());
    return kl;
}

namespace {

double reconstruction_loss(const Matrix& x, const Matrix& x_hat) {
    if (x.rows() != x_hat.rows() || x.cols() != x_hat.cols())
        throw ShapeError("reconstruction: x " + x.shape_str() + " vs x_hat " + x_hat.shape_str());
    double s = 0.0;
    auto a = x.data();
    auto b = x_hat.data();
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return 0.5 * s / static_cast<double>(x.rows());
}

double sum(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

} // namespace

LossParts loss(const Matrix& x, const Matrix& x_hat, const Matrix& mu, const Matrix& log_var, double beta) {
    if (beta < 0.0) throw ArgumentError("beta must be non-negative");
    LossParts p;
    p.recon = reconstruction_loss(x, x_hat);
    p.kl = sum(kl_per_dim(mu, log_var));
    p.total = beta == 0.0 ? p.recon : p.recon + beta * p.kl;
    if (!std::isfinite(p.total)) throw DivergenceError(0, "non-finite loss");
    return p;
}

ObjectiveEval objective_and_gradient(const VaeModel& model, const Matrix& x, const Matrix& eps, double beta) {
    const std::size_t n = x.rows();
    const std::size_t latent = model.latent_dim;
    auto enc = nn::mlp_forward(model.encoder, x);
    const Matrix mu = enc.output.block_cols(0, latent);
    const Matrix log_var = enc.output.block_cols(latent, latent);
    const Matrix z = reparameterize_with(mu, log_var, eps);
    auto dec = nn::mlp_forward(model.decoder, z);

    ObjectiveEval out;
    out.kl_dims = kl_per_dim(mu, log_var);
    out.parts.recon = reconstruction_loss(x, dec.output);
    out.parts.kl = sum(out.kl_dims);
    out.parts.total = out.parts.recon + beta * out.parts.kl;

    const double inv_n = 1.0 / static_cast<double>(n);
    Matrix d_xhat(n, x.cols());
    {
        auto d = d_xhat.data();
        auto xh = dec.output.data();
        auto xd = x.data();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = (xh[i] - xd[i]) * inv_n;
    }
    out.grads.decoder = nn::mlp_backward(model.decoder, dec.tape, d_xhat);
    const Matrix& dz = out.grads.decoder.input;

    Matrix d_head(n, 2 * latent);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < latent; ++c) {
            const double m = mu(r, c);
            const double lv = log_var(r, c);
            const double sd = std::exp(0.5 * lv);
            const double g = dz(r, c);
            d_head(r, c) = g + beta * m * inv_n;
            d_head(r, latent + c) = g * eps(r, c) * 0.5 * sd + beta * 0.5 * (std::exp(lv) - 1.0) * inv_n;
        }
    }
    out.grads.encoder = nn::mlp_backward(model.encoder, enc.tape, d_head);
    return out;
}

double objective(const VaeModel& model, const Matrix& x, const Matrix& eps, double beta) {
    const auto post = encode(model, x);
    const Matrix z = reparameterize_with(post.mu, post.log_var, eps);
    const Matrix x_hat = nn::mlp_predict(model.decoder, z);
    return reconstruction_loss(x, x_hat) + beta * sum(kl_per_dim(post.mu, post.log_var));
}

Matrix reconstruct(const VaeModel& model, const Matrix& x, bool use_mean, RngState& rng) {
    const auto post = encode(model, x);
    if (use_mean) return nn::mlp_predict(model.decoder, post.mu);
    return nn::mlp_predict(model.decoder, reparameterize(rng, post.mu, post.log_var));
}

Matrix reconstruct_mean(const VaeModel& model, const Matrix& x) {
    return nn::mlp_predict(model.decoder, encode(model, x).mu);
}

double psnr_peak(const Matrix& x) {
    if (x.empty()) throw InsufficientDataError("psnr_peak of empty matrix");
    double lo = x.data()[0], hi = x.data()[0];
    for (double v : x.data()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return hi - lo;
}

double psnr(const Matrix& x, const Matrix& x_hat, double peak) {
    if (x.rows() != x_hat.rows() || x.cols() != x_hat.cols())
        throw ShapeError("psnr: x " + x.shape_str() + " vs x_hat " + x_hat.shape_str());
    if (x.empty()) throw InsufficientDataError("psnr of empty matrix");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x.data()[i] - x_hat.data()[i];
        s += d * d;
    }
    const double mse = s / static_cast<double>(x.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse);
}

VaeModel initial_model(const TrainConfig& config, const Matrix& x) {
    config.validate();
    if (x.rows() == 0) throw InsufficientDataError("training data is empty");
    RngState init_rng = RngState(config.seed).split(1);
    VaeModel model = make_model(init_rng, x.cols(), config.latent_dim, config.hidden);
    model.decoder.layers.back().bias = column_means(x);
    return model;
}

TrainResult train(const TrainConfig& config, const Matrix& x, const TrainObserver& observer) {
    return train_from(config, x, initial_model(config, x), 0, observer);
}

TrainResult train_from(const TrainConfig& config, const Matrix& x, VaeModel model, std::uint64_t iter_offset,
                       const TrainObserver& observer) {
    config.validate();
    model.validate();
    if (x.cols() != model.input_dim())
        throw ShapeError("training data " + x.shape_str() + " does not match model input width " +
                         std::to_string(model.input_dim()));
    if (x.rows() < config.batch_size)
        throw InsufficientDataError("training set has " + std::to_string(x.rows()) + " rows, fewer than batch size " +
                                    std::to_string(config.batch_size));

    const RngState root(config.seed);
    RngState shuffle_rng = root.split(2 + 2 * iter_offset);
    RngState noise_rng = root.split(3 + 2 * iter_offset);
    const auto schedule = config.schedule();

    nn::AdamConfig adam_cfg;
    adam_cfg.lr = config.lr;
    nn::AdamState enc_state(model.encoder, adam_cfg);
    nn::AdamState dec_state(model.decoder, adam_cfg);

    TrainResult result;
    std::vector<std::size_t> order;
    std::size_t cursor = x.rows();
    const std::size_t bs = config.batch_size;
    const std::uint64_t end = iter_offset + config.total_iters;

    for (std::uint64_t iter = iter_offset; iter < end; ++iter) {
        if (cursor + bs > x.rows()) {
            order = permutation(shuffle_rng, x.rows());
            cursor = 0;
        }
        const Matrix batch = x.take_rows(std::span<const std::size_t>(order).subspan(cursor, bs));
        cursor += bs;

        const double beta = beta_at(schedule, iter);
        const Matrix eps = sample(noise_rng, Distribution::standard_normal, bs, config.latent_dim);
        ObjectiveEval ev = objective_and_gradient(model, batch, eps, beta);

        const bool log_now = (iter - iter_offset) % config.log_every == 0 || iter + 1 == end;
        if (log_now) result.trace.records.push_back({iter, beta, ev.parts.recon, ev.parts.kl, ev.kl_dims});
        if (!std::isfinite(ev.parts.total)) throw TrainingDiverged(iter, "non-finite loss", result.trace);

        try {
            nn::adam_step(model.encoder, ev.grads.encoder, enc_state);
            nn::adam_step(model.decoder, ev.grads.decoder, dec_state);
        } catch (const DivergenceError&) {
            throw TrainingDiverged(iter, "non-finite gradient", result.trace);
        }
        if (log_now && observer) observer(result.trace.records.back(), model);
    }
    result.model = std::move(model);
    return result;
}

namespace {

void write_mlp(std::ostream& os, const char* name, const nn::Mlp& net) {
    os << name << ' ' << net.layers.size() << '\n';
    for (const auto& l : net.layers) {
        os << "layer " << l.in() << ' ' << l.out() << ' ' << nn::activation_name(l.activation) << '\n';
        os << "w " << textio::join_hex(l.weights.data()) << '\n';
        os << "b " << textio::join_hex(l.bias) << '\n';
    }
}

struct LineReader {
    std::istream& is;
    std::size_t line_no = 0;

    std::string next() {
        std::string line;
        if (!std::getline(is, line)) throw ParseError(line_no + 1, "unexpected end of checkpoint");
        ++line_no;
        return line;
    }

    std::vector<std::string> tokens() {
        const std::string line = next();
        std::vector<std::string> out;
        std::istringstream ss(line);
        std::string tok;
        while (ss >> tok) out.push_back(tok);
        if (out.empty()) throw ParseError(line_no, "empty line");
        return out;
    }
};

std::vector<double> read_values(LineReader& r, const char* tag, std::size_t expected) {
    const std::string line = r.next();
    const std::string prefix = std::string(tag) + " ";
    if (line.rfind(prefix, 0) != 0 && line != tag) throw ParseError(r.line_no, std::string("expected '") + tag + "'");
    std::vector<double> vals;
    try {
        vals = textio::parse_doubles(line.size() > prefix.size() ? std::string_view(line).substr(prefix.size()) : "");
    } catch (const ArgumentError& e) {
        throw ParseError(r.line_no, e.what());
    }
    if (vals.size() != expected)
        throw ParseError(r.line_no, "expected " + std::to_string(expected) + " values, got " +
                                        std::to_string(vals.size()));
    return vals;
}

nn::Mlp read_mlp(LineReader& r, const std::string& name) {
    auto head = r.tokens();
    if (head.size() != 2 || head[0] != name) throw ParseError(r.line_no, "expected '" + name + " <layers>'");
    nn::Mlp net;
    try {
        const auto count = textio::parse_u64(head[1]);
        for (std::uint64_t i = 0; i < count; ++i) {
            auto lt = r.tokens();
            if (lt.size() != 4 || lt[0] != "layer") throw ParseError(r.line_no, "expected 'layer <in> <out> <act>'");
            const auto in = textio::parse_u64(lt[1]);
            const auto out = textio::parse_u64(lt[2]);
            nn::DenseLayer layer;
            layer.activation = nn::parse_activation(lt[3]);
            layer.weights = Matrix(in, out, read_values(r, "w", in * out));
            layer.bias = read_values(r, "b", out);
            net.layers.push_back(std::move(layer));
        }
    } catch (const ArgumentError& e) {
        throw ParseError(r.line_no, e.what());
    }
    return net;
}

constexpr const char* kCheckpointMagic = "bvlab-checkpoint 1";

} // namespace

void save_checkpoint(const std::filesystem::path& path, const VaeModel& model, const TrainConfig& config) {
    std::ofstream os(path);
    if (!os) throw Error("cannot open checkpoint for writing: " + path.string());
    os << kCheckpointMagic << '\n';
    os << "latent_dim " << model.latent_dim << '\n';
    for (const auto& [k, v] : config.to_map()) os << "config " << k << ' ' << v << '\n';
    write_mlp(os, "encoder", model.encoder);
    write_mlp(os, "decoder", model.decoder);
    os << "end\n";
    if (!os) throw Error("failed writing checkpoint: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open checkpoint: " + path.string());
    LineReader r{is};
    if (r.next() != kCheckpointMagic) throw ParseError(1, "not a bvlab checkpoint (bad header)");
    Checkpoint ck;
    auto ld = r.tokens();
    if (ld.size() != 2 || ld[0] != "latent_dim") throw ParseError(r.line_no, "expected 'latent_dim <n>'");
    try {
        ck.model.latent_dim = textio::parse_u64(ld[1]);
    } catch (const ArgumentError& e) {
        throw ParseError(r.line_no, e.what());
    }
    std::map<std::string, std::string> kv;
    std::vector<std::string> toks;
    while (true) {
        const auto pos = is.tellg();
        toks = r.tokens();
        if (toks[0] != "config") {
            is.seekg(pos);
            --r.line_no;
            break;
        }
        if (toks.size() != 3) throw ParseError(r.line_no, "expected 'config <key> <value>'");
        kv[toks[1]] = toks[2];
    }
    try {
        ck.config.apply(kv);
    } catch (const ArgumentError& e) {
        throw ParseError(r.line_no, e.what());
    }
    ck.model.encoder = read_mlp(r, "encoder");
    ck.model.decoder = read_mlp(r, "decoder");
    if (r.next() != "end") throw ParseError(r.line_no, "expected 'end'");
    ck.model.validate();
    return ck;
}

} // namespace bvlab::vae
