#include "bvlab/nn.hpp"

#include <cmath>

#include "bvlab/error.hpp"
#include "bvlab/kernels.hpp"

namespace bvlab::nn {

const char* activation_name(Activation a) noexcept {
    switch (a) {
    case Activation::selu: return "selu";
    case Activation::tanh: return "tanh";
    case Activation::linear: return "linear";
    }
    return "linear";
}

Activation parse_activation(const std::string& name) {
    if (name == "selu") return Activation::selu;
    if (name == "tanh") return Activation::tanh;
    if (name == "linear") return Activation::linear;
    throw ArgumentError("unknown activation '" + name + "'");
}

double selu(double x) noexcept { return x > 0.0 ? kSeluLambda * x : kSeluLambda * kSeluAlpha * std::expm1(x); }

double selu_derivative(double x) noexcept { return x > 0.0 ? kSeluLambda : kSeluLambda * kSeluAlpha * std::exp(x); }

bool operator==(const DenseLayer& a, const DenseLayer& b) {
    return a.activation == b.activation && a.weights == b.weights && a.bias == b.bias;
}

std::size_t Mlp::input_dim() const {
    if (layers.empty()) throw ShapeError("empty Mlp has no input dimension");
    return layers.front().in();
}

std::size_t Mlp::output_dim() const {
    if (layers.empty()) throw ShapeError("empty Mlp has no output dimension");
    return layers.back().out();
}

std::size_t Mlp::parameter_count() const noexcept {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weights.size() + l.bias.size();
    return n;
}

void Mlp::validate() const {
    if (layers.empty()) throw ShapeError("Mlp has no layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        if (l.bias.size() != l.out())
            throw ShapeError("layer " + std::to_string(i) + ": bias length " + std::to_string(l.bias.size()) +
                             " does not match weights " + l.weights.shape_str());
        if (i > 0 && layers[i - 1].out() != l.in())
            throw ShapeError("layer " + std::to_string(i) + " input " + std::to_string(l.in()) +
                             " does not chain with previous output " + std::to_string(layers[i - 1].out()));
    }
}

namespace {

void apply_activation(Activation act, const Matrix& pre, Matrix& out) {
    auto src = pre.data();
    auto dst = out.data();
    switch (act) {
    case Activation::selu:
        for (std::size_t i = 0; i < src.size(); ++i) dst[i] = selu(src[i]);
        break;
    case Activation::tanh:
        for (std::size_t i = 0; i < src.size(); ++i) dst[i] = std::tanh(src[i]);
        break;
    case Activation::linear: std::copy(src.begin(), src.end(), dst.begin()); break;
    }
}

Matrix affine(const DenseLayer& layer, const Matrix& x) {
    Matrix pre(x.rows(), layer.out());
    const auto& k = kernels::active();
    k.add_row(x.rows(), layer.out(), layer.bias.data(), pre.data().data());
    k.gemm_nn(x.rows(), layer.in(), layer.out(), x.data().data(), layer.weights.data().data(), pre.data().data());
    return pre;
}

void check_input(const Mlp& net, const Matrix& x) {
    if (net.layers.empty()) throw ShapeError("forward through an empty Mlp");
    if (x.cols() != net.input_dim())
        throw ShapeError("Mlp expects " + std::to_string(net.input_dim()) + " input columns, got " + x.shape_str());
}

} // namespace

ForwardResult mlp_forward(const Mlp& net, const Matrix& x) {
    check_input(net, x);
    ForwardResult r;
    r.tape.inputs.reserve(net.layers.size());
    r.tape.pre_activations.reserve(net.layers.size());
    Matrix current = x;
    for (const auto& layer : net.layers) {
        Matrix pre = affine(layer, current);
        Matrix out(pre.rows(), pre.cols());
        apply_activation(layer.activation, pre, out);
        r.tape.inputs.push_back(std::move(current));
        r.tape.pre_activations.push_back(std::move(pre));
        current = std::move(out);
    }
    r.output = std::move(current);
    return r;
}

Matrix mlp_predict(const Mlp& net, const Matrix& x) {
    check_input(net, x);
    Matrix current = x;
    for (const auto& layer : net.layers) {
        Matrix pre = affine(layer, current);
        apply_activation(layer.activation, pre, pre);
        current = std::move(pre);
    }
    return current;
}

MlpGrads mlp_backward(const Mlp& net, const GradTape& tape, const Matrix& dl_dy) {
    const std::size_t depth = net.layers.size();
    if (tape.inputs.size() != depth || tape.pre_activations.size() != depth)
        throw TapeError("tape records " + std::to_string(tape.inputs.size()) + " layers, network has " +
                        std::to_string(depth));
    const std::size_t batch = dl_dy.rows();
    for (std::size_t i = 0; i < depth; ++i) {
        const auto& l = net.layers[i];
        if (tape.inputs[i].rows() != batch || tape.inputs[i].cols() != l.in() ||
            tape.pre_activations[i].rows() != batch || tape.pre_activations[i].cols() != l.out())
            throw TapeError("tape entry for layer " + std::to_string(i) + " does not match layer shape or batch size " +
                            std::to_string(batch));
    }
    if (dl_dy.cols() != net.output_dim())
        throw ShapeError("upstream gradient " + dl_dy.shape_str() + " does not match output width " +
                         std::to_string(net.output_dim()));

    const auto& k = kernels::active();
    MlpGrads g;
    g.layers.resize(depth);
    Matrix upstream = dl_dy;
    for (std::size_t ii = depth; ii-- > 0;) {
        const auto& layer = net.layers[ii];
        const Matrix& pre = tape.pre_activations[ii];
        Matrix dz(batch, layer.out());
        // The next layer's recorded input is this layer's activation; reuse it
        // instead of re-evaluating exp/tanh where possible.
        const Matrix* act = ii + 1 < depth ? &tape.inputs[ii + 1] : nullptr;
        if (layer.activation == Activation::linear) {
            dz = upstream;
        } else {
            Matrix deriv(batch, layer.out());
            auto p = pre.data();
            auto d = deriv.data();
            if (layer.activation == Activation::selu) {
                constexpr double la = kSeluLambda * kSeluAlpha;
                if (act) {
                    auto a = act->data();
                    for (std::size_t i = 0; i < p.size(); ++i) d[i] = p[i] > 0.0 ? kSeluLambda : a[i] + la;
                } else {
                    for (std::size_t i = 0; i < p.size(); ++i) d[i] = selu_derivative(p[i]);
                }
            } else {
                for (std::size_t i = 0; i < p.size(); ++i) {
                    const double t = act ? act->data()[i] : std::tanh(p[i]);
                    d[i] = 1.0 - t * t;
                }
            }
            k.mul(dz.size(), upstream.data().data(), deriv.data().data(), dz.data().data());
        }

        auto& lg = g.layers[ii];
        lg.weights = Matrix(layer.in(), layer.out());
        k.gemm_tn(layer.in(), batch, layer.out(), tape.inputs[ii].data().data(), dz.data().data(),
                  lg.weights.data().data());
        lg.bias.assign(layer.out(), 0.0);
        k.col_sum(batch, layer.out(), dz.data().data(), lg.bias.data());

        Matrix wt(layer.out(), layer.in());
        for (std::size_t r = 0; r < layer.in(); ++r)
            for (std::size_t c = 0; c < layer.out(); ++c) wt(c, r) = layer.weights(r, c);
        Matrix down(batch, layer.in());
        k.gemm_nn(batch, layer.out(), layer.in(), dz.data().data(), wt.data().data(), down.data().data());
        upstream = std::move(down);
    }
    g.input = std::move(upstream);
    return g;
}

Mlp init_lecun(RngState& rng, const MlpSpec& spec) {
    if (spec.input == 0 || spec.layers.empty()) throw ArgumentError("init_lecun: empty network spec");
    Mlp net;
    std::size_t fan_in = spec.input;
    for (const auto& ls : spec.layers) {
        if (ls.out == 0) throw ArgumentError("init_lecun: zero-width layer");
        DenseLayer layer;
        layer.weights = sample(rng, Distribution::standard_normal, fan_in, ls.out);
        const double sd = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (double& w : layer.weights.data()) w *= sd;
        layer.bias.assign(ls.out, 0.0);
        layer.activation = ls.activation;
        net.layers.push_back(std::move(layer));
        fan_in = ls.out;
    }
    return net;
}

std::vector<std::span<double>> parameter_blocks(Mlp& net) {
    std::vector<std::span<double>> blocks;
    for (auto& l : net.layers) {
        blocks.emplace_back(l.weights.data());
        blocks.emplace_back(l.bias);
    }
    return blocks;
}

std::vector<std::span<const double>> parameter_blocks(const Mlp& net) {
    std::vector<std::span<const double>> blocks;
    for (const auto& l : net.layers) {
        blocks.emplace_back(l.weights.data());
        blocks.emplace_back(l.bias);
    }
    return blocks;
}

std::vector<std::span<const double>> gradient_blocks(const MlpGrads& grads) {
    std::vector<std::span<const double>> blocks;
    for (const auto& l : grads.layers) {
        blocks.emplace_back(l.weights.data());
        blocks.emplace_back(l.bias);
    }
    return blocks;
}

AdamState::AdamState(const Mlp& net, AdamConfig config) : config_(config) {
    for (auto block : parameter_blocks(net)) {
        m_.emplace_back(block.size(), 0.0);
        v_.emplace_back(block.size(), 0.0);
    }
}

void adam_step(Mlp& net, const MlpGrads& grads, AdamState& state) {
    auto params = parameter_blocks(net);
    auto gblocks = gradient_blocks(grads);
    const std::uint64_t t = state.step_ + 1;
    if (params.size() != gblocks.size() || params.size() != state.m_.size())
        throw ShapeError("adam_step: parameter, gradient and moment block counts differ");
    for (std::size_t b = 0; b < params.size(); ++b) {
        if (params[b].size() != gblocks[b].size() || params[b].size() != state.m_[b].size())
            throw ShapeError("adam_step: block " + std::to_string(b) + " size mismatch");
        for (double g : gblocks[b])
            if (!std::isfinite(g)) throw DivergenceError(t, "non-finite gradient");
    }

    const auto& cfg = state.config_;
    kernels::AdamCoefficients c{cfg.lr,
                                cfg.beta1,
                                cfg.beta2,
                                cfg.eps,
                                1.0 - std::pow(cfg.beta1, static_cast<double>(t)),
                                1.0 - std::pow(cfg.beta2, static_cast<double>(t))};
    const auto& k = kernels::active();
    for (std::size_t b = 0; b < params.size(); ++b)
        k.adam(params[b].size(), c, gblocks[b].data(), state.m_[b].data(), state.v_[b].data(), params[b].data());
    state.step_ = t;
}

} // namespace bvlab::nn
