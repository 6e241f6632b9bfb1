#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bvlab/matrix.hpp"
#include "bvlab/rng.hpp"

namespace bvlab::nn {

enum class Activation { selu, tanh, linear };

const char* activation_name(Activation a) noexcept;
Activation parse_activation(const std::string& name);

// Published SeLU constants (self-normalizing networks).
inline constexpr double kSeluLambda = 1.0507009873554804934193349852946;
inline constexpr double kSeluAlpha = 1.6732632423543772848170429916717;

double selu(double x) noexcept;
double selu_derivative(double x) noexcept;

struct DenseLayer {
    Matrix weights; // in x out
    std::vector<double> bias;
    Activation activation = Activation::linear;

    std::size_t in() const noexcept { return weights.rows(); }
    std::size_t out() const noexcept { return weights.cols(); }
};

struct Mlp {
    std::vector<DenseLayer> layers;

    std::size_t input_dim() const;
    std::size_t output_dim() const;
    std::size_t parameter_count() const noexcept;
    /// Throws ShapeError if the layer chain or bias sizes are inconsistent.
    void validate() const;

    friend bool operator==(const Mlp&, const Mlp&) = default;
};

bool operator==(const DenseLayer& a, const DenseLayer& b);

struct LayerSpec {
    std::size_t out;
    Activation activation;
};

struct MlpSpec {
    std::size_t input;
    std::vector<LayerSpec> layers;
};

/// Inputs and pre-activations of every layer from one forward pass.
struct GradTape {
    std::vector<Matrix> inputs;
    std::vector<Matrix> pre_activations;
};

struct ForwardResult {
    Matrix output;
    GradTape tape;
};

struct LayerGrads {
    Matrix weights;
    std::vector<double> bias;
};

struct MlpGrads {
    std::vector<LayerGrads> layers;
    Matrix input; // dL/dx
};

ForwardResult mlp_forward(const Mlp& net, const Matrix& x);
/// Forward pass without recording a tape.
Matrix mlp_predict(const Mlp& net, const Matrix& x);
MlpGrads mlp_backward(const Mlp& net, const GradTape& tape, const Matrix& dl_dy);

/// Weights ~ N(0, 1/fan_in), zero biases.
Mlp init_lecun(RngState& rng, const MlpSpec& spec);

/// Parameter blocks in order W0, b0, W1, b1, ...
std::vector<std::span<double>> parameter_blocks(Mlp& net);
std::vector<std::span<const double>> parameter_blocks(const Mlp& net);
std::vector<std::span<const double>> gradient_blocks(const MlpGrads& grads);

struct AdamConfig {
    double lr = 2e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// First/second moments shaped like the parameter blocks of one Mlp.
class AdamState {
public:
    AdamState(const Mlp& net, AdamConfig config);

    const AdamConfig& config() const noexcept { return config_; }
    std::uint64_t step() const noexcept { return step_; }
    const std::vector<std::vector<double>>& first_moments() const noexcept { return m_; }
    const std::vector<std::vector<double>>& second_moments() const noexcept { return v_; }

private:
    friend void adam_step(Mlp& net, const MlpGrads& grads, AdamState& state);

    AdamConfig config_;
    std::uint64_t step_ = 0;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
};

/// One bias-corrected Adam update. A non-finite gradient throws
/// DivergenceError carrying the update index (state.step() + 1) and leaves
/// the parameters untouched.
void adam_step(Mlp& net, const MlpGrads& grads, AdamState& state);

} // namespace bvlab::nn
