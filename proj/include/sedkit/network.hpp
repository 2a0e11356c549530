#pragma once

// Multi-task frame classifier.
//
// Input is a (bands x T) feature matrix; every layer maps T frames to T
// frames. The first `n_shared` trunk layers are shared; the remaining trunk
// layers are instantiated once per branch. The SED branch ends in a dense
// C-way sigmoid layer, the SAD branch in a hidden dense layer followed by a
// single sigmoid.

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sedkit/common.hpp"

namespace sedkit::model {

enum class LayerKind { conv1d, dense };
enum class Activation { elu, relu, tanh, sigmoid, linear };

std::string_view to_string(LayerKind kind);
std::string_view to_string(Activation act);

struct LayerSpec {
    LayerKind kind = LayerKind::dense;
    int width = 32;
    int kernel = 1;  // odd; temporal context of conv1d layers
    Activation activation = Activation::elu;

    bool operator==(const LayerSpec&) const = default;
};

struct NetworkConfig {
    int input_dim = kMelBands;
    int n_classes = 5;
    std::vector<LayerSpec> trunk;
    int n_shared = 2;
    int sad_hidden = 16;
    double dropout_p = 0.30;

    bool operator==(const NetworkConfig&) const = default;
};

NetworkConfig default_network_config(int n_classes = 5);
void validate(const NetworkConfig& cfg);

/// Loss weights of the joint objective a * L_sed + b * L_sad.
struct LossWeights {
    double a = 0.5;
    double b = 0.5;

    bool operator==(const LossWeights&) const = default;
};

void validate(const LossWeights& w);

enum class Branch { shared, sed, sad };

struct Outputs {
    Matrix sed;  // T x C
    Vector sad;  // T
};

struct LossParts {
    double joint = 0.0;
    double sed = 0.0;
    double sad = 0.0;
};

struct Gradient {
    LossParts loss;
    std::vector<double> values;
};

class Network {
public:
    explicit Network(NetworkConfig cfg);

    const NetworkConfig& config() const { return cfg_; }
    std::size_t parameter_count() const { return n_params_; }

    /// Uniform +-sqrt(6 / fan_in) weights, zero biases.
    std::vector<double> init_parameters(std::uint64_t seed) const;

    /// Branch owning each parameter index.
    std::vector<Branch> parameter_branches() const;

    /// `features` is bands x T. Dropout is applied only when train_mode is
    /// set, and then `dropout_rng` must be non-null.
    Outputs forward(std::span<const double> params, const Matrix& features, bool train_mode = false,
                    std::mt19937_64* dropout_rng = nullptr) const;

    /// Joint loss and its exact gradient with respect to every parameter.
    Gradient backward(std::span<const double> params, const Matrix& features, const BinaryMatrix& gt_sed,
                      const BinaryVector& gt_sad, LossWeights weights, bool train_mode = false,
                      std::mt19937_64* dropout_rng = nullptr) const;

    /// Loss only, in eval mode.
    LossParts loss(std::span<const double> params, const Matrix& features, const BinaryMatrix& gt_sed,
                   const BinaryVector& gt_sad, LossWeights weights) const;

private:
    struct Layer {
        Branch branch;
        int in = 0;
        int out = 0;
        int kernel = 1;
        Activation activation = Activation::linear;
        bool dropout = false;
        std::size_t w_offset = 0;
        std::size_t b_offset = 0;
    };
    struct Cache;

    void add_layer(Branch branch, int in, int out, int kernel, Activation act, bool dropout);
    Matrix run(const std::vector<std::size_t>& layers, std::span<const double> params, Matrix x, bool train,
               std::mt19937_64* rng, std::vector<Cache>* caches) const;
    Matrix run_back(const std::vector<std::size_t>& layers, std::span<const double> params, Matrix grad,
                    std::vector<Cache>& caches, std::span<double> out, bool need_input_grad) const;
    void check_input(const Matrix& features) const;

    NetworkConfig cfg_;
    std::vector<Layer> layers_;
    std::vector<std::size_t> shared_, sed_, sad_;
    std::size_t n_params_ = 0;
};

/// Mean binary cross-entropy with predictions clipped to [1e-7, 1 - 1e-7].
double bce(const Eigen::Ref<const Matrix>& pred, const Eigen::Ref<const Matrix>& target);

inline constexpr double kProbClip = 1e-7;

double joint_loss(double l_sed, double l_sad, LossWeights w);

void to_json(nlohmann::json& j, const LayerSpec& s);
void from_json(const nlohmann::json& j, LayerSpec& s);
void to_json(nlohmann::json& j, const NetworkConfig& c);
void from_json(const nlohmann::json& j, NetworkConfig& c);
void to_json(nlohmann::json& j, const LossWeights& w);
void from_json(const nlohmann::json& j, LossWeights& w);

}  // namespace sedkit::model
