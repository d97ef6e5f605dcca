#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sharknet/graph.hpp"
#include "sharknet/rng.hpp"
#include "sharknet/tensor.hpp"

namespace sharknet {

enum class Activation { None, Relu };

// Declarative layer specifications for sequential stacks.
struct Conv2DSpec {
    int filters = 1;
    int kernel = 3;
    int stride = 1;
    Activation activation = Activation::Relu;
};
struct MaxPool2DSpec {
    int pool = 2;
    int stride = 2;
};
struct FlattenSpec {};
struct DenseSpec {
    int units = 1;
    Activation activation = Activation::None;
};
struct DropoutSpec {
    double rate = 0.5;
};

using LayerSpec = std::variant<Conv2DSpec, MaxPool2DSpec, FlattenSpec, DenseSpec, DropoutSpec>;

struct InputShape {
    std::int64_t height = 224;
    std::int64_t width = 224;
    std::int64_t channels = 3;
};

struct ModelConfig {
    InputShape input_shape;
    std::vector<LayerSpec> layers;
    std::vector<std::string> class_names;
    std::uint64_t seed = 0;

    // Throws ConfigError on duplicate class names or a final layer that is
    // not a logits-emitting Dense of |class_names| units.
    void validate() const;

    std::string to_json() const;
    static ModelConfig from_json(const std::string& text);
};

struct Parameter {
    int layer_index = 0;
    std::string role;  // "kernel" | "bias" | "weights"
    TensorPtr value;

    std::string name() const { return "layer" + std::to_string(layer_index) + "." + role; }
};

// Output shape of every layer given an input shape; index 0 is the input.
// Shapes exclude the batch dimension. Throws ShapeError, naming the layer,
// if the spatial extent collapses below the kernel/pool size.
std::vector<Shape> layer_output_shapes(const ModelConfig& config);

// Trainable parameter count per layer (0 for parameterless layers).
std::vector<std::int64_t> per_layer_parameter_counts(const ModelConfig& config);

class Model {
public:
    Model() = default;
    Model(ModelConfig config, std::vector<Parameter> parameters)
        : config_(std::move(config)), parameters_(std::move(parameters)) {}

    const ModelConfig& config() const { return config_; }
    std::vector<Parameter>& parameters() { return parameters_; }
    const std::vector<Parameter>& parameters() const { return parameters_; }

    bool training_mode() const { return training_; }
    void set_training(bool on) { training_ = on; }

    std::int64_t parameter_count() const;

    // Runs the layer stack; returns logits [N x K]. Dropout is active only
    // in training mode, and then draws its masks from `rng`.
    TensorPtr forward(Graph& graph, const TensorPtr& batch, Rng* rng = nullptr) const;

    // Post-activation output of the 128-unit dense layer, before dropout.
    // Throws ConfigError when the stack has no such layer.
    TensorPtr extract_features(Graph& graph, const TensorPtr& batch) const;

    void zero_grads();

private:
    TensorPtr run_layers(Graph& graph, const TensorPtr& batch, Rng* rng,
                         std::optional<int> stop_after_dense_units) const;

    ModelConfig config_;
    std::vector<Parameter> parameters_;
    bool training_ = false;
};

// The canonical stack: Conv2D(32,3)+relu, MaxPool(2,2), Conv2D(32,3)+relu,
// MaxPool(2,2), Conv2D(64,3)+relu, MaxPool(2,2), Flatten, Dense(128)+relu,
// Dropout(rate), Dense(num_classes) emitting logits. At input 224x224x3 and
// 10 classes this is the 5,567,850-parameter configuration.
ModelConfig sharknet_config(InputShape input_shape, const std::vector<std::string>& class_names,
                            double dropout_rate, std::uint64_t seed);

Model build_sharknet(InputShape input_shape, int num_classes, double dropout_rate,
                     std::uint64_t seed);
Model build_model(const ModelConfig& config);

// The ten genus labels of the classification task, in fixed order.
const std::vector<std::string>& default_class_names();

}  // namespace sharknet
