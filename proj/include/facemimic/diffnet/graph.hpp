#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "facemimic/diffnet/tensor.hpp"

namespace facemimic::diffnet {

enum class LayerKind { Conv2d, Upsample2x, Concat, Relu, Sigmoid, Dense };

std::string to_string(LayerKind kind);
LayerKind layer_kind_from_string(const std::string& name);

struct LayerSpec {
    LayerKind kind = LayerKind::Relu;
    std::vector<int> inputs;  // node indices; node 0 is the graph input
    int out_channels = 0;     // Conv2d output channels / Dense output features
    int kernel = 1;
    int stride = 1;
    bool bias = true;
    friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Parameter gradients in the order of LayerGraph::params(), plus the input gradient.
struct Gradients {
    std::vector<Tensor> params;
    Tensor input;
};

struct AdamState {
    std::vector<Tensor> m;
    std::vector<Tensor> v;
    long long step = 0;
};

/// A small static DAG of layers. Nodes are appended in topological order and
/// the last node is the output. Convolutions use zero padding kernel/2, so a
/// stride-s layer maps h to ceil(h/s).
class LayerGraph {
public:
    LayerGraph() = default;
    explicit LayerGraph(Shape input);

    int conv2d(int from, int out_channels, int kernel, int stride = 1, bool bias = true);
    int upsample2x(int from);
    int concat(int a, int b);
    int relu(int from);
    int sigmoid(int from);
    /// Fully connected layer over the flattened node.
    int dense(int from, int out_features, bool bias = true);
    int add_layer(const LayerSpec& spec);

    /// Kaiming-style uniform weights in [-sqrt(6/fan_in), sqrt(6/fan_in)], zero biases; resets Adam state.
    void initialize(std::uint64_t seed);

    Shape input_shape() const { return shapes_.front(); }
    Shape output_shape() const { return shapes_.back(); }
    Shape node_shape(int node) const { return shapes_[static_cast<std::size_t>(node)]; }
    int node_count() const { return static_cast<int>(shapes_.size()); }
    const std::vector<LayerSpec>& layers() const { return layers_; }
    std::uint64_t seed() const { return seed_; }

    /// Weight and bias tensors in declaration order.
    std::vector<Tensor>& params() { return params_; }
    const std::vector<Tensor>& params() const { return params_; }
    std::size_t parameter_count() const;
    AdamState& adam() { return adam_; }
    const AdamState& adam() const { return adam_; }

    /// Evaluates the graph and keeps activations for backward().
    const Tensor& forward(const Tensor& input);
    /// Evaluates without touching the cache; safe to call concurrently on a const graph.
    Tensor infer(const Tensor& input) const;
    /// Double-precision evaluation with the given parameters (same order as params()).
    /// If `relu_active` is given it receives, for every ReLU input element, whether it was positive.
    TensorD infer_double(const TensorD& input, const std::vector<TensorD>& params,
                         std::vector<bool>* relu_active = nullptr) const;
    /// Reverse-mode pass for the most recent forward(). Throws StateError if there is none.
    Gradients backward(const Tensor& output_grad, bool want_input_grad = false);
    void clear_cache() {
        cache_.clear();
        grad_cache_.clear();
    }
    bool has_cache() const { return !cache_.empty(); }

    /// Multiply-accumulate count of one forward pass for a single sample.
    long long macs_per_sample() const;

    friend bool operator==(const LayerGraph& a, const LayerGraph& b) {
        return a.layers_ == b.layers_ && a.shapes_ == b.shapes_ && a.params_ == b.params_ && a.seed_ == b.seed_;
    }

private:
    struct ParamSlot {
        int weight = -1;
        int bias = -1;
    };

    template <class T>
    void run(const BasicTensor<T>& input, std::vector<BasicTensor<T>>& acts,
             const std::vector<BasicTensor<T>>& params, std::vector<bool>* relu_active = nullptr) const;

    std::vector<LayerSpec> layers_;  // layers_[i] produces node i+1
    std::vector<Shape> shapes_;      // node shapes, shapes_[0] = input
    std::vector<ParamSlot> slots_;   // per layer
    std::vector<Tensor> params_;
    AdamState adam_;
    std::uint64_t seed_ = 0;
    std::vector<Tensor> cache_;
    std::vector<Tensor> grad_cache_;
};

}  // namespace facemimic::diffnet
