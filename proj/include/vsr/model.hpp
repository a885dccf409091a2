#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vsr/frame.hpp"
#include "vsr/ops.hpp"

namespace vsr {

enum class LayerKind { Conv3D, Conv2D };
enum class Activation { ReLU, None };
enum class ModelTask { SuperResolution, SceneClassifier };

// Order in which (group, depth) pairs become channels when a stack of GTFMs is
// flattened for 2D layers. GroupMajor keeps all depth slices of group 0 first.
enum class FlattenOrder { GroupMajor, DepthMajor };

const char* to_string(LayerKind k);
const char* to_string(Activation a);
const char* to_string(ModelTask t);
const char* to_string(FlattenOrder f);

struct LayerSpec {
    LayerKind kind = LayerKind::Conv3D;
    int inGroups = 1;
    int outGroups = 1;
    int kD = 3;
    int kH = 3;
    int kW = 3;
    TemporalPad temporalPad = TemporalPad::None;
    Activation activation = Activation::ReLU;
    int spatialPad = 1;
    int stride = 1;

    PadPolicy pad() const { return PadPolicy{spatialPad, temporalPad, 1}; }
    Shape kernel_shape() const { return Shape{outGroups, inGroups, kD, kH, kW}; }
    long weight_count() const { return static_cast<long>(outGroups) * inGroups * kD * kH * kW; }

    friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct ModelSpec {
    std::string name;
    ModelTask task = ModelTask::SuperResolution;
    std::vector<LayerSpec> layers;
    // Number of layers applied before depth is flattened into channels
    // (0 flattens the raw input frames).
    std::optional<int> concatAfter;
    int inputFrames = 5;
    int scale = 2;
    FlattenOrder flatten = FlattenOrder::GroupMajor;

    // Throws std::invalid_argument describing the first violated invariant.
    void validate() const;
    // Output depth of every layer for a window of `inputFrames`.
    std::vector<int> depth_trace() const;

    friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

template <typename T>
struct BasicParams {
    std::vector<ConvWeights<T>> layers;

    template <typename U>
    BasicParams<U> cast() const {
        BasicParams<U> out;
        for (const auto& l : layers) out.layers.push_back(l.template cast<U>());
        return out;
    }
    friend bool operator==(const BasicParams&, const BasicParams&) = default;
};

using ModelParams = BasicParams<float>;

// cnn2d, v1, v2, v3, full
const std::vector<std::string>& architecture_names();
ModelSpec build_architecture(const std::string& name, int scale);

long count_parameters(const ModelSpec& spec, bool includeBias = false);

template <typename T>
BasicParams<T> zero_params(const ModelSpec& spec);

// Throws when shapes do not follow the spec or any value is non-finite.
template <typename T>
void check_params(const ModelSpec& spec, const BasicParams<T>& params);

template <typename T>
BasicTensor<T> flatten_depth(const BasicTensor<T>& x, FlattenOrder order);
template <typename T>
BasicTensor<T> unflatten_depth(const BasicTensor<T>& x, const Shape& original, FlattenOrder order);

// Intermediate values kept for backpropagation.
template <typename T>
struct ForwardCache {
    std::vector<BasicTensor<T>> inputs;  // input of each layer, after any flatten
    std::vector<BasicTensor<T>> preact;  // convolution output before activation
    Shape beforeFlatten{};
};

// Runs layers [0, stopAfter) (all layers when stopAfter < 0) on an input of
// shape (N, 1, inputFrames, H, W) and returns the last activation.
template <typename T>
BasicTensor<T> run_network(const ModelSpec& spec, const BasicParams<T>& params, const BasicTensor<T>& input,
                           ForwardCache<T>* cache = nullptr, int stopAfter = -1);

// Accumulates parameter gradients into `grads` (shaped like params, reset by
// the caller) and returns the gradient with respect to the network input
// (empty when `needInput` is false).
template <typename T>
BasicTensor<T> backprop_network(const ModelSpec& spec, const BasicParams<T>& params, const ForwardCache<T>& cache,
                                const BasicTensor<T>& gradOut, BasicParams<T>& grads, bool needInput = true);

// Unclamped SR prediction: pixel-shuffled residual plus `baseline`, the
// bicubic upscale of each sample's middle frame, shape (N, 1, 1, H*s, W*s).
template <typename T>
BasicTensor<T> sr_predict(const ModelSpec& spec, const BasicParams<T>& params, const BasicTensor<T>& lr,
                          const BasicTensor<T>& baseline, ForwardCache<T>* cache = nullptr);

template <typename T>
BasicTensor<T> sr_backward(const ModelSpec& spec, const BasicParams<T>& params, const ForwardCache<T>& cache,
                           const BasicTensor<T>& gradPrediction, BasicParams<T>& grads, bool needInput = true);

// Stacks frames along depth: (1, 1, frames, H, W).
Tensor stack_window(std::span<const Plane> frames);

// HR luma of the middle frame, clamped to [0,1].
Plane forward(const ModelParams& params, const ModelSpec& spec, std::span<const Plane> window);

// Scale-2 network serving x3 / x4 by bicubic pre-upscaling the inputs by 1.5 / 2.
Plane forward_multiscale(const ModelParams& params, const ModelSpec& spec, std::span<const Plane> window,
                         int requestedScale);

// Writes every depth slice of every group at `layer` (1-based) as a
// min-max normalized PGM; returns the number of images written.
int dump_feature_maps(const ModelParams& params, const ModelSpec& spec, std::span<const Plane> window, int layer,
                      const std::filesystem::path& dir);

}  // namespace vsr
