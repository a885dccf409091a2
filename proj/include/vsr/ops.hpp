#pragma once

#include <string>
#include <vector>

#include "vsr/tensor.hpp"

namespace vsr {

enum class TemporalPad { None, Zero, Duplicate };

const char* to_string(TemporalPad p);
TemporalPad temporal_pad_from_string(const std::string& s);

// Padding applied before a convolution. Spatial padding is zero-valued on
// height and width; temporal padding adds `temporalPerSide` slices at the
// front and back of the depth axis.
struct PadPolicy {
    int spatial = 1;
    TemporalPad temporal = TemporalPad::None;
    int temporalPerSide = 1;

    int depth_pad() const { return temporal == TemporalPad::None ? 0 : temporalPerSide; }
};

// kernel extents: (outGroups, inGroups, kD, kH, kW); bias has outGroups entries.
template <typename T>
struct ConvWeights {
    BasicTensor<T> kernel;
    std::vector<T> bias;

    int out_groups() const { return kernel.shape().n; }
    int in_groups() const { return kernel.shape().c; }

    template <typename U>
    ConvWeights<U> cast() const {
        return {kernel.template cast<U>(), std::vector<U>(bias.begin(), bias.end())};
    }
    friend bool operator==(const ConvWeights&, const ConvWeights&) = default;
};

template <typename T>
struct ConvGrads {
    BasicTensor<T> input;
    ConvWeights<T> weights;
};

// Output extents of conv_forward; throws std::invalid_argument on mismatch.
Shape conv_output_shape(const Shape& input, const Shape& kernel, const PadPolicy& pad, int stride = 1);

// Direct convolution (cross-correlation) over depth, height and width with
// stride 1 on depth and `stride` on the spatial axes. Every output element is
// summed in a fixed order: in-group, then kernel depth, row, column, then bias.
template <typename T>
BasicTensor<T> conv_forward(const BasicTensor<T>& input, const ConvWeights<T>& weights, const PadPolicy& pad,
                            int stride = 1);

template <typename T>
ConvGrads<T> conv_backward(const BasicTensor<T>& input, const ConvWeights<T>& weights, const PadPolicy& pad,
                           const BasicTensor<T>& gradOut, int stride = 1, bool needInput = true);

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& input);

// Gradient through relu given the relu *input*; zero where x <= 0.
template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& input, const BasicTensor<T>& gradOut);

template <typename T>
BasicTensor<T> temporal_extrapolate(const BasicTensor<T>& input, TemporalPad policy, int perSide);

// Adjoint of temporal_extrapolate: folds padded-depth gradients back onto the
// original slices (duplicated slices add into the outermost ones).
template <typename T>
BasicTensor<T> temporal_extrapolate_backward(const BasicTensor<T>& gradPadded, TemporalPad policy, int perSide);

// Channel c of each scale*scale block lands at spatial offset
// (c / scale, c % scale) inside the upscaled cell.
template <typename T>
BasicTensor<T> pixel_shuffle(const BasicTensor<T>& input, int scale);

template <typename T>
BasicTensor<T> pixel_unshuffle(const BasicTensor<T>& input, int scale);

}  // namespace vsr
