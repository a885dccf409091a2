#pragma once

#include "vsr/model.hpp"

// Slow direct-summation versions of the network kernels, used to check the
// optimized paths. Padding is resolved per tap by index arithmetic.
namespace vsr::reference {

TensorD conv(const TensorD& input, const ConvWeights<double>& weights, const PadPolicy& pad, int stride = 1);

// Plain 2D convolution of (N, C, 1, H, W) data with a (O, C, 1, kH, kW) kernel.
TensorD conv2d(const TensorD& input, const ConvWeights<double>& weights, int pad, int stride = 1);

// Network output before pixel shuffle; depth is flattened group-major
// (channel = group * depth + slice).
TensorD network(const ModelSpec& spec, const BasicParams<double>& params, const TensorD& input);

// Full SR prediction: shuffled residual plus baseline, unclamped.
TensorD sr_predict(const ModelSpec& spec, const BasicParams<double>& params, const TensorD& lr, const TensorD& baseline);

}  // namespace vsr::reference
