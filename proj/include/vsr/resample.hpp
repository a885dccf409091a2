#pragma once

#include <vector>

#include "vsr/frame.hpp"

namespace vsr {

// Keys cubic convolution kernel. With antialias set, downscaling widens the
// support by the inverse scale so the filter also acts as a low-pass.
struct BicubicKernel {
    double a = -0.5;
    bool antialias = true;

    double operator()(double x) const;
};

// Contributions of source samples to one output sample along one axis.
// Source indices are already clamped to the valid range; weights sum to 1.
struct ResampleTaps {
    std::vector<int> index;
    std::vector<double> weight;
};

std::vector<ResampleTaps> resample_taps(int inSize, int outSize, const BicubicKernel& kernel = {});

// Separable resize (horizontal pass, then vertical), clamped to [0,1].
Plane resize_plane(const Plane& src, int outW, int outH, const BicubicKernel& kernel = {});

// Resizes luma, and chroma to the matching 4:2:0 extents when present.
Frame bicubic_resize(const Frame& frame, int outW, int outH, const BicubicKernel& kernel = {});

// Chroma planes resized to the chroma extents of a `scale`x larger frame;
// luma is carried over untouched.
Frame upscale_chroma(const Frame& frame, int scale, const BicubicKernel& kernel = {});

// Downscale by `scale` (dimensions must divide), then upscale back.
Plane bicubic_down_up(const Plane& hr, int scale, const BicubicKernel& kernel = {});

}  // namespace vsr
