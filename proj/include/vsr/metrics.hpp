#pragma once

#include "vsr/frame.hpp"

namespace vsr {

// 10*log10(1/MSE) for [0,1] data after cropping `border` pixels per side.
// Identical inputs return +infinity.
double psnr(const Plane& a, const Plane& b, int border = 0);
double psnr(const Frame& a, const Frame& b, int border = 0);

struct SsimParams {
    int window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double range = 1.0;
};

// Mean SSIM over all fully-contained Gaussian windows of the cropped image.
double ssim(const Plane& a, const Plane& b, int border = 0, const SsimParams& params = {});
double ssim(const Frame& a, const Frame& b, int border = 0, const SsimParams& params = {});

// Normalized 1D Gaussian of length params.window.
std::vector<double> gaussian_window(const SsimParams& params);

}  // namespace vsr
