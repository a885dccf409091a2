#include "vsr/resample.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace vsr {

double BicubicKernel::operator()(double x) const {
    x = std::abs(x);
    if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
    if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
    return 0.0;
}

std::vector<ResampleTaps> resample_taps(int inSize, int outSize, const BicubicKernel& kernel) {
    if (inSize < 1 || outSize < 1) throw std::invalid_argument("resample: sizes must be >= 1");
    const double scale = static_cast<double>(outSize) / inSize;
    const double kernelScale = (kernel.antialias && scale < 1.0) ? scale : 1.0;
    const double support = 2.0 / kernelScale;
    std::vector<ResampleTaps> taps(outSize);
    for (int i = 0; i < outSize; ++i) {
        const double center = (i + 0.5) / scale - 0.5;
        const int first = static_cast<int>(std::floor(center - support));
        const int last = static_cast<int>(std::ceil(center + support));
        ResampleTaps& t = taps[i];
        double sum = 0.0;
        for (int j = first; j <= last; ++j) {
            const double w = kernel((j - center) * kernelScale);
            if (w == 0.0) continue;
            const int src = std::clamp(j, 0, inSize - 1);
            // Merge repeated edge indices so each source sample appears once.
            if (!t.index.empty() && t.index.back() == src) {
                t.weight.back() += w;
            } else {
                t.index.push_back(src);
                t.weight.push_back(w);
            }
            sum += w;
        }
        for (double& w : t.weight) w /= sum;
    }
    return taps;
}

Plane resize_plane(const Plane& src, int outW, int outH, const BicubicKernel& kernel) {
    if (outW < 1 || outH < 1) throw std::invalid_argument("resize: output extents must be >= 1");
    if (outW == src.width && outH == src.height) return src;
    const auto tx = resample_taps(src.width, outW, kernel);
    const auto ty = resample_taps(src.height, outH, kernel);

    std::vector<double> rows(static_cast<std::size_t>(src.height) * outW);
    for (int y = 0; y < src.height; ++y) {
        const float* in = src.data.data() + static_cast<std::size_t>(y) * src.width;
        double* out = rows.data() + static_cast<std::size_t>(y) * outW;
        for (int x = 0; x < outW; ++x) {
            double acc = 0.0;
            const ResampleTaps& t = tx[x];
            for (std::size_t k = 0; k < t.index.size(); ++k) acc += t.weight[k] * in[t.index[k]];
            out[x] = acc;
        }
    }
    Plane dst(outW, outH);
    for (int y = 0; y < outH; ++y) {
        const ResampleTaps& t = ty[y];
        for (int x = 0; x < outW; ++x) {
            double acc = 0.0;
            for (std::size_t k = 0; k < t.index.size(); ++k) {
                acc += t.weight[k] * rows[static_cast<std::size_t>(t.index[k]) * outW + x];
            }
            dst.at(x, y) = static_cast<float>(std::clamp(acc, 0.0, 1.0));
        }
    }
    return dst;
}

Frame bicubic_resize(const Frame& frame, int outW, int outH, const BicubicKernel& kernel) {
    Frame out;
    out.luma = resize_plane(frame.luma, outW, outH, kernel);
    if (frame.chroma) {
        const int cw = chroma_extent(outW);
        const int ch = chroma_extent(outH);
        out.chroma = std::array<Plane, 2>{resize_plane((*frame.chroma)[0], cw, ch, kernel),
                                          resize_plane((*frame.chroma)[1], cw, ch, kernel)};
    }
    return out;
}

Frame upscale_chroma(const Frame& frame, int scale, const BicubicKernel& kernel) {
    if (!frame.chroma) throw std::invalid_argument("upscale_chroma: frame has no chroma");
    if (scale < 1) throw std::invalid_argument("upscale_chroma: scale must be >= 1");
    Frame out;
    out.luma = frame.luma;
    const int cw = chroma_extent(frame.width() * scale);
    const int ch = chroma_extent(frame.height() * scale);
    out.chroma = std::array<Plane, 2>{resize_plane((*frame.chroma)[0], cw, ch, kernel),
                                      resize_plane((*frame.chroma)[1], cw, ch, kernel)};
    return out;
}

Plane bicubic_down_up(const Plane& hr, int scale, const BicubicKernel& kernel) {
    if (scale < 1 || hr.width % scale != 0 || hr.height % scale != 0) {
        throw std::invalid_argument("bicubic_down_up: " + std::to_string(hr.width) + "x" + std::to_string(hr.height) +
                                    " not divisible by " + std::to_string(scale));
    }
    const Plane lr = resize_plane(hr, hr.width / scale, hr.height / scale, kernel);
    return resize_plane(lr, hr.width, hr.height, kernel);
}

}  // namespace vsr
