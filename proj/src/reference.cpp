#include "vsr/reference.hpp"

#include <algorithm>
#include <stdexcept>

namespace vsr::reference {

TensorD conv(const TensorD& input, const ConvWeights<double>& weights, const PadPolicy& pad, int stride) {
    const Shape in = input.shape();
    const Shape k = weights.kernel.shape();
    const Shape os = conv_output_shape(in, k, pad, stride);
    const int tp = pad.depth_pad();
    TensorD out(os);
    for (int n = 0; n < os.n; ++n)
        for (int o = 0; o < os.c; ++o)
            for (int d = 0; d < os.d; ++d)
                for (int h = 0; h < os.h; ++h)
                    for (int w = 0; w < os.w; ++w) {
                        double sum = weights.bias[o];
                        for (int c = 0; c < k.c; ++c)
                            for (int kd = 0; kd < k.d; ++kd) {
                                int sd = d + kd - tp;
                                if (sd < 0 || sd >= in.d) {
                                    if (pad.temporal != TemporalPad::Duplicate) continue;
                                    sd = std::clamp(sd, 0, in.d - 1);
                                }
                                for (int kh = 0; kh < k.h; ++kh) {
                                    const int sh = h * stride + kh - pad.spatial;
                                    if (sh < 0 || sh >= in.h) continue;
                                    for (int kw = 0; kw < k.w; ++kw) {
                                        const int sw = w * stride + kw - pad.spatial;
                                        if (sw < 0 || sw >= in.w) continue;
                                        sum += weights.kernel.at(o, c, kd, kh, kw) * input.at(n, c, sd, sh, sw);
                                    }
                                }
                            }
                        out.at(n, o, d, h, w) = sum;
                    }
    return out;
}

TensorD conv2d(const TensorD& input, const ConvWeights<double>& weights, int pad, int stride) {
    const Shape in = input.shape();
    const Shape k = weights.kernel.shape();
    if (in.d != 1 || k.d != 1) throw std::invalid_argument("reference conv2d: depth must be 1");
    if (in.c != k.c) throw std::invalid_argument("reference conv2d: channel mismatch");
    const int oh = (in.h + 2 * pad - k.h) / stride + 1;
    const int ow = (in.w + 2 * pad - k.w) / stride + 1;
    TensorD out(Shape{in.n, k.n, 1, oh, ow});
    for (int n = 0; n < in.n; ++n)
        for (int o = 0; o < k.n; ++o)
            for (int y = 0; y < oh; ++y)
                for (int x = 0; x < ow; ++x) {
                    double sum = weights.bias[o];
                    for (int c = 0; c < in.c; ++c)
                        for (int i = 0; i < k.h; ++i)
                            for (int j = 0; j < k.w; ++j) {
                                const int sy = y * stride + i - pad;
                                const int sx = x * stride + j - pad;
                                if (sy >= 0 && sy < in.h && sx >= 0 && sx < in.w) {
                                    sum += weights.kernel.at(o, c, 0, i, j) * input.at(n, c, 0, sy, sx);
                                }
                            }
                    out.at(n, o, 0, y, x) = sum;
                }
    return out;
}

TensorD network(const ModelSpec& spec, const BasicParams<double>& params, const TensorD& input) {
    if (params.layers.size() != spec.layers.size()) throw std::invalid_argument("reference: spec/params mismatch");
    TensorD x = input;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& l = spec.layers[i];
        if (spec.concatAfter && *spec.concatAfter == static_cast<int>(i)) {
            const Shape s = x.shape();
            TensorD flat(Shape{s.n, s.c * s.d, 1, s.h, s.w});
            for (int n = 0; n < s.n; ++n)
                for (int g = 0; g < s.c; ++g)
                    for (int d = 0; d < s.d; ++d)
                        for (int h = 0; h < s.h; ++h)
                            for (int w = 0; w < s.w; ++w) flat.at(n, g * s.d + d, 0, h, w) = x.at(n, g, d, h, w);
            x = std::move(flat);
        }
        x = conv(x, params.layers[i], l.pad(), l.stride);
        if (l.activation == Activation::ReLU)
            for (double& v : x.values()) v = v > 0.0 ? v : 0.0;
    }
    return x;
}

TensorD sr_predict(const ModelSpec& spec, const BasicParams<double>& params, const TensorD& lr, const TensorD& baseline) {
    const TensorD head = network(spec, params, lr);
    const Shape s = head.shape();
    const int r = spec.scale;
    TensorD out(Shape{s.n, s.c / (r * r), 1, s.h * r, s.w * r});
    if (out.shape() != baseline.shape()) throw std::invalid_argument("reference: baseline shape mismatch");
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c)
            for (int h = 0; h < s.h; ++h)
                for (int w = 0; w < s.w; ++w) {
                    const int sub = c % (r * r);
                    const int y = h * r + sub / r;
                    const int x = w * r + sub % r;
                    out.at(n, c / (r * r), 0, y, x) = head.at(n, c, 0, h, w) + baseline.at(n, c / (r * r), 0, y, x);
                }
    return out;
}

}  // namespace vsr::reference
