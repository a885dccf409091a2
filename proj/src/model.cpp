#include "vsr/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "vsr/clip_io.hpp"
#include "vsr/resample.hpp"

namespace vsr {

const char* to_string(LayerKind k) { return k == LayerKind::Conv3D ? "conv3d" : "conv2d"; }
const char* to_string(Activation a) { return a == Activation::ReLU ? "relu" : "none"; }
const char* to_string(ModelTask t) { return t == ModelTask::SuperResolution ? "sr" : "scene"; }
const char* to_string(FlattenOrder f) { return f == FlattenOrder::GroupMajor ? "group-major" : "depth-major"; }

namespace {

LayerSpec conv3d(int in, int out, TemporalPad pad) {
    return LayerSpec{LayerKind::Conv3D, in, out, 3, 3, 3, pad, Activation::ReLU, 1, 1};
}

LayerSpec conv2d(int in, int out) {
    return LayerSpec{LayerKind::Conv2D, in, out, 1, 3, 3, TemporalPad::None, Activation::ReLU, 1, 1};
}

std::string layer_name(std::size_t i) { return "layer " + std::to_string(i + 1); }

}  // namespace

const std::vector<std::string>& architecture_names() {
    static const std::vector<std::string> names{"cnn2d", "v1", "v2", "v3", "full"};
    return names;
}

ModelSpec build_architecture(const std::string& name, int scale) {
    if (scale < 2 || scale > 4) throw std::invalid_argument("scale must be 2, 3 or 4");
    const int outs = scale * scale;
    constexpr auto Z = TemporalPad::Zero;
    ModelSpec spec;
    spec.name = name;
    spec.scale = scale;
    if (name == "cnn2d") {
        spec.concatAfter = 0;
        spec.layers = {conv2d(5, 32), conv2d(32, 64), conv2d(64, 64), conv2d(64, 64), conv2d(64, 35), conv2d(35, outs)};
    } else if (name == "v1") {
        spec.concatAfter = 3;
        spec.layers = {conv3d(1, 32, Z), conv3d(32, 32, Z), conv3d(32, 16, Z),
                       conv2d(80, 64),   conv2d(64, 32),    conv2d(32, outs)};
    } else if (name == "v2") {
        spec.concatAfter = 4;
        spec.layers = {conv3d(1, 32, Z),  conv3d(32, 32, Z), conv3d(32, 32, Z),
                       conv3d(32, 16, Z), conv2d(80, 64),    conv2d(64, outs)};
    } else if (name == "v3") {
        spec.concatAfter = 5;
        spec.layers = {conv3d(1, 32, Z),  conv3d(32, 32, Z), conv3d(32, 32, Z),
                       conv3d(32, 32, Z), conv3d(32, 16, Z), conv2d(80, outs)};
    } else if (name == "full") {
        // Layer 5 drops the temporal extrapolation (depth 5 -> 3); the final
        // 2D layer sees the 32 x 3 flattened maps.
        spec.concatAfter = 5;
        spec.layers = {conv3d(1, 32, Z),  conv3d(32, 32, Z), conv3d(32, 32, Z),
                       conv3d(32, 32, Z), conv3d(32, 32, TemporalPad::None), conv2d(96, outs)};
    } else {
        throw std::invalid_argument("unknown architecture '" + name + "' (cnn2d, v1, v2, v3, full)");
    }
    spec.layers.back().activation = Activation::None;
    spec.validate();
    return spec;
}

void ModelSpec::validate() const {
    if (layers.empty()) throw std::invalid_argument("model has no layers");
    if (inputFrames < 1) throw std::invalid_argument("inputFrames must be >= 1");
    if (scale < 1) throw std::invalid_argument("scale must be >= 1");
    const int count = static_cast<int>(layers.size());
    if (concatAfter && (*concatAfter < 0 || *concatAfter >= count)) {
        throw std::invalid_argument("concat position " + std::to_string(*concatAfter) + " out of range");
    }
    int depth = inputFrames;
    int groups = 1;
    for (int i = 0; i < count; ++i) {
        const LayerSpec& l = layers[i];
        const std::string where = layer_name(i);
        if (concatAfter && *concatAfter == i) {
            groups *= depth;
            depth = 1;
        }
        if (concatAfter && i >= *concatAfter && l.kind != LayerKind::Conv2D) {
            throw std::invalid_argument(where + ": layers after the concat must be 2D");
        }
        if (l.inGroups != groups) {
            throw std::invalid_argument(where + ": expects " + std::to_string(l.inGroups) + " input groups, receives " +
                                        std::to_string(groups));
        }
        if (l.outGroups < 1 || l.kD < 1 || l.kH < 1 || l.kW < 1 || l.stride < 1 || l.spatialPad < 0) {
            throw std::invalid_argument(where + ": invalid extents");
        }
        if (l.kind == LayerKind::Conv2D) {
            if (l.kD != 1 || l.temporalPad != TemporalPad::None) {
                throw std::invalid_argument(where + ": 2D layer needs kernel depth 1 and no temporal padding");
            }
            if (depth != 1) throw std::invalid_argument(where + ": 2D layer applied to depth " + std::to_string(depth));
        }
        const int padded = depth + (l.temporalPad == TemporalPad::None ? 0 : 2);
        if (l.kD > padded) throw std::invalid_argument(where + ": kernel depth exceeds input depth");
        depth = padded - l.kD + 1;
        groups = l.outGroups;
        const bool last = i + 1 == count;
        if ((l.activation == Activation::None) != last) {
            throw std::invalid_argument(where + ": only the final layer may skip the activation");
        }
    }
    if (depth != 1) throw std::invalid_argument("final layer output has depth " + std::to_string(depth) + ", not 1");
    if (task == ModelTask::SuperResolution && groups != scale * scale) {
        throw std::invalid_argument("final layer must emit scale^2 = " + std::to_string(scale * scale) + " channels");
    }
}

std::vector<int> ModelSpec::depth_trace() const {
    std::vector<int> trace;
    int depth = inputFrames;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (concatAfter && *concatAfter == static_cast<int>(i)) depth = 1;
        const int padded = depth + (layers[i].temporalPad == TemporalPad::None ? 0 : 2);
        depth = padded - layers[i].kD + 1;
        trace.push_back(depth);
    }
    return trace;
}

long count_parameters(const ModelSpec& spec, bool includeBias) {
    long total = 0;
    for (const LayerSpec& l : spec.layers) total += l.weight_count() + (includeBias ? l.outGroups : 0);
    return total;
}

template <typename T>
BasicParams<T> zero_params(const ModelSpec& spec) {
    BasicParams<T> p;
    for (const LayerSpec& l : spec.layers) {
        p.layers.push_back(ConvWeights<T>{BasicTensor<T>(l.kernel_shape()), std::vector<T>(l.outGroups, T(0))});
    }
    return p;
}

template <typename T>
void check_params(const ModelSpec& spec, const BasicParams<T>& params) {
    if (params.layers.size() != spec.layers.size()) {
        throw std::invalid_argument("parameter set has " + std::to_string(params.layers.size()) + " layers, spec has " +
                                    std::to_string(spec.layers.size()));
    }
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const auto& w = params.layers[i];
        if (w.kernel.shape() != spec.layers[i].kernel_shape() ||
            w.bias.size() != static_cast<std::size_t>(spec.layers[i].outGroups)) {
            throw std::invalid_argument(layer_name(i) + ": parameter shape " + to_string(w.kernel.shape()) +
                                        " does not match spec " + to_string(spec.layers[i].kernel_shape()));
        }
        const auto finite = [](T v) { return std::isfinite(v); };
        if (!std::all_of(w.kernel.values().begin(), w.kernel.values().end(), finite) ||
            !std::all_of(w.bias.begin(), w.bias.end(), finite)) {
            throw std::invalid_argument(layer_name(i) + ": non-finite parameter");
        }
    }
}

template <typename T>
BasicTensor<T> flatten_depth(const BasicTensor<T>& x, FlattenOrder order) {
    const Shape s = x.shape();
    const Shape flat{s.n, s.c * s.d, 1, s.h, s.w};
    if (order == FlattenOrder::GroupMajor) return x.reshaped(flat);
    BasicTensor<T> out(flat);
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c)
            for (int d = 0; d < s.d; ++d) {
                const T* src = x.plane(n, c, d);
                std::copy(src, src + s.plane(), out.plane(n, d * s.c + c, 0));
            }
    return out;
}

template <typename T>
BasicTensor<T> unflatten_depth(const BasicTensor<T>& x, const Shape& s, FlattenOrder order) {
    if (order == FlattenOrder::GroupMajor) return x.reshaped(s);
    BasicTensor<T> out(s);
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c)
            for (int d = 0; d < s.d; ++d) {
                const T* src = x.plane(n, d * s.c + c, 0);
                std::copy(src, src + s.plane(), out.plane(n, c, d));
            }
    return out;
}

template <typename T>
BasicTensor<T> run_network(const ModelSpec& spec, const BasicParams<T>& params, const BasicTensor<T>& input,
                           ForwardCache<T>* cache, int stopAfter) {
    const Shape in = input.shape();
    if (in.c != 1 || in.d != spec.inputFrames) {
        throw std::invalid_argument("network input must be (N, 1, " + std::to_string(spec.inputFrames) +
                                    ", H, W), got " + to_string(in));
    }
    if (params.layers.size() != spec.layers.size()) throw std::invalid_argument("spec/params layer count mismatch");
    if (cache) *cache = ForwardCache<T>{};
    BasicTensor<T> x = input;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& l = spec.layers[i];
        if (spec.concatAfter && *spec.concatAfter == static_cast<int>(i)) {
            if (cache) cache->beforeFlatten = x.shape();
            x = flatten_depth(x, spec.flatten);
        }
        BasicTensor<T> y = conv_forward(x, params.layers[i], l.pad(), l.stride);
        if (cache) cache->inputs.push_back(std::move(x));
        if (l.activation == Activation::ReLU) {
            x = relu(y);
            if (cache) cache->preact.push_back(std::move(y));
        } else {
            x = std::move(y);
            if (cache) cache->preact.emplace_back();
        }
        if (stopAfter >= 0 && static_cast<int>(i) + 1 == stopAfter) break;
    }
    return x;
}

template <typename T>
BasicTensor<T> backprop_network(const ModelSpec& spec, const BasicParams<T>& params, const ForwardCache<T>& cache,
                                const BasicTensor<T>& gradOut, BasicParams<T>& grads, bool needInput) {
    if (cache.inputs.size() != spec.layers.size()) throw std::invalid_argument("backprop: incomplete forward cache");
    if (grads.layers.size() != spec.layers.size()) grads = zero_params<T>(spec);
    BasicTensor<T> g = gradOut;
    for (std::size_t k = spec.layers.size(); k-- > 0;) {
        const LayerSpec& l = spec.layers[k];
        if (l.activation == Activation::ReLU) g = relu_backward(cache.preact[k], g);
        const bool first = k == 0;
        ConvGrads<T> cg = conv_backward(cache.inputs[k], params.layers[k], l.pad(), g, l.stride, needInput || !first);
        auto& acc = grads.layers[k];
        for (std::size_t i = 0; i < acc.kernel.size(); ++i) acc.kernel[i] += cg.weights.kernel[i];
        for (std::size_t i = 0; i < acc.bias.size(); ++i) acc.bias[i] += cg.weights.bias[i];
        g = std::move(cg.input);
        if (spec.concatAfter && *spec.concatAfter == static_cast<int>(k) && !g.empty()) {
            g = unflatten_depth(g, cache.beforeFlatten, spec.flatten);
        }
    }
    return g;
}

template <typename T>
BasicTensor<T> sr_predict(const ModelSpec& spec, const BasicParams<T>& params, const BasicTensor<T>& lr,
                          const BasicTensor<T>& baseline, ForwardCache<T>* cache) {
    const BasicTensor<T> head = run_network(spec, params, lr, cache);
    BasicTensor<T> pred = pixel_shuffle(head, spec.scale);
    if (pred.shape() != baseline.shape()) {
        throw std::invalid_argument("sr_predict: baseline " + to_string(baseline.shape()) + " vs prediction " +
                                    to_string(pred.shape()));
    }
    for (std::size_t i = 0; i < pred.size(); ++i) pred[i] += baseline[i];
    return pred;
}

template <typename T>
BasicTensor<T> sr_backward(const ModelSpec& spec, const BasicParams<T>& params, const ForwardCache<T>& cache,
                           const BasicTensor<T>& gradPrediction, BasicParams<T>& grads, bool needInput) {
    return backprop_network(spec, params, cache, pixel_unshuffle(gradPrediction, spec.scale), grads, needInput);
}

Tensor stack_window(std::span<const Plane> frames) {
    if (frames.empty()) throw std::invalid_argument("empty window");
    const int w = frames[0].width;
    const int h = frames[0].height;
    Tensor t(Shape{1, 1, static_cast<int>(frames.size()), h, w});
    for (std::size_t d = 0; d < frames.size(); ++d) {
        if (frames[d].width != w || frames[d].height != h) {
            throw std::invalid_argument("window frames disagree in geometry");
        }
        std::copy(frames[d].data.begin(), frames[d].data.end(), t.plane(0, 0, static_cast<int>(d)));
    }
    return t;
}

Plane forward(const ModelParams& params, const ModelSpec& spec, std::span<const Plane> window) {
    if (spec.task != ModelTask::SuperResolution) throw std::invalid_argument("forward: not an SR model");
    if (static_cast<int>(window.size()) != spec.inputFrames) {
        throw std::invalid_argument("forward: window has " + std::to_string(window.size()) + " frames, model needs " +
                                    std::to_string(spec.inputFrames));
    }
    check_params(spec, params);
    const Tensor lr = stack_window(window);
    const Plane& middle = window[window.size() / 2];
    const int ow = middle.width * spec.scale;
    const int oh = middle.height * spec.scale;
    const Plane base = resize_plane(middle, ow, oh);
    const Tensor baseline(Shape{1, 1, 1, oh, ow}, base.data);
    const Tensor pred = sr_predict(spec, params, lr, baseline);
    Plane out(ow, oh);
    out.data = pred.storage();
    out.clamp01();
    return out;
}

Plane forward_multiscale(const ModelParams& params, const ModelSpec& spec, std::span<const Plane> window,
                         int requestedScale) {
    if (requestedScale < 2 || requestedScale > 4) throw std::invalid_argument("requested scale must be 2, 3 or 4");
    if (spec.scale != 2) throw std::invalid_argument("multi-scale inference needs a scale-2 model");
    if (requestedScale == 2) return forward(params, spec, window);
    if (window.empty()) throw std::invalid_argument("empty window");
    const int lw = window[0].width;
    const int lh = window[0].height;
    // x3 pre-upscales by 1.5 (rounded up for odd extents), x4 by 2.
    const int pw = (lw * requestedScale + 1) / 2;
    const int ph = (lh * requestedScale + 1) / 2;
    std::vector<Plane> pre;
    for (const Plane& p : window) pre.push_back(resize_plane(p, pw, ph));
    Plane hr = forward(params, spec, pre);
    const int tw = lw * requestedScale;
    const int th = lh * requestedScale;
    if (hr.width == tw && hr.height == th) return hr;
    return hr.crop(0, 0, tw, th);
}

int dump_feature_maps(const ModelParams& params, const ModelSpec& spec, std::span<const Plane> window, int layer,
                      const std::filesystem::path& dir) {
    if (layer < 1 || layer > static_cast<int>(spec.layers.size())) {
        throw std::out_of_range("feature dump layer " + std::to_string(layer) + " outside 1.." +
                                std::to_string(spec.layers.size()));
    }
    check_params(spec, params);
    const Tensor maps = run_network<float>(spec, params, stack_window(window), nullptr, layer);
    std::filesystem::create_directories(dir);
    const Shape s = maps.shape();
    int written = 0;
    char name[64];
    for (int c = 0; c < s.c; ++c)
        for (int d = 0; d < s.d; ++d) {
            const float* src = maps.plane(0, c, d);
            const auto [lo, hi] = std::minmax_element(src, src + s.plane());
            const float range = *hi - *lo;
            Plane img(s.w, s.h);
            for (std::size_t i = 0; i < s.plane(); ++i) img.data[i] = range > 0.0f ? (src[i] - *lo) / range : 0.0f;
            std::snprintf(name, sizeof(name), "layer%02d_g%03d_t%d.pgm", layer, c, d);
            write_pgm(img, dir / name);
            ++written;
        }
    return written;
}

#define VSR_INSTANTIATE_MODEL(T)                                                                                 \
    template BasicParams<T> zero_params<T>(const ModelSpec&);                                                    \
    template void check_params(const ModelSpec&, const BasicParams<T>&);                                         \
    template BasicTensor<T> flatten_depth(const BasicTensor<T>&, FlattenOrder);                                  \
    template BasicTensor<T> unflatten_depth(const BasicTensor<T>&, const Shape&, FlattenOrder);                  \
    template BasicTensor<T> run_network(const ModelSpec&, const BasicParams<T>&, const BasicTensor<T>&,          \
                                        ForwardCache<T>*, int);                                                  \
    template BasicTensor<T> backprop_network(const ModelSpec&, const BasicParams<T>&, const ForwardCache<T>&,    \
                                             const BasicTensor<T>&, BasicParams<T>&, bool);                      \
    template BasicTensor<T> sr_predict(const ModelSpec&, const BasicParams<T>&, const BasicTensor<T>&,           \
                                       const BasicTensor<T>&, ForwardCache<T>*);                                 \
    template BasicTensor<T> sr_backward(const ModelSpec&, const BasicParams<T>&, const ForwardCache<T>&,         \
                                        const BasicTensor<T>&, BasicParams<T>&, bool);

VSR_INSTANTIATE_MODEL(float)
VSR_INSTANTIATE_MODEL(double)

}  // namespace vsr
