#include <algorithm>
#include <cmath>

#include "vsr/random.hpp"
#include "vsr/train.hpp"

namespace vsr {

ModelSpec miniature(const ModelSpec& spec, int width) {
    if (width < 1) throw std::invalid_argument("miniature: width must be >= 1");
    ModelSpec m = spec;
    m.name = spec.name + "-mini";
    int groups = 1;
    int depth = m.inputFrames;
    for (std::size_t i = 0; i < m.layers.size(); ++i) {
        LayerSpec& l = m.layers[i];
        if (m.concatAfter && *m.concatAfter == static_cast<int>(i)) {
            groups *= depth;
            depth = 1;
        }
        l.inGroups = groups;
        if (i + 1 < m.layers.size()) l.outGroups = std::min(l.outGroups, width);
        depth = depth + (l.temporalPad == TemporalPad::None ? 0 : 2) - l.kD + 1;
        groups = l.outGroups;
    }
    m.validate();
    return m;
}

double gradient_error(double analytic, double numeric, Precision precision) {
    const double floor = precision == Precision::Float32 ? 1.0 : 1e-3;
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

namespace {

template <typename T>
struct Probe {
    const ModelSpec& spec;
    BasicTensor<T> input;
    BasicTensor<T> baseline;  // SR only
    BasicTensor<T> projection;

    BasicTensor<T> run(const BasicParams<T>& params, ForwardCache<T>* cache) const {
        if (spec.task == ModelTask::SuperResolution) return sr_predict(spec, params, input, baseline, cache);
        return run_network(spec, params, input, cache);
    }

    // Projected output and the ReLU on/off pattern that produced it.
    std::pair<double, std::vector<char>> objective(const BasicParams<T>& params) const {
        ForwardCache<T> cache;
        const BasicTensor<T> out = run(params, &cache);
        double sum = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) sum += static_cast<double>(projection[i]) * out[i];
        std::vector<char> mask;
        for (std::size_t k = 0; k < spec.layers.size(); ++k) {
            if (spec.layers[k].activation != Activation::ReLU) continue;
            for (T v : cache.preact[k].values()) mask.push_back(v > T(0));
        }
        return {sum, std::move(mask)};
    }
};

template <typename T>
BasicTensor<T> random_tensor(Shape s, Rng& rng, double lo, double hi) {
    BasicTensor<T> t(s);
    for (T& v : t.values()) v = static_cast<T>(rng.uniform(lo, hi));
    return t;
}

template <typename T>
GradCheckReport check(const ModelSpec& spec, std::uint64_t seed, const GradCheckOptions& opt) {
    Rng rng(derive_seed(seed, "gradcheck"));
    const Precision precision = std::is_same_v<T, float> ? Precision::Float32 : Precision::Float64;
    const double eps = opt.epsilon > 0 ? opt.epsilon : (precision == Precision::Float32 ? 1e-3 : 1e-5);

    BasicParams<T> params = xavier_init(spec, seed).template cast<T>();
    for (auto& l : params.layers)
        for (T& b : l.bias) b = static_cast<T>(rng.uniform(-0.1, 0.1));

    Probe<T> probe{spec, {}, {}, {}};
    int inH = opt.lrSize;
    int inW = opt.lrSize;
    if (spec.task == ModelTask::SceneClassifier) {
        inH = opt.inputHeight > 0 ? opt.inputHeight : inH;
        inW = opt.inputWidth > 0 ? opt.inputWidth : inW;
    }
    probe.input = random_tensor<T>(Shape{1, 1, spec.inputFrames, inH, inW}, rng, 0.0, 1.0);
    if (spec.task == ModelTask::SuperResolution) {
        probe.baseline = random_tensor<T>(Shape{1, 1, 1, inH * spec.scale, inW * spec.scale}, rng, 0.0, 1.0);
    }
    const Shape outShape = probe.run(params, nullptr).shape();
    probe.projection = random_tensor<T>(outShape, rng, -1.0, 1.0);

    ForwardCache<T> cache;
    probe.run(params, &cache);
    BasicParams<T> grads = zero_params<T>(spec);
    const BasicTensor<T> gradInput =
        spec.task == ModelTask::SuperResolution ? sr_backward(spec, params, cache, probe.projection, grads)
                                                : backprop_network(spec, params, cache, probe.projection, grads);
    if (opt.corruptBiasLayer >= 0 && opt.corruptBiasLayer < static_cast<int>(grads.layers.size())) {
        grads.layers[opt.corruptBiasLayer].bias[0] += T(1);
    }
    const std::vector<char> baseMask = probe.objective(params).second;

    GradCheckReport report;
    // Returns the error for one coordinate, or a negative value when skipped.
    const auto probe_coordinate = [&](T& slot, double analytic, BasicParams<T>& p) -> double {
        const T saved = slot;
        slot = static_cast<T>(saved + eps);
        const T up = slot;
        const auto [lp, mp] = probe.objective(p);
        slot = static_cast<T>(saved - eps);
        const T down = slot;
        const auto [lm, mm] = probe.objective(p);
        slot = saved;
        if (mp != baseMask || mm != baseMask) {
            ++report.skipped;
            return -1.0;
        }
        ++report.checked;
        const double numeric = (lp - lm) / (static_cast<double>(up) - static_cast<double>(down));
        return gradient_error(analytic, numeric, precision);
    };
    const auto pick = [&](std::size_t count) {
        std::vector<std::size_t> idx(count);
        for (std::size_t i = 0; i < count; ++i) idx[i] = i;
        if (opt.maxPerTensor > 0 && count > static_cast<std::size_t>(opt.maxPerTensor)) {
            rng.shuffle(idx);
            idx.resize(opt.maxPerTensor);
            std::sort(idx.begin(), idx.end());
        }
        return idx;
    };

    for (std::size_t k = 0; k < spec.layers.size(); ++k) {
        const LayerSpec& l = spec.layers[k];
        LayerGradError e;
        e.name = "layer " + std::to_string(k + 1) + " (" + to_string(l.kind) + " " + std::to_string(l.inGroups) +
                 "->" + std::to_string(l.outGroups) + ")";
        for (std::size_t i : pick(params.layers[k].kernel.size())) {
            const double err = probe_coordinate(params.layers[k].kernel[i], grads.layers[k].kernel[i], params);
            e.kernel = std::max(e.kernel, err);
        }
        for (std::size_t i : pick(params.layers[k].bias.size())) {
            const double err = probe_coordinate(params.layers[k].bias[i], grads.layers[k].bias[i], params);
            e.bias = std::max(e.bias, err);
        }
        e.passed = e.kernel < opt.tolerance && e.bias < opt.tolerance;
        report.maxError = std::max({report.maxError, e.kernel, e.bias});
        report.passed = report.passed && e.passed;
        report.layers.push_back(e);
    }

    // Input gradient: perturb the probe input in place.
    for (std::size_t i : pick(probe.input.size())) {
        const double err = probe_coordinate(probe.input[i], gradInput[i], params);
        report.input = std::max(report.input, err);
    }
    report.maxError = std::max(report.maxError, report.input);
    report.passed = report.passed && report.input < opt.tolerance;
    return report;
}

}  // namespace

GradCheckReport grad_check(const ModelSpec& spec, std::uint64_t seed, const GradCheckOptions& options) {
    ModelSpec probeSpec = spec;
    if (options.linear) {
        for (LayerSpec& l : probeSpec.layers) l.activation = Activation::None;
    } else {
        probeSpec.validate();
    }
    if (options.precision == Precision::Float32) return check<float>(probeSpec, seed, options);
    return check<double>(probeSpec, seed, options);
}

}  // namespace vsr
