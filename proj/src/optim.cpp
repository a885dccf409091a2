#include <cmath>

#include "vsr/random.hpp"
#include "vsr/train.hpp"

namespace vsr {

template <typename T>
LossResult<T> loss_mse(const BasicTensor<T>& pred, const BasicTensor<T>& target, LossNorm norm) {
    if (pred.shape() != target.shape()) {
        throw std::invalid_argument("loss_mse: prediction " + to_string(pred.shape()) + " vs target " +
                                    to_string(target.shape()));
    }
    const double denom = norm == LossNorm::PixelMean ? static_cast<double>(pred.size())
                                                     : static_cast<double>(pred.shape().n);
    LossResult<T> r;
    r.grad = BasicTensor<T>(pred.shape());
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = static_cast<double>(pred[i]) - static_cast<double>(target[i]);
        sum += d * d;
        r.grad[i] = static_cast<T>(d / denom);
    }
    r.loss = 0.5 * sum / denom;
    return r;
}

template LossResult<float> loss_mse(const Tensor&, const Tensor&, LossNorm);
template LossResult<double> loss_mse(const TensorD&, const TensorD&, LossNorm);

ModelParams xavier_init(const ModelSpec& spec, std::uint64_t seed) {
    Rng rng(derive_seed(seed, "xavier"));
    ModelParams params = zero_params<float>(spec);
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& l = spec.layers[i];
        const double receptive = static_cast<double>(l.kD) * l.kH * l.kW;
        const double bound = std::sqrt(6.0 / (l.inGroups * receptive + l.outGroups * receptive));
        for (float& w : params.layers[i].kernel.values()) w = static_cast<float>(rng.uniform(-bound, bound));
    }
    return params;
}

OptimState OptimState::create(const ModelSpec& spec, const AdamConfig& config) {
    OptimState s;
    s.config = config;
    s.m = zero_params<double>(spec);
    s.v = zero_params<double>(spec);
    return s;
}

namespace {

template <typename Span>
void require_finite(const Span& values, std::size_t layer, const char* what) {
    for (auto v : values) {
        if (!std::isfinite(v)) {
            throw TrainingError("non-finite " + std::string(what) + " gradient in layer " + std::to_string(layer + 1));
        }
    }
}

void adam_update(std::span<float> w, std::span<const float> g, std::span<double> m, std::span<double> v,
                 double lr, double decay, const AdamConfig& c, double correct1, double correct2) {
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double grad = static_cast<double>(g[i]) + decay * w[i];
        m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * grad;
        v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * grad * grad;
        const double mhat = m[i] / correct1;
        const double vhat = v[i] / correct2;
        w[i] = static_cast<float>(w[i] - lr * mhat / (std::sqrt(vhat) + c.eps));
    }
}

}  // namespace

void adam_step(ModelParams& params, const ModelParams& grads, OptimState& state) {
    if (params.layers.size() != grads.layers.size() || params.layers.size() != state.m.layers.size()) {
        throw std::invalid_argument("adam_step: parameter, gradient and state layer counts differ");
    }
    for (std::size_t k = 0; k < grads.layers.size(); ++k) {
        if (grads.layers[k].kernel.shape() != params.layers[k].kernel.shape() ||
            grads.layers[k].bias.size() != params.layers[k].bias.size()) {
            throw std::invalid_argument("adam_step: gradient shape mismatch in layer " + std::to_string(k + 1));
        }
        require_finite(grads.layers[k].kernel.values(), k, "kernel");
        require_finite(grads.layers[k].bias, k, "bias");
    }
    const AdamConfig& c = state.config;
    ++state.step;
    const double correct1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
    const double correct2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
    for (std::size_t k = 0; k < params.layers.size(); ++k) {
        auto& p = params.layers[k];
        const auto& g = grads.layers[k];
        adam_update(p.kernel.values(), g.kernel.values(), state.m.layers[k].kernel.values(),
                    state.v.layers[k].kernel.values(), c.lr, c.weightDecay, c, correct1, correct2);
        adam_update(p.bias, g.bias, state.m.layers[k].bias, state.v.layers[k].bias, c.lr * c.biasLrFactor, 0.0, c,
                    correct1, correct2);
    }
}

}  // namespace vsr
