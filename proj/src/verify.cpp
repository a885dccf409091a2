#include "vsr/verify.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "vsr/random.hpp"
#include "vsr/reference.hpp"
#include "vsr/scene.hpp"

namespace vsr {

InjectedFault injected_fault_from_string(const std::string& name) {
    if (name == "none") return InjectedFault::None;
    if (name == "concat-order") return InjectedFault::ConcatOrder;
    if (name == "bias-grad") return InjectedFault::BiasGrad;
    throw std::invalid_argument("unknown fault '" + name + "' (none, concat-order, bias-grad)");
}

namespace {

std::string format(const char* fmt, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, a);
    return buf;
}

template <typename T>
BasicTensor<T> random_tensor(Shape s, Rng& rng, double lo, double hi) {
    BasicTensor<T> t(s);
    for (T& v : t.values()) v = static_cast<T>(rng.uniform(lo, hi));
    return t;
}

ConvWeights<float> random_weights(Shape k, Rng& rng) {
    ConvWeights<float> w{random_tensor<float>(k, rng, -0.5, 0.5), std::vector<float>(k.n)};
    for (float& b : w.bias) b = static_cast<float>(rng.uniform(-0.5, 0.5));
    return w;
}

double max_abs_diff(const Tensor& a, const TensorD& b) {
    if (a.shape() != b.shape()) return INFINITY;
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(static_cast<double>(a[i]) - b[i]));
    return m;
}

constexpr double kOracleTolerance = 1e-5;

}  // namespace

std::vector<CheckResult> parameter_count_checks() {
    const std::pair<const char*, long> expected[] = {
        {"cnn2d", 115020}, {"v1", 108000}, {"v2", 118368}, {"v3", 100512}, {"full", 114912}};
    std::vector<CheckResult> out;
    for (const auto& [name, count] : expected) {
        const long got = count_parameters(build_architecture(name, 2));
        out.push_back({std::string("parameter count ") + name, got == count,
                       std::to_string(got) + " weights (expected " + std::to_string(count) + ")"});
    }
    return out;
}

std::vector<CheckResult> gradient_checks(const VerifyOptions& options) {
    GradCheckOptions g;
    g.precision = options.precision;
    g.tolerance = options.precision == Precision::Float32 ? 1e-3 : 1e-6;
    if (options.fault == InjectedFault::BiasGrad) g.corruptBiasLayer = 1;
    const char* bits = options.precision == Precision::Float32 ? "32-bit" : "64-bit";

    std::vector<CheckResult> out;
    const auto record = [&](const std::string& name, const GradCheckReport& r) {
        std::string detail = "max relative error " + format("%.3g", r.maxError) + " over " +
                             std::to_string(r.checked) + " coordinates";
        if (r.skipped > 0) detail += " (" + std::to_string(r.skipped) + " at activation kinks skipped)";
        for (const LayerGradError& l : r.layers)
            if (!l.passed) detail += "; failing: " + l.name;
        out.push_back({"gradient " + name + " " + bits, r.passed, detail});
    };
    for (const std::string& name : architecture_names()) {
        record(name, grad_check(miniature(build_architecture(name, 2)), options.seed, g));
    }
    GradCheckOptions sf = g;
    sf.inputHeight = kSfHeight;
    sf.inputWidth = kSfWidth;
    sf.maxPerTensor = 200;
    record("sf3", grad_check(miniature(build_sf_net(3)), options.seed, sf));
    return out;
}

std::vector<CheckResult> conv_oracle_checks(const VerifyOptions& options) {
    Rng rng(derive_seed(options.seed, "conv-oracle"));
    double worst = 0.0;
    int failures = 0;
    int counts[3] = {0, 0, 0};
    int planar = 0;
    for (int i = 0; i < options.oracleConfigs; ++i) {
        const bool is3d = i % 2 == 0;
        const auto policy = static_cast<TemporalPad>(i / 2 % 3);
        const int n = 1 + rng.below(2);
        const int c = 1 + rng.below(4);
        const int o = 1 + rng.below(4);
        const int kd = is3d ? 1 + rng.below(3) : 1;
        const int kh = 1 + 2 * rng.below(2);
        const int kw = 1 + 2 * rng.below(2);
        PadPolicy pad{rng.below(3), is3d ? policy : TemporalPad::None, 1};
        const int depth = is3d ? std::max(kd, 2 + rng.below(5)) : 1;
        const int stride = rng.below(5) == 0 ? 2 : 1;
        const int h = std::max(kh, 3 + rng.below(8));
        const int w = std::max(kw, 3 + rng.below(8));
        const Tensor x = random_tensor<float>(Shape{n, c, depth, h, w}, rng, 0.0, 1.0);
        const ConvWeights<float> wt = random_weights(Shape{o, c, kd, kh, kw}, rng);
        const Tensor fast = conv_forward(x, wt, pad, stride);
        const double err = max_abs_diff(fast, reference::conv(x.cast<double>(), wt.cast<double>(), pad, stride));
        worst = std::max(worst, err);
        if (!(err <= kOracleTolerance)) ++failures;
        ++counts[static_cast<int>(pad.temporal)];
        if (!is3d) {
            const double err2 = max_abs_diff(fast, reference::conv2d(x.cast<double>(), wt.cast<double>(), pad.spatial, stride));
            worst = std::max(worst, err2);
            if (!(err2 <= kOracleTolerance)) ++failures;
            ++planar;
        }
    }
    const std::string detail = std::to_string(options.oracleConfigs) + " configurations (" + std::to_string(counts[0]) +
                               " no / " + std::to_string(counts[1]) + " zero / " + std::to_string(counts[2]) +
                               " duplicate temporal padding, " + std::to_string(planar) +
                               " also against the 2D oracle), max abs error " + format("%.3g", worst);
    return {{"conv oracle", failures == 0, detail}};
}

std::vector<CheckResult> network_oracle_checks(const VerifyOptions& options) {
    std::vector<CheckResult> out;
    Rng rng(derive_seed(options.seed, "network-oracle"));
    for (const std::string& name : architecture_names()) {
        ModelSpec spec = miniature(build_architecture(name, 2));
        BasicParams<float> params = xavier_init(spec, options.seed);
        for (auto& l : params.layers)
            for (float& b : l.bias) b = static_cast<float>(rng.uniform(-0.1, 0.1));
        const Tensor lr = random_tensor<float>(Shape{2, 1, 5, 6, 7}, rng, 0.0, 1.0);
        const Tensor base = random_tensor<float>(Shape{2, 1, 1, 12, 14}, rng, 0.0, 1.0);
        const TensorD expected = reference::sr_predict(spec, params.cast<double>(), lr.cast<double>(), base.cast<double>());
        ModelSpec run = spec;
        if (options.fault == InjectedFault::ConcatOrder) run.flatten = FlattenOrder::DepthMajor;
        const double err = max_abs_diff(sr_predict(run, params, lr, base), expected);
        out.push_back({"forward oracle " + name, err <= kOracleTolerance, "max abs error " + format("%.3g", err)});
    }
    return out;
}

std::vector<CheckResult> pixel_shuffle_checks(std::uint64_t seed) {
    Rng rng(derive_seed(seed, "shuffle-check"));
    bool ok = true;
    for (int s = 1; s <= 4; ++s) {
        const Tensor x = random_tensor<float>(Shape{2, 2 * s * s, 1, 5, 6}, rng, -1.0, 1.0);
        ok = ok && pixel_unshuffle(pixel_shuffle(x, s), s) == x;
        const Tensor y = random_tensor<float>(Shape{2, 1, 1, 5 * s, 6 * s}, rng, -1.0, 1.0);
        ok = ok && pixel_shuffle(pixel_unshuffle(y, s), s) == y;
    }
    return {{"pixel shuffle roundtrip", ok, "scales 1-4, bit-exact"}};
}

std::vector<CheckResult> replacement_checks() {
    const std::array<int, 5> frames{1, 2, 3, 4, 5};
    const std::pair<SceneLabel, std::array<int, 5>> table[] = {
        {SceneLabel::ChangeAfter1, {2, 2, 3, 4, 5}}, {SceneLabel::ChangeAfter2, {3, 3, 3, 4, 5}},
        {SceneLabel::ChangeAfter3, {1, 2, 3, 3, 3}}, {SceneLabel::ChangeAfter4, {1, 2, 3, 4, 4}},
        {SceneLabel::NoChange, {1, 2, 3, 4, 5}}};
    bool exact = true;
    bool idempotent = true;
    for (const auto& [label, expected] : table) {
        const auto once = replace_frames(frames, label);
        exact = exact && once == expected;
        idempotent = idempotent && replace_frames(once, label) == once;
    }
    return {{"frame replacement table", exact, "4 scene-change rewrites and no-change identity"},
            {"frame replacement idempotence", idempotent, "all 5 labels"}};
}

std::vector<CheckResult> run_self_checks(const VerifyOptions& options) {
    std::vector<CheckResult> all;
    const auto append = [&](std::vector<CheckResult> part) {
        for (auto& r : part) all.push_back(std::move(r));
    };
    append(parameter_count_checks());
    append(gradient_checks(options));
    append(conv_oracle_checks(options));
    append(network_oracle_checks(options));
    append(pixel_shuffle_checks(options.seed));
    append(replacement_checks());
    return all;
}

}  // namespace vsr
