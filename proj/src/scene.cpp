#include "vsr/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <stdexcept>

#include "vsr/random.hpp"
#include "vsr/resample.hpp"
#include "vsr/train.hpp"

namespace vsr {

const char* to_string(SceneLabel label) {
    switch (label) {
        case SceneLabel::ChangeAfter1: return "change-after-1";
        case SceneLabel::ChangeAfter2: return "change-after-2";
        case SceneLabel::ChangeAfter3: return "change-after-3";
        case SceneLabel::ChangeAfter4: return "change-after-4";
        case SceneLabel::NoChange: return "no-change";
    }
    return "no-change";
}

SceneLabel scene_label_from_index(int index) {
    if (index < 0 || index >= kSceneClasses) throw std::invalid_argument("scene label index out of range");
    return static_cast<SceneLabel>(index);
}

ModelSpec build_sf_net(int layers) {
    if (layers != 2 && layers != 3) throw std::invalid_argument("SF net has 2 or 3 layers");
    ModelSpec spec;
    spec.name = layers == 3 ? "sf3" : "sf2";
    spec.task = ModelTask::SceneClassifier;
    spec.concatAfter = 0;
    spec.scale = 1;
    const auto strided = [](int in, int out) {
        return LayerSpec{LayerKind::Conv2D, in, out, 1, 3, 3, TemporalPad::None, Activation::ReLU, 1, 2};
    };
    int h = kSfHeight, w = kSfWidth, groups = 16;
    const auto shrink = [](int x) { return (x + 2 - 3) / 2 + 1; };
    spec.layers.push_back(strided(5, 16));
    h = shrink(h);
    w = shrink(w);
    if (layers == 3) {
        spec.layers.push_back(strided(16, 32));
        h = shrink(h);
        w = shrink(w);
        groups = 32;
    }
    spec.layers.push_back(LayerSpec{LayerKind::Conv2D, groups, kSceneClasses, 1, h, w, TemporalPad::None,
                                    Activation::None, 0, 1});
    spec.validate();
    return spec;
}

std::array<double, kSceneClasses> softmax(std::span<const float> logits) {
    if (logits.size() != kSceneClasses) throw std::invalid_argument("softmax: expected 5 logits");
    std::array<double, kSceneClasses> p{};
    const double top = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (int i = 0; i < kSceneClasses; ++i) {
        p[i] = std::exp(static_cast<double>(logits[i]) - top);
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
}

int argmax(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("argmax of an empty list");
    int best = 0;
    for (int i = 1; i < static_cast<int>(values.size()); ++i)
        if (values[i] > values[best]) best = i;
    return best;
}

CrossEntropy cross_entropy(const Tensor& logits, std::span<const int> labels) {
    const Shape s = logits.shape();
    if (s.c != kSceneClasses || s.d != 1 || s.h != 1 || s.w != 1) {
        throw std::invalid_argument("cross_entropy: logits must be (N, 5, 1, 1, 1), got " + to_string(s));
    }
    if (labels.size() != static_cast<std::size_t>(s.n)) throw std::invalid_argument("cross_entropy: label count");
    CrossEntropy r;
    r.grad = Tensor(s);
    for (int n = 0; n < s.n; ++n) {
        const int y = labels[n];
        if (y < 0 || y >= kSceneClasses) throw std::invalid_argument("cross_entropy: label out of range");
        const auto p = softmax(std::span<const float>(logits.data() + static_cast<std::size_t>(n) * kSceneClasses,
                                                      kSceneClasses));
        r.loss -= std::log(std::max(p[y], 1e-300));
        for (int c = 0; c < kSceneClasses; ++c) {
            r.grad.at(n, c, 0, 0, 0) = static_cast<float>((p[c] - (c == y ? 1.0 : 0.0)) / s.n);
        }
    }
    r.loss /= s.n;
    return r;
}

std::array<Plane, 5> sf_frames(std::span<const Plane> window) {
    if (window.size() != 5) throw std::invalid_argument("scene window needs 5 frames");
    std::array<Plane, 5> out;
    for (int i = 0; i < 5; ++i) {
        const Plane& f = window[i];
        if (f.width < kSfWidth || f.height < kSfHeight) {
            throw std::invalid_argument("frame " + std::to_string(f.width) + "x" + std::to_string(f.height) +
                                        " is smaller than the " + std::to_string(kSfWidth) + "x" +
                                        std::to_string(kSfHeight) + " classifier input");
        }
        out[i] = resize_plane(f, kSfWidth, kSfHeight);
    }
    return out;
}

std::vector<SfSample> make_sf_dataset(std::span<const VideoClip> scenes, int perClass, std::uint64_t seed) {
    if (scenes.size() < 2) throw std::invalid_argument("scene dataset needs at least two scenes");
    if (perClass < 1) throw std::invalid_argument("scene dataset needs perClass >= 1");
    std::vector<std::vector<Plane>> small(scenes.size());
    for (std::size_t s = 0; s < scenes.size(); ++s) {
        scenes[s].validate();
        if (scenes[s].size() < 5) {
            throw std::invalid_argument("scene " + std::to_string(s) + " has fewer than 5 frames");
        }
    }
    const auto frame = [&](int scene, int index) -> const Plane& {
        auto& cache = small[scene];
        if (cache.empty()) {
            const VideoClip& clip = scenes[scene];
            if (clip.width() < kSfWidth || clip.height() < kSfHeight) {
                throw std::invalid_argument("scene " + std::to_string(scene) + " is smaller than the classifier input");
            }
            for (const Frame& f : clip.frames) cache.push_back(resize_plane(f.luma, kSfWidth, kSfHeight));
        }
        return cache[index];
    };

    Rng rng(derive_seed(seed, "sf-dataset"));
    const int count = static_cast<int>(scenes.size());
    std::vector<SfSample> out;
    out.reserve(static_cast<std::size_t>(perClass) * kSceneClasses);
    for (int cls = 0; cls < kSceneClasses; ++cls) {
        const SceneLabel label = scene_label_from_index(cls);
        const int fromA = label == SceneLabel::NoChange ? 5 : cls + 1;
        for (int i = 0; i < perClass; ++i) {
            SfSample s;
            s.label = label;
            s.sceneA = rng.below(count);
            s.sceneB = s.sceneA;
            if (fromA < 5) {
                s.sceneB = rng.below(count - 1);
                if (s.sceneB >= s.sceneA) ++s.sceneB;
            }
            const int lenA = static_cast<int>(scenes[s.sceneA].size());
            const int lenB = static_cast<int>(scenes[s.sceneB].size());
            const int startA = rng.below(lenA - fromA + 1);
            const int startB = fromA < 5 ? rng.below(lenB - (5 - fromA) + 1) : 0;
            for (int k = 0; k < 5; ++k) {
                s.frames[k] = k < fromA ? frame(s.sceneA, startA + k) : frame(s.sceneB, startB + k - fromA);
            }
            out.push_back(std::move(s));
        }
    }
    return out;
}

namespace {

Tensor sf_batch(std::span<const SfSample> samples, std::span<const std::size_t> order) {
    Tensor t(Shape{static_cast<int>(order.size()), 1, 5, kSfHeight, kSfWidth});
    for (std::size_t i = 0; i < order.size(); ++i) {
        const SfSample& s = samples[order[i]];
        for (int k = 0; k < 5; ++k) {
            if (s.frames[k].width != kSfWidth || s.frames[k].height != kSfHeight) {
                throw std::invalid_argument("scene sample frame is not 48x27");
            }
            std::copy(s.frames[k].data.begin(), s.frames[k].data.end(), t.plane(static_cast<int>(i), 0, k));
        }
    }
    return t;
}

std::array<double, kSceneClasses> logits_to_probs(const Tensor& logits, int n) {
    return softmax(std::span<const float>(logits.data() + static_cast<std::size_t>(n) * kSceneClasses, kSceneClasses));
}

}  // namespace

SceneDecision classify_window(const ModelParams& params, const ModelSpec& spec, std::span<const Plane> window) {
    if (spec.task != ModelTask::SceneClassifier) throw std::invalid_argument("checkpoint is not a scene classifier");
    const std::array<Plane, 5> frames = sf_frames(window);
    const Tensor logits = run_network(spec, params, stack_window(frames));
    SceneDecision d;
    d.probabilities = logits_to_probs(logits, 0);
    const int best = argmax(d.probabilities);
    d.label = scene_label_from_index(best);
    d.confidence = d.probabilities[best];
    return d;
}

std::array<bool, 5> same_scene_as_middle(SceneLabel label) {
    switch (label) {
        case SceneLabel::ChangeAfter1: return {false, true, true, true, true};
        case SceneLabel::ChangeAfter2: return {false, false, true, true, true};
        case SceneLabel::ChangeAfter3: return {true, true, true, false, false};
        case SceneLabel::ChangeAfter4: return {true, true, true, true, false};
        case SceneLabel::NoChange: break;
    }
    return {true, true, true, true, true};
}

std::array<int, 5> replacement_sources(SceneLabel label) {
    switch (label) {
        case SceneLabel::ChangeAfter1: return {1, 1, 2, 3, 4};
        case SceneLabel::ChangeAfter2: return {2, 2, 2, 3, 4};
        case SceneLabel::ChangeAfter3: return {0, 1, 2, 2, 2};
        case SceneLabel::ChangeAfter4: return {0, 1, 2, 3, 3};
        case SceneLabel::NoChange: break;
    }
    return {0, 1, 2, 3, 4};
}

std::array<Plane, 5> zero_cross_scene(const std::array<Plane, 5>& window, SceneLabel label) {
    const auto keep = same_scene_as_middle(label);
    std::array<Plane, 5> out = window;
    for (int k = 0; k < 5; ++k)
        if (!keep[k]) std::fill(out[k].data.begin(), out[k].data.end(), 0.0f);
    return out;
}

SfTrainResult train_sf(const ModelSpec& spec, std::span<const SfSample> data, const SfHyper& hyper,
                       const std::function<void(const SfLogRow&)>& onStep) {
    spec.validate();
    if (spec.task != ModelTask::SceneClassifier) throw std::invalid_argument("train_sf: not a scene classifier");
    if (data.empty()) throw std::invalid_argument("train_sf: empty dataset");
    if (hyper.batch < 1 || hyper.epochs < 0 || hyper.maxSteps < 0) throw std::invalid_argument("train_sf: bad hyperparameters");

    SfTrainResult result;
    result.params = xavier_init(spec, hyper.seed);
    OptimState state =
        OptimState::create(spec, AdamConfig{hyper.lr, 0.9, 0.999, 1e-8, hyper.biasLrFactor, hyper.weightDecay});
    Rng shuffler(derive_seed(hyper.seed, "sf-shuffle"));
    std::vector<std::size_t> order(data.size());
    bool done = false;
    for (int epoch = 0; epoch < hyper.epochs && !done; ++epoch) {
        std::iota(order.begin(), order.end(), 0);
        shuffler.shuffle(order);
        for (std::size_t start = 0; start < order.size() && !done; start += hyper.batch) {
            const std::size_t count = std::min<std::size_t>(hyper.batch, order.size() - start);
            const auto idx = std::span(order).subspan(start, count);
            const Tensor input = sf_batch(data, idx);
            std::vector<int> labels;
            for (std::size_t i : idx) labels.push_back(static_cast<int>(data[i].label));
            ForwardCache<float> cache;
            const Tensor logits = run_network(spec, result.params, input, &cache);
            const CrossEntropy ce = cross_entropy(logits, labels);
            if (!std::isfinite(ce.loss)) {
                throw TrainingError("scene loss became non-finite at step " + std::to_string(result.steps + 1));
            }
            ModelParams grads = zero_params<float>(spec);
            backprop_network(spec, result.params, cache, ce.grad, grads, false);
            adam_step(result.params, grads, state);
            ++result.steps;
            const SfLogRow row{result.steps, ce.loss};
            result.log.push_back(row);
            if (onStep) onStep(row);
            done = hyper.maxSteps > 0 && result.steps >= hyper.maxSteps;
        }
    }
    return result;
}

SfEvaluation evaluate_sf(const ModelParams& params, const ModelSpec& spec, std::span<const SfSample> samples) {
    SfEvaluation e;
    constexpr std::size_t kChunk = 256;
    long correct = 0;
    for (std::size_t start = 0; start < samples.size(); start += kChunk) {
        const std::size_t count = std::min(kChunk, samples.size() - start);
        std::vector<std::size_t> idx(count);
        std::iota(idx.begin(), idx.end(), start);
        const Tensor logits = run_network(spec, params, sf_batch(samples, idx));
        for (std::size_t i = 0; i < count; ++i) {
            const int truth = static_cast<int>(samples[start + i].label);
            const int pred = argmax(logits_to_probs(logits, static_cast<int>(i)));
            ++e.confusion[truth][pred];
            if (truth == pred) ++correct;
        }
    }
    e.count = static_cast<long>(samples.size());
    e.accuracy = e.count > 0 ? static_cast<double>(correct) / e.count : 0.0;
    return e;
}

void write_confusion_csv(const SfEvaluation& eval, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "truth";
    for (int c = 0; c < kSceneClasses; ++c) out << ',' << to_string(scene_label_from_index(c));
    out << '\n';
    for (int t = 0; t < kSceneClasses; ++t) {
        out << to_string(scene_label_from_index(t));
        for (int c = 0; c < kSceneClasses; ++c) out << ',' << eval.confusion[t][c];
        out << '\n';
    }
}

void write_sf_log(const std::vector<SfLogRow>& rows, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "step,loss\n" << std::setprecision(9);
    for (const SfLogRow& r : rows) out << r.step << ',' << r.loss << '\n';
}

}  // namespace vsr
