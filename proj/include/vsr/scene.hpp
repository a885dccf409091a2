#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "vsr/frame.hpp"
#include "vsr/model.hpp"

namespace vsr {

// ChangeAfterK: frames 1..K and K+1..5 of the window come from different scenes.
enum class SceneLabel { ChangeAfter1 = 0, ChangeAfter2, ChangeAfter3, ChangeAfter4, NoChange };

constexpr int kSceneClasses = 5;
constexpr int kSfWidth = 48;
constexpr int kSfHeight = 27;

const char* to_string(SceneLabel label);
SceneLabel scene_label_from_index(int index);

// Conv2D 5->16 (3x3, stride 2) [-> Conv2D 16->32 (3x3, stride 2)] -> dense
// layer to 5 logits, written as an unpadded convolution spanning the map.
ModelSpec build_sf_net(int layers);

std::array<double, kSceneClasses> softmax(std::span<const float> logits);

// Lowest index wins ties.
int argmax(std::span<const double> values);

// Mean cross-entropy over the batch and its gradient w.r.t. the logits
// (shape (N, 5, 1, 1, 1)).
struct CrossEntropy {
    double loss = 0.0;
    Tensor grad;
};
CrossEntropy cross_entropy(const Tensor& logits, std::span<const int> labels);

struct SfSample {
    std::array<Plane, 5> frames;  // kSfWidth x kSfHeight
    SceneLabel label = SceneLabel::NoChange;
    int sceneA = 0;
    int sceneB = 0;  // equals sceneA for NoChange
};

// Five frames resized to the classifier geometry. Throws when a source frame is
// smaller than kSfWidth x kSfHeight.
std::array<Plane, 5> sf_frames(std::span<const Plane> window);

// Balanced set: for each class, `perClass` windows cut from seeded random
// scenes and start positions. Every clip is one scene.
std::vector<SfSample> make_sf_dataset(std::span<const VideoClip> scenes, int perClass, std::uint64_t seed);

struct SceneDecision {
    SceneLabel label = SceneLabel::NoChange;
    double confidence = 0.0;
    std::array<double, kSceneClasses> probabilities{};
};

SceneDecision classify_window(const ModelParams& params, const ModelSpec& spec, std::span<const Plane> window);

// Which of the five frames share the middle frame's scene.
std::array<bool, 5> same_scene_as_middle(SceneLabel label);

// Index of the frame that replaces each window position.
std::array<int, 5> replacement_sources(SceneLabel label);

template <typename F>
std::array<F, 5> replace_frames(const std::array<F, 5>& window, SceneLabel label) {
    const std::array<int, 5> src = replacement_sources(label);
    return {window[src[0]], window[src[1]], window[src[2]], window[src[3]], window[src[4]]};
}

// Ablation: frames from the other scene become all-zero planes.
std::array<Plane, 5> zero_cross_scene(const std::array<Plane, 5>& window, SceneLabel label);

struct SfHyper {
    double lr = 1e-3;
    int batch = 64;
    int epochs = 30;
    long maxSteps = 0;
    std::uint64_t seed = 0;
    double weightDecay = 5e-4;
    double biasLrFactor = 0.1;
};

struct SfLogRow {
    long step = 0;
    double loss = 0.0;
    friend bool operator==(const SfLogRow&, const SfLogRow&) = default;
};

struct SfTrainResult {
    ModelParams params;
    std::vector<SfLogRow> log;
    long steps = 0;
};

SfTrainResult train_sf(const ModelSpec& spec, std::span<const SfSample> data, const SfHyper& hyper,
                       const std::function<void(const SfLogRow&)>& onStep = {});

struct SfEvaluation {
    double accuracy = 0.0;
    long count = 0;
    std::array<std::array<long, kSceneClasses>, kSceneClasses> confusion{};  // [truth][predicted]
};

SfEvaluation evaluate_sf(const ModelParams& params, const ModelSpec& spec, std::span<const SfSample> samples);

void write_confusion_csv(const SfEvaluation& eval, const std::filesystem::path& path);
void write_sf_log(const std::vector<SfLogRow>& rows, const std::filesystem::path& path);

}  // namespace vsr
