#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vsr/frame.hpp"
#include "vsr/model.hpp"

namespace vsr {

class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// --- dataset ---------------------------------------------------------------

struct SourceId {
    int video = 0;
    int frame = 0;
    int x = 0;  // HR crop origin
    int y = 0;
    friend bool operator==(const SourceId&, const SourceId&) = default;
};

struct WindowSample {
    std::array<Plane, 5> lr;
    Plane hr;  // middle frame, scale x the LR extents
    SourceId source;
    friend bool operator==(const WindowSample&, const WindowSample&) = default;
};

struct DatasetRecipe {
    int frameStride = 5;
    int subimagesPerFrame = 10;
    int lrPatchSize = 80;
    int scale = 2;

    void validate() const;
};

// Every frameStride-th frame of each clip becomes a center; each center yields
// subimagesPerFrame non-overlapping HR crops (origins on the LR grid) and the
// co-located crops of its five bicubic-downscaled neighbours. Each clip is
// treated as one scene; windows at the clip ends replicate the edge frame.
std::vector<WindowSample> extract_dataset(std::span<const VideoClip> clips, const DatasetRecipe& recipe,
                                          std::uint64_t seed);

// LR version of a whole frame: the HR frame cropped to a multiple of `scale`
// and bicubic-downscaled.
Plane downscale_frame(const Plane& hr, int scale);

// Full-frame windows for evaluation: every `stride`-th frame of the clip.
std::vector<WindowSample> frame_windows(const VideoClip& clip, int scale, int stride = 1, int video = 0);

// --- loss / init / optimizer --------------------------------------------------

enum class LossNorm {
    PixelMean,  // (1/2) * mean squared error over every pixel of the batch
    SampleSum,  // (1/2n) * sum over samples of the squared L2 norm
};

template <typename T>
struct LossResult {
    double loss = 0.0;
    BasicTensor<T> grad;
};

template <typename T>
LossResult<T> loss_mse(const BasicTensor<T>& pred, const BasicTensor<T>& target, LossNorm norm = LossNorm::PixelMean);

// Uniform on +-sqrt(6 / (fanIn + fanOut)), fan = groups * kD * kH * kW; zero biases.
ModelParams xavier_init(const ModelSpec& spec, std::uint64_t seed);

struct AdamConfig {
    double lr = 5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double biasLrFactor = 0.1;
    double weightDecay = 5e-4;  // filters only; biases are not decayed
};

struct OptimState {
    AdamConfig config;
    long step = 0;
    BasicParams<double> m;
    BasicParams<double> v;

    static OptimState create(const ModelSpec& spec, const AdamConfig& config);
};

// One bias-corrected Adam update. Weight decay is added to the filter
// gradient before the moment update. Throws TrainingError naming the layer
// when a gradient is not finite.
void adam_step(ModelParams& params, const ModelParams& grads, OptimState& state);

// --- training loop -----------------------------------------------------------

struct TrainHyper {
    double lr = 5e-4;
    int batch = 32;
    int epochs = 1;
    long maxSteps = 0;  // 0: no limit beyond epochs
    std::uint64_t seed = 0;
    int valEvery = 0;         // steps between validation passes (0: final only)
    int checkpointEvery = 0;  // steps between periodic checkpoints (0: final only)
    LossNorm norm = LossNorm::PixelMean;
    double weightDecay = 5e-4;
    double biasLrFactor = 0.1;
};

struct TrainLogRow {
    long step = 0;
    double loss = 0.0;
    std::optional<double> valPsnr;
    friend bool operator==(const TrainLogRow&, const TrainLogRow&) = default;
};

struct TrainOutputs {
    std::filesystem::path checkpoint;  // empty: no checkpoint written
    std::filesystem::path log;         // empty: no CSV log
    std::function<void(const TrainLogRow&)> onStep;
};

struct TrainResult {
    ModelParams params;
    std::vector<TrainLogRow> log;
    long steps = 0;
    std::optional<double> valPsnr;
};

// Batch tensors for a set of samples: LR windows, bicubic baselines, targets.
struct SrBatch {
    Tensor lr;
    Tensor baseline;
    Tensor target;
};
SrBatch make_batch(std::span<const WindowSample> samples, std::span<const std::size_t> order, int scale);

// Mean PSNR (border = scale) of the clamped network output on full windows.
double validation_psnr(const ModelSpec& spec, const ModelParams& params, std::span<const WindowSample> samples);
// Same for the plain bicubic upscale of the middle frame.
double bicubic_psnr(std::span<const WindowSample> samples, int scale);

TrainResult train(const ModelSpec& spec, std::span<const WindowSample> data, std::span<const WindowSample> validation,
                  const TrainHyper& hyper, const TrainOutputs& outputs = {},
                  std::optional<ModelParams> initial = std::nullopt);

void write_train_log(const std::vector<TrainLogRow>& rows, const std::filesystem::path& path);

// --- gradient verification ---------------------------------------------------

enum class Precision { Float32, Float64 };

struct GradCheckOptions {
    Precision precision = Precision::Float64;
    double tolerance = 1e-6;
    double epsilon = 0.0;  // 0: 1e-3 in 32-bit, 1e-5 in 64-bit
    int lrSize = 4;             // SR input extent
    int inputHeight = 0;        // classifier input extents
    int inputWidth = 0;
    int maxPerTensor = 0;       // 0: probe every coordinate
    int corruptBiasLayer = -1;  // fault injection: perturb this layer's bias gradient
    bool linear = false;        // drop every activation
};

struct LayerGradError {
    std::string name;
    double kernel = 0.0;
    double bias = 0.0;
    bool passed = true;
};

struct GradCheckReport {
    std::vector<LayerGradError> layers;
    double input = 0.0;
    double maxError = 0.0;
    long checked = 0;
    long skipped = 0;  // coordinates whose perturbation crossed a ReLU kink
    bool passed = true;
};

// Same topology with every hidden layer narrowed to at most `width` groups.
ModelSpec miniature(const ModelSpec& spec, int width = 3);

// |analytic - numeric| / max(|analytic|, |numeric|, floor), with the floor at
// 1 in 32-bit and 1e-3 in 64-bit.
double gradient_error(double analytic, double numeric, Precision precision);

GradCheckReport grad_check(const ModelSpec& spec, std::uint64_t seed, const GradCheckOptions& options = {});

}  // namespace vsr
